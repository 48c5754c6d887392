//! Group packages: the self-contained instantiation of one surrogate group
//! (field, matrices, anchors, class tables, changing-post table, membership
//! table, optional kernel data) as a directory of text files.
//!
//! A package directory holds `manifest.txt`, `matrices.txt`, `posttable.txt`,
//! `membership.txt` and optionally `kernel.txt`. The builder additionally
//! writes `oracle.txt` next to them; the engine never reads that file.

use crate::action::{AnchorPair, ClassInvariantTable, SignatureKey};
use crate::error::{Error, Result};
use crate::island::{
    ChangingPostTable, Fingerprint, GenLetter, GenWord, IslandElem, KernelData, MembershipTable,
    PostEntry,
};
use crate::linalg::{parse_matrix_blocks, FieldSpec, FpMat, FpVec};
use crate::word::{Letter, Word};
use once_cell::sync::OnceCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const MAX_DIMENSION: usize = 256;
pub const FORMAT_TAG: &str = "islander-package-v1";

/// A loaded package. All data is immutable after construction; the two
/// caches are filled once on first use.
pub struct GroupPackage {
    name: String,
    field: FieldSpec,
    dim: usize,
    a: IslandElem,
    b: IslandElem,
    a_inv: FpMat,
    b_inv: FpMat,
    z: IslandElem,
    t_mat: FpMat,
    t_inv_mat: FpMat,
    anchors: AnchorPair,
    group_order: u64,
    island_order: u64,
    max_order: u32,
    letter_bytes: usize,
    class_k: String,
    class_table: ClassInvariantTable,
    post_table: ChangingPostTable,
    membership: MembershipTable,
    kernel: Option<KernelData>,
    named: BTreeMap<String, FpMat>,
    island_cache: OnceCell<Vec<IslandElem>>,
    kernel_map: OnceCell<BTreeMap<String, IslandElem>>,
}

/// Everything the builder hands over when assembling a package in memory.
pub struct PackageParts {
    pub name: String,
    pub field: FieldSpec,
    pub dim: usize,
    pub a_name: String,
    pub b_name: String,
    pub z_name: String,
    pub t_name: String,
    pub anchors: AnchorPair,
    pub group_order: u64,
    pub island_order: u64,
    pub max_order: u32,
    pub letter_bytes: usize,
    pub class_k: String,
    pub class_table: ClassInvariantTable,
    pub post_table: ChangingPostTable,
    pub membership: MembershipTable,
    pub kernel: Option<KernelData>,
    pub named: BTreeMap<String, FpMat>,
}

impl GroupPackage {
    pub fn assemble(parts: PackageParts) -> Result<GroupPackage> {
        let PackageParts {
            name,
            field,
            dim,
            a_name,
            b_name,
            z_name,
            t_name,
            anchors,
            group_order,
            island_order,
            max_order,
            letter_bytes,
            class_k,
            class_table,
            post_table,
            membership,
            kernel,
            named,
        } = parts;
        if dim > MAX_DIMENSION {
            return Err(Error::DimensionMismatch(format!(
                "dimension {dim} exceeds the limit {MAX_DIMENSION}"
            )));
        }
        let fetch = |n: &str| -> Result<FpMat> {
            named
                .get(n)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("matrix {n:?} is not defined")))
        };
        let a_mat = fetch(&a_name)?;
        let b_mat = fetch(&b_name)?;
        let z_mat = fetch(&z_name)?;
        let t_mat = fetch(&t_name)?;
        for (label, m) in [("a", &a_mat), ("b", &b_mat), ("z", &z_mat), ("T", &t_mat)] {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{label} is {}x{} in a dimension-{dim} package",
                    m.dim(),
                    m.dim()
                )));
            }
        }
        let t_sq = t_mat.mul(&t_mat)?;
        if t_mat.is_identity() || !t_sq.mul(&t_mat)?.is_identity() {
            return Err(Error::VerificationFailure(
                "shuttle matrix does not have order 3".into(),
            ));
        }
        if z_mat.is_identity() || !z_mat.mul(&z_mat)?.is_identity() {
            return Err(Error::VerificationFailure("z is not an involution".into()));
        }
        for (label, m) in [("a", &a_mat), ("b", &b_mat)] {
            if z_mat.mul(m)? != m.mul(&z_mat)? {
                return Err(Error::VerificationFailure(format!(
                    "z does not commute with {label}"
                )));
            }
        }
        if anchors.v1.len() != dim || anchors.v2.len() != dim {
            return Err(Error::DimensionMismatch("anchor length".into()));
        }

        let a_inv = a_mat.inverse()?;
        let b_inv = b_mat.inverse()?;
        let t_inv_mat = t_sq;
        let pkg = GroupPackage {
            name,
            field,
            dim,
            a: IslandElem::with_gen_word(a_mat, GenWord(vec![GenLetter::A])),
            b: IslandElem::with_gen_word(b_mat, GenWord(vec![GenLetter::B])),
            a_inv,
            b_inv,
            z: IslandElem::from_matrix(z_mat),
            t_mat,
            t_inv_mat,
            anchors,
            group_order,
            island_order,
            max_order,
            letter_bytes,
            class_k,
            class_table,
            post_table,
            membership,
            kernel,
            named,
            island_cache: OnceCell::new(),
            kernel_map: OnceCell::new(),
        };
        // annotate z with its canonical generator word when available
        let z_word = pkg
            .fingerprint_mat(pkg.z.matrix())
            .ok()
            .and_then(|fp| pkg.membership.get(&fp).cloned());
        let mut pkg = pkg;
        if let Some(w) = z_word {
            pkg.z = IslandElem::with_gen_word(pkg.z.matrix().clone(), w);
        }
        Ok(pkg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &IslandElem {
        &self.a
    }

    pub fn b(&self) -> &IslandElem {
        &self.b
    }

    pub fn z(&self) -> &IslandElem {
        &self.z
    }

    pub fn t_mat(&self) -> &FpMat {
        &self.t_mat
    }

    pub fn t_inv_mat(&self) -> &FpMat {
        &self.t_inv_mat
    }

    pub fn gen_letter_matrix(&self, letter: GenLetter) -> &FpMat {
        match letter {
            GenLetter::A => self.a.matrix(),
            GenLetter::AInv => &self.a_inv,
            GenLetter::B => self.b.matrix(),
            GenLetter::BInv => &self.b_inv,
        }
    }

    pub fn anchors(&self) -> &AnchorPair {
        &self.anchors
    }

    pub fn group_order(&self) -> u64 {
        self.group_order
    }

    pub fn island_order(&self) -> u64 {
        self.island_order
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn letter_bytes(&self) -> usize {
        self.letter_bytes
    }

    pub fn class_k(&self) -> &str {
        &self.class_k
    }

    pub fn class_table(&self) -> &ClassInvariantTable {
        &self.class_table
    }

    pub fn post_table(&self) -> &ChangingPostTable {
        &self.post_table
    }

    pub fn membership(&self) -> &MembershipTable {
        &self.membership
    }

    pub fn kernel(&self) -> Option<&KernelData> {
        self.kernel.as_ref()
    }

    pub fn named_matrices(&self) -> &BTreeMap<String, FpMat> {
        &self.named
    }

    pub fn resolve(&self, name: &str) -> Option<FpMat> {
        self.named.get(name).cloned()
    }

    /// Concatenated anchor images, the exact element identifier.
    pub fn fingerprint_mat(&self, m: &FpMat) -> Result<Fingerprint> {
        let i1 = self.anchors.v1.apply(m)?;
        let i2 = self.anchors.v2.apply(m)?;
        let mut digits = Vec::with_capacity(2 * self.dim);
        digits.extend_from_slice(i1.entries());
        digits.extend_from_slice(i2.entries());
        Ok(Fingerprint(digits))
    }

    /// Every island element, in membership-table (BFS) order, reconstructed
    /// from the stored generator words. Computed once.
    pub fn island_elements(&self) -> Result<&[IslandElem]> {
        self.island_cache
            .get_or_try_init(|| {
                let mut out = Vec::with_capacity(self.membership.len());
                for (fp, gw) in self.membership.iter() {
                    let m = gw.eval(self);
                    if self.fingerprint_mat(&m)? != *fp {
                        return Err(Error::VerificationFailure(format!(
                            "membership word {gw} does not evaluate to its fingerprint"
                        )));
                    }
                    out.push(IslandElem::with_gen_word(m, gw.clone()));
                }
                Ok(out)
            })
            .map(|v| v.as_slice())
    }

    /// Quotient-probe extraction -> coset representative, derived from the
    /// membership table on first use.
    pub fn kernel_rep_map(&self) -> Result<&BTreeMap<String, IslandElem>> {
        let kd = self
            .kernel
            .as_ref()
            .ok_or_else(|| Error::BuildFailure("package has no kernel data".into()))?;
        self.kernel_map.get_or_try_init(|| {
            let mut map = BTreeMap::new();
            for elem in self.island_elements()? {
                let key = kd.extract(elem.matrix())?.render_block("e");
                map.entry(key).or_insert_with(|| elem.clone());
            }
            Ok(map)
        })
    }

    /// Parses a word given as space-separated tokens over the package's
    /// named matrices.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Word::parse(text, |name| self.resolve(name))
    }

    /// Parses a word file: optional `matrix <name> <d>` blocks, then the
    /// first remaining non-comment line as the token line. A file without a
    /// word line denotes the identity.
    pub fn parse_word_file(&self, text: &str) -> Result<Word> {
        let mut locals: BTreeMap<String, FpMat> = BTreeMap::new();
        let mut lines = text.lines();
        let mut word_line: Option<String> = None;
        while let Some(line) = lines.next() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed.starts_with("matrix ") {
                let mut block = String::from(trimmed);
                block.push('\n');
                let dim: usize = trimmed
                    .split_whitespace()
                    .nth(2)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad matrix header {trimmed:?}")))?;
                for _ in 0..dim {
                    let row = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated matrix block".into()))?;
                    block.push_str(row);
                    block.push('\n');
                }
                for (name, m) in parse_matrix_blocks(self.field, &block)? {
                    locals.insert(name, m);
                }
                continue;
            }
            word_line = Some(trimmed.to_string());
            break;
        }
        let line = word_line.unwrap_or_default();
        Word::parse(&line, |name| {
            locals.get(name).cloned().or_else(|| self.resolve(name))
        })
    }

    /// Renders a word as a self-contained word file: matrix blocks for
    /// island letters that are not package-named, then the token line.
    pub fn render_word_file(&self, w: &Word) -> String {
        let name_of = |m: &FpMat| -> Option<String> {
            self.named
                .iter()
                .find(|(_, v)| *v == m)
                .map(|(k, _)| k.clone())
        };
        let mut blocks = String::new();
        let mut local_names: Vec<(FpMat, String)> = Vec::new();
        let mut tokens: Vec<String> = Vec::new();
        for letter in w.letters() {
            match letter {
                Letter::Shuttle(1) => tokens.push("T".into()),
                Letter::Shuttle(_) => tokens.push("T-".into()),
                Letter::Island(e) => {
                    if let Some(name) = name_of(e.matrix()) {
                        tokens.push(format!("g:{name}"));
                    } else if let Some((_, name)) =
                        local_names.iter().find(|(m, _)| m == e.matrix())
                    {
                        tokens.push(format!("g={name}"));
                    } else {
                        let name = format!("w{}", local_names.len());
                        blocks.push_str(&e.matrix().render_block(&name));
                        tokens.push(format!("g={name}"));
                        local_names.push((e.matrix().clone(), name));
                    }
                }
            }
        }
        format!("{blocks}{}\n", tokens.join(" "))
    }

    /// Loads a package directory. `oracle.txt` is deliberately never read
    /// here.
    pub fn load(dir: &Path) -> Result<GroupPackage> {
        let read = |file: &str| -> Result<String> {
            fs::read_to_string(dir.join(file)).map_err(|e| {
                Error::Parse(format!("cannot read {}: {e}", dir.join(file).display()))
            })
        };
        let manifest = parse_manifest(&read("manifest.txt")?)?;
        let get = |key: &str| -> Result<&str> {
            manifest
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Parse(format!("manifest is missing {key:?}")))
        };
        let get_all = |key: &str| -> Vec<&str> {
            manifest
                .iter()
                .filter(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .collect()
        };
        if get("format")? != FORMAT_TAG {
            return Err(Error::Parse(format!(
                "unknown package format {:?}",
                get("format")?
            )));
        }
        let field = FieldSpec::new(
            get("p")?
                .parse()
                .map_err(|_| Error::Parse("bad p".into()))?,
        )?;
        let dim: usize = get("dim")?
            .parse()
            .map_err(|_| Error::Parse("bad dim".into()))?;
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::DimensionMismatch(format!(
                "dimension {dim} outside [1, {MAX_DIMENSION}]"
            )));
        }
        let parse_u64 = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {key}")))
        };

        let named: BTreeMap<String, FpMat> = parse_matrix_blocks(field, &read("matrices.txt")?)?
            .into_iter()
            .collect();

        let anchors = AnchorPair {
            v1: FpVec::parse(field, get("anchor1")?)?,
            v2: FpVec::parse(field, get("anchor2")?)?,
        };

        // probes and signatures
        let resolve = |name: &str| named.get(name).cloned();
        let t_mat = named
            .get(get("t")?)
            .cloned()
            .ok_or_else(|| Error::Parse("t matrix missing".into()))?;
        let t_inv = t_mat.mul(&t_mat)?;
        let mut probe_tokens = Vec::new();
        let mut probe_mats = Vec::new();
        for tokens in get_all("probe") {
            let w = Word::parse(tokens, resolve)?;
            let mut m = FpMat::identity(field, dim);
            for letter in w.letters() {
                m = match letter {
                    Letter::Island(e) => m.mul(e.matrix())?,
                    Letter::Shuttle(1) => m.mul(&t_mat)?,
                    Letter::Shuttle(_) => m.mul(&t_inv)?,
                };
            }
            probe_tokens.push(tokens.to_string());
            probe_mats.push(m);
        }
        let mut entries: BTreeMap<SignatureKey, String> = BTreeMap::new();
        for line in get_all("classsig") {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::Parse(format!("bad classsig line {line:?}")));
            }
            let label = toks[0].to_string();
            let trace: u8 = toks[1]
                .parse()
                .map_err(|_| Error::Parse("bad classsig trace".into()))?;
            let orders: Vec<u32> = toks[2..]
                .iter()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad classsig order".into())))
                .collect::<Result<_>>()?;
            entries.insert((trace, orders), label);
        }
        let class_table = ClassInvariantTable {
            probe_tokens,
            probe_mats,
            entries,
        };

        // membership table
        let mut mem_entries = Vec::new();
        for line in read("membership.txt")?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (fp, used) = Fingerprint::parse_tokens(field.p(), 2 * dim, &toks)?;
            let mut gw = Vec::new();
            for tok in &toks[used..] {
                gw.push(GenLetter::from_token(tok)?);
            }
            mem_entries.push((fp, GenWord(gw)));
        }
        let membership = MembershipTable::new(mem_entries);

        // changing-post table
        let mut post_entries: Vec<PostEntry> = Vec::new();
        let mut pending_rep: Option<(String, IslandElem)> = None;
        for line in read("posttable.txt")?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, rest) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad posttable line {line:?}")))?;
            match kind {
                "rep" => {
                    let (label, mat_name) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::Parse(format!("bad rep line {line:?}")))?;
                    let m = named.get(mat_name.trim()).cloned().ok_or_else(|| {
                        Error::Parse(format!("posttable matrix {mat_name:?} missing"))
                    })?;
                    pending_rep = Some((label.to_string(), IslandElem::from_matrix(m)));
                }
                "tail" => {
                    let (label, tokens) = match rest.split_once(' ') {
                        Some((l, t)) => (l, t),
                        None => (rest, ""),
                    };
                    let (rep_label, rep) = pending_rep.take().ok_or_else(|| {
                        Error::Parse(format!("tail line {line:?} without a preceding rep"))
                    })?;
                    if rep_label != label {
                        return Err(Error::Parse(format!(
                            "posttable labels {rep_label:?} and {label:?} do not match"
                        )));
                    }
                    let tail = Word::parse(tokens, resolve)?;
                    post_entries.push(PostEntry {
                        label: label.to_string(),
                        rep,
                        tail,
                    });
                }
                _ => return Err(Error::Parse(format!("bad posttable line {line:?}"))),
            }
        }
        let post_table = ChangingPostTable {
            entries: post_entries,
        };

        // optional kernel data
        let kernel = if dir.join("kernel.txt").exists() {
            let text = read("kernel.txt")?;
            let mut basis_names: Vec<String> = Vec::new();
            let mut rows: Vec<usize> = Vec::new();
            let mut cols: Vec<usize> = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (kind, rest) = line
                    .split_once(' ')
                    .ok_or_else(|| Error::Parse(format!("bad kernel line {line:?}")))?;
                match kind {
                    "basis" => {
                        basis_names = rest.split_whitespace().map(|s| s.to_string()).collect()
                    }
                    "I" | "J" => {
                        let idx: Vec<usize> = rest
                            .split_whitespace()
                            .map(|t| {
                                t.parse::<usize>()
                                    .map_err(|_| Error::Parse("bad kernel index".into()))
                                    .and_then(|v| {
                                        if v == 0 || v > dim {
                                            Err(Error::Parse(format!(
                                                "kernel index {v} outside 1..={dim}"
                                            )))
                                        } else {
                                            Ok(v - 1)
                                        }
                                    })
                            })
                            .collect::<Result<_>>()?;
                        if kind == "I" {
                            rows = idx;
                        } else {
                            cols = idx;
                        }
                    }
                    _ => return Err(Error::Parse(format!("bad kernel line {line:?}"))),
                }
            }
            if rows.len() != cols.len() {
                return Err(Error::Parse("kernel index sets I and J differ in size".into()));
            }
            let mut basis = Vec::new();
            for n in &basis_names {
                let m = named
                    .get(n)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("kernel matrix {n:?} missing")))?;
                basis.push(IslandElem::from_matrix(m));
            }
            let mut exponent = 1u32;
            for e in &basis {
                let mut k = 1u32;
                let mut acc = e.matrix().clone();
                while !acc.is_identity() {
                    acc = acc.mul(e.matrix())?;
                    k += 1;
                    if k > 255 {
                        return Err(Error::Parse("kernel basis element of huge order".into()));
                    }
                }
                exponent = exponent.max(k);
            }
            Some(KernelData {
                basis,
                rows,
                cols,
                exponent,
            })
        } else {
            None
        };

        let mut pkg = GroupPackage::assemble(PackageParts {
            name: get("name").unwrap_or("package").to_string(),
            field,
            dim,
            a_name: get("a")?.to_string(),
            b_name: get("b")?.to_string(),
            z_name: get("z")?.to_string(),
            t_name: get("t")?.to_string(),
            anchors,
            group_order: parse_u64("group_order")?,
            island_order: parse_u64("island_order")?,
            max_order: parse_u64("max_order")? as u32,
            letter_bytes: parse_u64("letter_bytes")? as usize,
            class_k: get("class_k")?.to_string(),
            class_table,
            post_table,
            membership,
            kernel,
        named: named.clone(),
        })?;
        // kernel basis elements need their generator words for the split
        if let Some(kd) = pkg.kernel.take() {
            let mut basis = Vec::new();
            for e in kd.basis {
                let fp = pkg.fingerprint_mat(e.matrix())?;
                let gw = pkg.membership.get(&fp).cloned().ok_or_else(|| {
                    Error::VerificationFailure("kernel basis element outside the island".into())
                })?;
                basis.push(IslandElem::with_gen_word(e.matrix().clone(), gw));
            }
            pkg.kernel = Some(KernelData { basis, ..kd });
        }
        Ok(pkg)
    }

    /// Writes the package directory (everything except `oracle.txt`).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let p = self.field.p();

        let mut manifest = String::new();
        let _ = writeln!(manifest, "format = {FORMAT_TAG}");
        let _ = writeln!(manifest, "name = {}", self.name);
        let _ = writeln!(manifest, "p = {p}");
        let _ = writeln!(manifest, "dim = {}", self.dim);
        let _ = writeln!(manifest, "group_order = {}", self.group_order);
        let _ = writeln!(manifest, "island_order = {}", self.island_order);
        let _ = writeln!(manifest, "max_order = {}", self.max_order);
        let _ = writeln!(manifest, "letter_bytes = {}", self.letter_bytes);
        let _ = writeln!(manifest, "class_k = {}", self.class_k);
        let name_of = |m: &FpMat| -> String {
            self.named
                .iter()
                .find(|(_, v)| *v == m)
                .map(|(k, _)| k.clone())
                .expect("designated matrices are named")
        };
        let _ = writeln!(manifest, "a = {}", name_of(self.a.matrix()));
        let _ = writeln!(manifest, "b = {}", name_of(self.b.matrix()));
        let _ = writeln!(manifest, "z = {}", name_of(self.z.matrix()));
        let _ = writeln!(manifest, "t = {}", name_of(&self.t_mat));
        let _ = writeln!(manifest, "anchor1 = {}", self.anchors.v1.render());
        let _ = writeln!(manifest, "anchor2 = {}", self.anchors.v2.render());
        for tokens in &self.class_table.probe_tokens {
            let _ = writeln!(manifest, "probe = {tokens}");
        }
        for (sig, label) in &self.class_table.entries {
            let _ = writeln!(
                manifest,
                "classsig = {label} {}",
                crate::action::render_signature(sig)
            );
        }
        fs::write(dir.join("manifest.txt"), manifest)?;

        let mut matrices = String::new();
        for (name, m) in &self.named {
            matrices.push_str(&m.render_block(name));
        }
        fs::write(dir.join("matrices.txt"), matrices)?;

        let mut post = String::new();
        for entry in &self.post_table.entries {
            let _ = writeln!(post, "rep {} {}", entry.label, name_of(entry.rep.matrix()));
            let tail = entry
                .tail
                .render_with(|e| format!("g:{}", name_of(e.matrix())));
            if tail.is_empty() {
                let _ = writeln!(post, "tail {}", entry.label);
            } else {
                let _ = writeln!(post, "tail {} {}", entry.label, tail);
            }
        }
        fs::write(dir.join("posttable.txt"), post)?;

        let mut mem = String::new();
        for (fp, gw) in self.membership.iter() {
            if gw.is_empty() {
                let _ = writeln!(mem, "{}", fp.render(p));
            } else {
                let _ = writeln!(mem, "{} {gw}", fp.render(p));
            }
        }
        fs::write(dir.join("membership.txt"), mem)?;

        if let Some(kd) = &self.kernel {
            let mut kern = String::new();
            let names: Vec<String> = kd.basis.iter().map(|e| name_of(e.matrix())).collect();
            let _ = writeln!(kern, "basis {}", names.join(" "));
            let fmt_idx = |idx: &[usize]| {
                idx.iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(kern, "I {}", fmt_idx(&kd.rows));
            let _ = writeln!(kern, "J {}", fmt_idx(&kd.cols));
            fs::write(dir.join("kernel.txt"), kern)?;
        }
        Ok(())
    }
}

fn parse_manifest(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad manifest line {line:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
