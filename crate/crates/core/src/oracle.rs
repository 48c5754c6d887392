//! Brute-force ground truth for one surrogate group: every element's
//! fingerprint mapped to a minimal word over the six generator letters, its
//! order and its conjugacy class label.
//!
//! The oracle lives in `oracle.txt` next to the package files and is used
//! only by the builder, the verifier and the test suite. The engine proper
//! never reads it.

use crate::error::{Error, Result};
use crate::island::Fingerprint;
use crate::linalg::FpMat;
use crate::package::GroupPackage;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// The six ambient generator letters a, a^-1, b, b^-1, T, T^-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AmbLetter {
    A,
    AInv,
    B,
    BInv,
    T,
    TInv,
}

impl AmbLetter {
    pub const ALL: [AmbLetter; 6] = [
        AmbLetter::A,
        AmbLetter::AInv,
        AmbLetter::B,
        AmbLetter::BInv,
        AmbLetter::T,
        AmbLetter::TInv,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            AmbLetter::A => "a",
            AmbLetter::AInv => "a-",
            AmbLetter::B => "b",
            AmbLetter::BInv => "b-",
            AmbLetter::T => "T",
            AmbLetter::TInv => "T-",
        }
    }

    pub fn from_token(tok: &str) -> Result<AmbLetter> {
        match tok {
            "a" => Ok(AmbLetter::A),
            "a-" => Ok(AmbLetter::AInv),
            "b" => Ok(AmbLetter::B),
            "b-" => Ok(AmbLetter::BInv),
            "T" => Ok(AmbLetter::T),
            "T-" => Ok(AmbLetter::TInv),
            _ => Err(Error::Parse(format!("unknown oracle letter {tok:?}"))),
        }
    }

    pub fn matrix<'p>(&self, pkg: &'p GroupPackage) -> &'p FpMat {
        use crate::island::GenLetter;
        match self {
            AmbLetter::A => pkg.gen_letter_matrix(GenLetter::A),
            AmbLetter::AInv => pkg.gen_letter_matrix(GenLetter::AInv),
            AmbLetter::B => pkg.gen_letter_matrix(GenLetter::B),
            AmbLetter::BInv => pkg.gen_letter_matrix(GenLetter::BInv),
            AmbLetter::T => pkg.t_mat(),
            AmbLetter::TInv => pkg.t_inv_mat(),
        }
    }
}

pub fn render_amb_word(word: &[AmbLetter]) -> String {
    word.iter()
        .map(|l| l.token())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn eval_amb_word(pkg: &GroupPackage, word: &[AmbLetter]) -> FpMat {
    let mut m = FpMat::identity(pkg.field(), pkg.dim());
    for letter in word {
        m = m.mul(letter.matrix(pkg)).expect("same shape");
    }
    m
}

#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub word: Vec<AmbLetter>,
    pub order: u32,
    pub class: String,
}

/// Full enumeration of the group: fingerprint -> (minimal word, order,
/// class label). Entries are kept in enumeration (BFS) order.
pub struct BruteForceOracle {
    entries: Vec<(Fingerprint, OracleEntry)>,
    index: HashMap<Fingerprint, usize>,
}

impl BruteForceOracle {
    pub fn new(entries: Vec<(Fingerprint, OracleEntry)>) -> BruteForceOracle {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (fp, _))| (fp.clone(), i))
            .collect();
        BruteForceOracle { entries, index }
    }

    pub fn get(&self, fp: &Fingerprint) -> Option<&OracleEntry> {
        self.index.get(fp).map(|&i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Fingerprint, OracleEntry)> {
        self.entries.iter()
    }

    pub fn save(&self, dir: &Path, p: u8) -> Result<()> {
        let mut out = String::new();
        for (fp, entry) in &self.entries {
            let _ = write!(out, "{} {} {}", fp.render(p), entry.order, entry.class);
            if !entry.word.is_empty() {
                let _ = write!(out, " {}", render_amb_word(&entry.word));
            }
            out.push('\n');
        }
        fs::write(dir.join("oracle.txt"), out)?;
        Ok(())
    }

    pub fn load(dir: &Path, p: u8, dim: usize) -> Result<BruteForceOracle> {
        let text = fs::read_to_string(dir.join("oracle.txt"))
            .map_err(|e| Error::Parse(format!("cannot read oracle.txt: {e}")))?;
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (fp, used) = Fingerprint::parse_tokens(p, 2 * dim, &toks)?;
            if toks.len() < used + 2 {
                return Err(Error::Parse(format!("truncated oracle line {line:?}")));
            }
            let order: u32 = toks[used]
                .parse()
                .map_err(|_| Error::Parse("bad oracle order".into()))?;
            let class = toks[used + 1].to_string();
            let word = toks[used + 2..]
                .iter()
                .map(|t| AmbLetter::from_token(t))
                .collect::<Result<Vec<_>>>()?;
            entries.push((fp, OracleEntry { word, order, class }));
        }
        Ok(BruteForceOracle::new(entries))
    }
}
