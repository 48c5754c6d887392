//! Command-line interface: build and verify packages, and run word
//! arithmetic against a loaded package. Every randomized command is
//! deterministic for a fixed --seed.

use clap::{Parser, Subcommand};
use islander_core::builder::{build_package, verify_package, BuildSpec};
use islander_core::error::{Error, Result};
use islander_core::island::{self, random_reduced_word};
use islander_core::oracle::BruteForceOracle;
use islander_core::shorten::{self, ShortenBudget, ShortenOptions};
use islander_core::word::Word;
use islander_core::{action, GroupPackage};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "islander",
    version,
    about = "Word arithmetic in groups generated by an involution-centralizer island and an order-3 shuttle"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a package (and its oracle) from a builder spec file.
    Build { spec: PathBuf, outdir: PathBuf },
    /// Re-check every package invariant against the stored oracle.
    Verify { pkg: PathBuf },
    /// Shorten the word in a word file to length <= 17.
    Shorten {
        pkg: PathBuf,
        word_file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per randomized step.
        #[arg(long, default_value_t = 200)]
        budget: u32,
        /// Run the full pipeline even for already-short inputs.
        #[arg(long)]
        full: bool,
        /// Dump the intermediate certificates of the run.
        #[arg(long)]
        trace: bool,
    },
    /// Shortened product of two words.
    Mul {
        pkg: PathBuf,
        w1: String,
        w2: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inversion by reversal.
    Inv { pkg: PathBuf, w: String },
    /// Order of the word's group element.
    Order { pkg: PathBuf, w: String },
    /// Identity test; --mc uses the one-random-vector Monte Carlo variant.
    Idtest {
        pkg: PathBuf,
        w: String,
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Changing post: a word of length <= 4 conjugating the given class-K
    /// island involution to z.
    Post { pkg: PathBuf, w: String },
    /// Trace of the word's matrix realization.
    Trace { pkg: PathBuf, w: String },
    /// Shortening failure-rate and length-distribution report.
    Stats {
        pkg: PathBuf,
        #[arg(long)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Oracle-free internal consistency checks of a package.
    Selftest { pkg: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

fn load(pkg: &Path) -> Result<GroupPackage> {
    GroupPackage::load(pkg)
}

/// Word arguments are inline tokens, or `@path` to read a word file.
fn word_arg(pkg: &GroupPackage, arg: &str) -> Result<Word> {
    if let Some(path) = arg.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
        pkg.parse_word_file(&text)
    } else {
        pkg.parse_word(arg)
    }
}

fn print_word(pkg: &GroupPackage, w: &Word) {
    print!("{}", pkg.render_word_file(w));
    println!("length: {}", w.length());
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Build { spec, outdir } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", spec.display())))?;
            let spec = BuildSpec::parse(&text)?;
            let out = build_package(&spec)?;
            out.package.save(&outdir)?;
            out.oracle.save(&outdir, out.package.field().p())?;
            println!("package: {}", out.package.name());
            println!("group order: {}", out.package.group_order());
            println!("island order: {}", out.package.island_order());
            println!("max order: {}", out.package.max_order());
            println!("class K: {}", out.package.class_k());
            let k_size = out
                .oracle
                .iter()
                .filter(|(_, e)| e.class == out.package.class_k())
                .count();
            println!("class K size: {k_size}");
            println!(
                "island classes in K: {}",
                out.package.post_table().entries.len()
            );
            for line in &out.report {
                println!("{line}");
            }
            println!("written: {}", outdir.display());
            Ok(())
        }
        Cmd::Verify { pkg } => {
            let package = load(&pkg)?;
            let oracle = BruteForceOracle::load(&pkg, package.field().p(), package.dim())?;
            for line in verify_package(&package, &oracle)? {
                println!("{line}");
            }
            println!("verify: ok");
            Ok(())
        }
        Cmd::Shorten {
            pkg,
            word_file,
            seed,
            budget,
            full,
            trace,
        } => {
            let package = load(&pkg)?;
            let text = std::fs::read_to_string(&word_file)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", word_file.display())))?;
            let w = package.parse_word_file(&text)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = ShortenOptions {
                budget: ShortenBudget {
                    samples_per_step: budget,
                    ..ShortenBudget::default()
                },
                force_pipeline: full,
            };
            let sw = shorten::shorten(&package, &w, &mut rng, &opts)?;
            print_word(&package, sw.word());
            println!("verified: true");
            if trace {
                if let Some(tr) = sw.trace() {
                    print!("{}", tr.render(&package));
                } else {
                    println!("trace: none (reduce-only fast path)");
                }
            }
            Ok(())
        }
        Cmd::Mul { pkg, w1, w2, seed } => {
            let package = load(&pkg)?;
            let u = word_arg(&package, &w1)?;
            let v = word_arg(&package, &w2)?;
            let prod = u.concat(&v)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sw = shorten::shorten(&package, &prod, &mut rng, &ShortenOptions::default())?;
            print_word(&package, sw.word());
            println!("verified: true");
            Ok(())
        }
        Cmd::Inv { pkg, w } => {
            let package = load(&pkg)?;
            let word = word_arg(&package, &w)?;
            print_word(&package, &word.invert());
            Ok(())
        }
        Cmd::Order { pkg, w } => {
            let package = load(&pkg)?;
            let word = word_arg(&package, &w)?;
            println!("{}", action::order(&package, &word)?);
            Ok(())
        }
        Cmd::Idtest { pkg, w, mc, seed } => {
            let package = load(&pkg)?;
            let word = word_arg(&package, &w)?;
            let verdict = if mc {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                action::is_identity_mc(&package, &word, &mut rng)?
            } else {
                action::is_identity(&package, &word)?
            };
            println!("identity: {verdict}");
            Ok(())
        }
        Cmd::Post { pkg, w } => {
            let package = load(&pkg)?;
            let word = word_arg(&package, &w)?;
            let u = island::changing_post_word(&package, &word)?;
            print_word(&package, &u);
            println!("verified: true");
            Ok(())
        }
        Cmd::Trace { pkg, w } => {
            let package = load(&pkg)?;
            let word = word_arg(&package, &w)?;
            println!("{}", action::trace_of_word(&package, &word)?);
            Ok(())
        }
        Cmd::Stats { pkg, trials, seed } => {
            let package = load(&pkg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut failures = 0u32;
            let mut lengths: BTreeMap<usize, u32> = BTreeMap::new();
            for _ in 0..trials {
                let len = 30 + (rng.next_u64() % 31) as usize;
                let w = random_reduced_word(&package, len, &mut rng);
                match shorten::shorten(&package, &w, &mut rng, &ShortenOptions::default()) {
                    Ok(sw) => *lengths.entry(sw.word().length()).or_insert(0) += 1,
                    Err(Error::LasVegasFailure { .. }) => failures += 1,
                    Err(e) => return Err(e),
                }
            }
            println!("trials: {trials}");
            println!(
                "failures: {failures} (rate = {:.4})",
                failures as f64 / trials.max(1) as f64
            );
            println!("length distribution:");
            for (len, count) in &lengths {
                println!("  {len}: {count}");
            }
            Ok(())
        }
        Cmd::Selftest { pkg } => {
            let package = load(&pkg)?;
            selftest(&package)?;
            println!("selftest: ok");
            Ok(())
        }
    }
}

fn selftest(pkg: &GroupPackage) -> Result<()> {
    use islander_core::linalg::FpMat;
    let fail = |m: String| Error::VerificationFailure(m);

    let t = pkg.t_mat();
    if t.is_identity() || !t.mul(t)?.mul(t)?.is_identity() {
        return Err(fail("shuttle does not have order 3".into()));
    }
    println!("ok: shuttle has order 3");

    let zm = pkg.z().matrix();
    if zm.is_identity() || !zm.mul(zm)?.is_identity() {
        return Err(fail("z is not an involution".into()));
    }
    for (label, m) in [("a", pkg.a().matrix()), ("b", pkg.b().matrix())] {
        if zm.mul(m)? != m.mul(zm)? {
            return Err(fail(format!("z does not commute with {label}")));
        }
    }
    println!("ok: z is a central island involution");

    // membership words re-evaluate to their fingerprints
    let elems = pkg.island_elements()?;
    if elems.len() as u64 != pkg.island_order() {
        return Err(fail("membership table size mismatch".into()));
    }
    println!("ok: membership table evaluates ({} elements)", elems.len());

    for entry in &pkg.post_table().entries {
        use islander_core::action::WordExpr;
        let mu = entry.tail.to_matrix(pkg)?;
        let conj = mu.inverse()?.mul(entry.rep.matrix())?.mul(&mu)?;
        if &conj != zm {
            return Err(fail(format!(
                "post tail for class {} does not reach z",
                entry.label
            )));
        }
        if entry.tail.length() > 4 {
            return Err(fail(format!(
                "post tail for class {} has length {}",
                entry.label,
                entry.tail.length()
            )));
        }
    }
    println!(
        "ok: changing-post table exact ({} classes)",
        pkg.post_table().entries.len()
    );

    let zsig = pkg.class_table().signature_of(pkg, zm)?;
    match pkg.class_table().lookup(&zsig) {
        Some(label) if label == pkg.class_k() => {}
        other => {
            return Err(fail(format!(
                "z's signature resolves to {other:?}, expected class {}",
                pkg.class_k()
            )))
        }
    }
    println!("ok: z's signature resolves to class {}", pkg.class_k());

    if let Some(kd) = pkg.kernel() {
        let reps = pkg.kernel_rep_map()?;
        let n_size = (kd.exponent as u64).pow(kd.basis.len() as u32);
        let expected = pkg.island_order() / n_size;
        if reps.len() as u64 != expected {
            return Err(fail(format!(
                "kernel probe yields {} extractions for {expected} cosets",
                reps.len()
            )));
        }
        let id = FpMat::identity(pkg.field(), pkg.dim());
        let key = kd.extract(&id)?.render_block("e");
        if !reps.contains_key(&key) {
            return Err(fail("identity extraction missing from kernel map".into()));
        }
        println!("ok: kernel probe determines {} cosets", reps.len());
    }
    Ok(())
}
