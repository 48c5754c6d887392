//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criteria are checked against the builder's independent brute-force
//! oracles for the three reference packages.

use islander_core::action::{self, WordExpr};
use islander_core::builder::{build_package, BuildOutput, BuildSpec};
use islander_core::island::{
    self, conjugate_in_island_search, island_random, random_reduced_word, Fingerprint,
};
use islander_core::oracle::AmbLetter;
use islander_core::shorten::{self, ShortenOptions, MAX_SHORT_LEN};
use islander_core::word::{Letter, Word};
use islander_core::{Error, GroupPackage};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const REF_A_SPEC: &str = include_str!("../../../specs/ref_a.txt");
const REF_B_SPEC: &str = include_str!("../../../specs/ref_b.txt");
const REF_C_SPEC: &str = include_str!("../../../specs/ref_c.txt");

struct Fix {
    ref_a: BuildOutput,
    ref_b: BuildOutput,
    ref_c: BuildOutput,
}

static FIX: Lazy<Fix> = Lazy::new(|| {
    let build = |text: &str| build_package(&BuildSpec::parse(text).unwrap()).unwrap();
    Fix {
        ref_a: build(REF_A_SPEC),
        ref_b: build(REF_B_SPEC),
        ref_c: build(REF_C_SPEC),
    }
});

/// Oracle words are over the six generator letters; realize them as words.
fn amb_to_word(pkg: &GroupPackage, letters: &[AmbLetter]) -> Word {
    let word_letters = letters
        .iter()
        .map(|l| match l {
            AmbLetter::T => Letter::Shuttle(1),
            AmbLetter::TInv => Letter::Shuttle(2),
            other => Letter::Island(island::IslandElem::from_matrix(other.matrix(pkg).clone())),
        })
        .collect();
    Word::from_letters(word_letters).reduce()
}

fn fingerprint(pkg: &GroupPackage, w: &Word) -> Fingerprint {
    pkg.fingerprint_mat(&w.to_matrix(pkg).unwrap()).unwrap()
}

#[test]
fn criterion_01_length_bound() {
    let start = Instant::now();
    let fix = &*FIX;
    let mut max_b_len = 0usize;
    for (pkg, seed) in [(&fix.ref_a.package, 101u64), (&fix.ref_b.package, 202)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..120 {
            let len = rng.random_range(30..=60);
            let w = random_reduced_word(pkg, len, &mut rng);
            assert!(w.length() >= 30);
            match shorten::shorten(pkg, &w, &mut rng, &ShortenOptions::default()) {
                Ok(sw) => {
                    assert!(
                        sw.word().length() <= MAX_SHORT_LEN,
                        "shortened word of length {}",
                        sw.word().length()
                    );
                    if std::ptr::eq(pkg, &fix.ref_b.package) {
                        max_b_len = max_b_len.max(sw.word().length());
                    }
                }
                Err(Error::LasVegasFailure { .. }) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }
    assert!(
        max_b_len >= 10,
        "no shortened word on the larger package reached length 10 (max {max_b_len})"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "length-bound run took {elapsed:?}");
    println!(
        "criterion 1 (length bound <= 17, genuinely exercised, < 60 s): PASS ({:?}, max length {max_b_len})",
        elapsed
    );
}

#[test]
fn criterion_02_soundness() {
    let fix = &*FIX;
    let pkg = &fix.ref_a.package;
    let oracle = &fix.ref_a.oracle;

    // exhaustive on the small package: shorten every element through the
    // full pipeline
    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    let opts = ShortenOptions {
        force_pipeline: true,
        ..ShortenOptions::default()
    };
    let mut shorts = Vec::new();
    for (fp, entry) in oracle.iter() {
        let w = amb_to_word(pkg, &entry.word);
        let sw = shorten::shorten(pkg, &w, &mut rng, &opts).unwrap();
        assert_eq!(&fingerprint(pkg, sw.word()), fp, "shorten changed the element");
        shorts.push((fp.clone(), sw));
    }
    assert_eq!(shorts.len(), 24);

    // multiply_short over every ordered pair
    for (fp_u, u) in &shorts {
        for (fp_v, v) in &shorts {
            let prod = shorten::multiply_short(pkg, u, v, &mut rng).unwrap();
            let mu = oracle_matrix(pkg, oracle, fp_u);
            let mv = oracle_matrix(pkg, oracle, fp_v);
            let expected = pkg.fingerprint_mat(&mu.mul(&mv).unwrap()).unwrap();
            assert_eq!(fingerprint(pkg, prod.word()), expected);
        }
    }

    // invert_short on every element
    for (fp_u, u) in &shorts {
        let inv = shorten::invert_short(u);
        let expected = pkg
            .fingerprint_mat(&oracle_matrix(pkg, oracle, fp_u).inverse().unwrap())
            .unwrap();
        assert_eq!(fingerprint(pkg, inv.word()), expected);
    }

    // sampled on the larger package
    let pkg_b = &fix.ref_b.package;
    let oracle_b = &fix.ref_b.oracle;
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    let mut checked = 0;
    while checked < 500 {
        let len = rng.random_range(30..=60);
        let w = random_reduced_word(pkg_b, len, &mut rng);
        let fp_in = fingerprint(pkg_b, &w);
        let entry = oracle_b.get(&fp_in).expect("word evaluates into the group");
        match shorten::shorten(pkg_b, &w, &mut rng, &ShortenOptions::default()) {
            Ok(sw) => {
                assert_eq!(fingerprint(pkg_b, sw.word()), fp_in);
                // double-check through the oracle's own word
                let m_oracle = islander_core::oracle::eval_amb_word(pkg_b, &entry.word);
                assert_eq!(
                    sw.word().to_matrix(pkg_b).unwrap(),
                    w.to_matrix(pkg_b).unwrap()
                );
                assert_eq!(pkg_b.fingerprint_mat(&m_oracle).unwrap(), fp_in);
                checked += 1;
            }
            Err(Error::LasVegasFailure { .. }) => {}
            Err(e) => panic!("unexpected error: {e}"),
        }
    }
    println!("criterion 2 (soundness, exhaustive small / 500 sampled large): PASS");
}

fn oracle_matrix(
    pkg: &GroupPackage,
    oracle: &islander_core::oracle::BruteForceOracle,
    fp: &Fingerprint,
) -> islander_core::linalg::FpMat {
    islander_core::oracle::eval_amb_word(pkg, &oracle.get(fp).unwrap().word)
}

#[test]
fn criterion_03_order_oracle() {
    let fix = &*FIX;
    let pkg = &fix.ref_a.package;
    assert_eq!(pkg.max_order(), 4);
    for (_, entry) in fix.ref_a.oracle.iter() {
        let w = amb_to_word(pkg, &entry.word);
        assert_eq!(action::order(pkg, &w).unwrap(), entry.order);
    }

    let pkg_b = &fix.ref_b.package;
    let oracle_b = &fix.ref_b.oracle;
    let mut rng = ChaCha8Rng::seed_from_u64(30303);
    for _ in 0..1000 {
        let len = rng.random_range(5..=40);
        let w = random_reduced_word(pkg_b, len, &mut rng);
        let fp = fingerprint(pkg_b, &w);
        let expected = oracle_b.get(&fp).unwrap().order;
        assert_eq!(action::order(pkg_b, &w).unwrap(), expected);
        assert!(expected <= pkg_b.max_order());
    }
    println!(
        "criterion 3 (order oracle, exhaustive small / 1000 sampled large; loop bound = max_order {}): PASS",
        pkg.max_order()
    );
}

#[test]
fn criterion_04_identity_test() {
    let fix = &*FIX;
    let pkg = &fix.ref_a.package;
    let oracle = &fix.ref_a.oracle;
    let id_fp = pkg
        .fingerprint_mat(&islander_core::linalg::FpMat::identity(pkg.field(), pkg.dim()))
        .unwrap();

    // exact test: zero false results, exhaustively
    for (fp, entry) in oracle.iter() {
        let w = amb_to_word(pkg, &entry.word);
        assert_eq!(action::is_identity(pkg, &w).unwrap(), *fp == id_fp);
    }

    // Monte Carlo variant: never rejects the identity
    let mut rng = ChaCha8Rng::seed_from_u64(40404);
    let id = Word::empty();
    for _ in 0..200 {
        assert!(action::is_identity_mc(pkg, &id, &mut rng).unwrap());
    }

    // measured false-positive rate over (nonidentity element, random vector)
    let nonid: Vec<Word> = oracle
        .iter()
        .filter(|(fp, _)| *fp != id_fp)
        .map(|(_, e)| amb_to_word(pkg, &e.word))
        .collect();
    assert_eq!(nonid.len(), 23);
    let trials = 10_000;
    let mut false_positives = 0;
    for i in 0..trials {
        let w = &nonid[i % nonid.len()];
        if action::is_identity_mc(pkg, w, &mut rng).unwrap() {
            false_positives += 1;
        }
    }
    let rate = false_positives as f64 / trials as f64;
    assert!(rate <= 0.05, "measured false-positive rate {rate}");
    println!("criterion 4 (identity test exact; Monte Carlo fp rate {rate:.4} <= 0.05): PASS");
}

#[test]
fn criterion_05_changing_post() {
    let fix = &*FIX;
    for (name, out) in [
        ("small", &fix.ref_a),
        ("large", &fix.ref_b),
        ("kernel", &fix.ref_c),
    ] {
        let pkg = &out.package;
        let zm = pkg.z().matrix();
        let mut count = 0;
        for elem in pkg.island_elements().unwrap() {
            let m = elem.matrix();
            if m.is_identity() || !m.mul(m).unwrap().is_identity() {
                continue;
            }
            if action::class_of_involution(pkg, m).unwrap() != pkg.class_k() {
                continue;
            }
            let u = island::changing_post(pkg, m).unwrap();
            assert!(u.length() <= 4, "changing-post length {} on {name}", u.length());
            let mu = u.to_matrix(pkg).unwrap();
            assert_eq!(
                mu.inverse().unwrap().mul(m).unwrap().mul(&mu).unwrap(),
                *zm,
                "changing post is not exact on {name}"
            );
            count += 1;
        }
        assert!(count > 0, "package {name} has no island K-involutions");
    }
    println!("criterion 5 (changing post exact, length <= 4, exhaustive per package): PASS");
}

#[test]
fn criterion_06_las_vegas_contract() {
    let fix = &*FIX;
    for (name, out, seed) in [
        ("small", &fix.ref_a, 606u64),
        ("large", &fix.ref_b, 607),
        ("kernel", &fix.ref_c, 608),
    ] {
        let pkg = &out.package;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = 0u32;
        for _ in 0..500 {
            let len = rng.random_range(30..=60);
            let w = random_reduced_word(pkg, len, &mut rng);
            match shorten::shorten(pkg, &w, &mut rng, &ShortenOptions::default()) {
                Ok(sw) => {
                    // a success is never a wrong answer
                    assert_eq!(fingerprint(pkg, sw.word()), fingerprint(pkg, &w));
                }
                Err(Error::LasVegasFailure { .. }) => failures += 1,
                Err(e) => panic!("non-Las-Vegas error on {name}: {e}"),
            }
        }
        let rate = failures as f64 / 500.0;
        assert!(rate < 0.05, "failure rate {rate} on {name}");
    }
    println!("criterion 6 (Las Vegas: failure rate < 5% per package, failures never lie): PASS");
}

#[test]
fn criterion_07_meet_in_the_middle() {
    let fix = &*FIX;
    let pkg = &fix.ref_b.package;
    assert_eq!(island::conjugacy_budget(pkg.island_order()), 78);
    let mut rng = ChaCha8Rng::seed_from_u64(70707);
    let mut without_fallback = 0;
    for _ in 0..100 {
        let x = island_random(pkg, &mut rng);
        let c = island_random(pkg, &mut rng);
        let target = x.conjugate_by(&c).unwrap();
        let search = conjugate_in_island_search(pkg, &x, &target, &mut rng).unwrap();
        assert_eq!(x.conjugate_by(&search.conjugator).unwrap(), target);
        if !search.used_fallback {
            without_fallback += 1;
        }
    }
    assert!(
        without_fallback >= 95,
        "only {without_fallback} of 100 conjugacy searches avoided the fallback"
    );
    println!(
        "criterion 7 (meet-in-the-middle conjugacy, {without_fallback}/100 without fallback): PASS"
    );
}

#[test]
fn criterion_08_membership_split() {
    let fix = &*FIX;
    let pkg = &fix.ref_c.package;
    assert!(pkg.kernel().is_some());
    for elem in pkg.island_elements().unwrap() {
        let split = island::split_membership_mat(pkg, elem.matrix()).unwrap();
        let table = island::membership_lookup(pkg, elem.matrix()).unwrap();
        assert_eq!(split.eval(pkg), *elem.matrix());
        assert_eq!(table.eval(pkg), *elem.matrix());
    }
    println!(
        "criterion 8 (kernel membership split = table, exhaustive on {} island elements): PASS",
        pkg.island_order()
    );
}

#[test]
fn criterion_09_builder_certification() {
    let start = Instant::now();
    let out = build_package(&BuildSpec::parse(REF_A_SPEC).unwrap()).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "build + verify took {elapsed:?}");

    let pkg = &out.package;
    assert_eq!(pkg.island_order(), 8);
    let k_size = out
        .oracle
        .iter()
        .filter(|(_, e)| e.class == pkg.class_k())
        .count();
    assert_eq!(k_size, 3);
    assert_eq!(pkg.post_table().entries.len(), 2);

    // anchor joint stabilizer is trivial over the full enumeration
    let id_fp = pkg
        .fingerprint_mat(&islander_core::linalg::FpMat::identity(pkg.field(), pkg.dim()))
        .unwrap();
    let mut id_hits = 0;
    for (fp, _) in out.oracle.iter() {
        if *fp == id_fp {
            id_hits += 1;
        }
    }
    assert_eq!(id_hits, 1);
    println!(
        "criterion 9 (builder: island 8, K size 3, 2 island K-classes, trivial anchors, {:?} < 10 s): PASS",
        elapsed
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let fix = &*FIX;
    let dir = tempfile::tempdir().unwrap();
    let pkg_dir = dir.path().join("ref-a");
    fix.ref_a.package.save(&pkg_dir).unwrap();
    fix.ref_a
        .oracle
        .save(&pkg_dir, fix.ref_a.package.field().p())
        .unwrap();

    let word_file = dir.path().join("w.txt");
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let w = random_reduced_word(&fix.ref_a.package, 40, &mut rng);
    std::fs::write(&word_file, fix.ref_a.package.render_word_file(&w)).unwrap();

    let exe = env!("CARGO_BIN_EXE_islander");
    let run = |args: &[&str]| {
        let out = std::process::Command::new(exe)
            .args(args)
            .output()
            .expect("cli runs");
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let pkg_str = pkg_dir.to_str().unwrap();
    let wf = word_file.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["shorten", pkg_str, wf, "--seed", "11"],
        vec!["mul", pkg_str, "g:a T g:b", "T- g:z", "--seed", "5"],
        vec!["idtest", pkg_str, "g:a T", "--mc", "--seed", "3"],
        vec!["stats", pkg_str, "--trials", "40", "--seed", "9"],
        vec!["post", pkg_str, "g:z"],
        vec!["order", pkg_str, "g:a T"],
    ];
    for args in &commands {
        let first = run(args);
        let second = run(args);
        assert_eq!(first, second, "output of {args:?} is not byte-identical");
    }
    println!("criterion 10 (randomized CLI commands byte-identical per seed): PASS");
}
