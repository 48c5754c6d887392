//! The word-shortening pipeline: a Las Vegas procedure that rewrites any
//! word of the packaged group as an equal word of length at most 17.
//!
//! One attempt runs seven steps: find g with W' = Wg powering up to a class-K
//! involution t; find c0 with t^c0 z of even order powering up to a class-K
//! involution y; canonicalize y in the island; changing-post y to z (word
//! c_tail of length <= 4); canonicalize t^c for c = c0 c_tail; changing-post
//! t^c to z (word d); canonicalize W'' = W'^{cd}. Then
//! W = c d W'' d^-1 c^-1 g^-1, whose letter count after merging the island
//! seams is at most 17. Failed attempts restart with fresh sampling streams;
//! exhausted budgets surface as a failure report, never a wrong answer.

use crate::action::{self, WordExpr};
use crate::error::{Error, Result};
use crate::island::{self, IslandElem};
use crate::linalg::FpMat;
use crate::package::GroupPackage;
use crate::word::{Letter, PowerWord, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Every shortened word fits in this many letters.
pub const MAX_SHORT_LEN: usize = 17;

#[derive(Debug, Clone, Copy)]
pub struct ShortenBudget {
    /// Samples per randomized step before the attempt is abandoned.
    pub samples_per_step: u32,
    /// Full restarts with fresh sampling streams.
    pub restarts: u32,
}

impl Default for ShortenBudget {
    fn default() -> Self {
        ShortenBudget {
            samples_per_step: 200,
            restarts: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ShortenOptions {
    pub budget: ShortenBudget,
    /// Run the pipeline even when plain reduction already yields <= 17
    /// letters.
    pub force_pipeline: bool,
}

/// The intermediate certificates of one successful pipeline run.
pub struct ShorteningTrace {
    pub g: IslandElem,
    pub n: u32,
    pub t: PowerWord,
    pub c0: IslandElem,
    pub y: IslandElem,
    pub c_tail: Word,
    pub d: Word,
    pub w2: IslandElem,
}

impl ShorteningTrace {
    /// Labeled text report for debugging.
    pub fn render(&self, pkg: &GroupPackage) -> String {
        let mut out = String::new();
        let namer = |e: &IslandElem| match e.gen_word() {
            Some(gw) if !gw.is_empty() => format!("g[{gw}]"),
            _ => "g[?]".to_string(),
        };
        let _ = writeln!(out, "n (order of W')   : {}", self.n);
        let _ = writeln!(out, "g                 : {}", namer(&self.g));
        let _ = writeln!(out, "t                 : (W')^{}", self.t.exponent);
        let _ = writeln!(out, "c0                : {}", namer(&self.c0));
        let _ = writeln!(out, "y                 : {}", namer(&self.y));
        let _ = writeln!(out, "c tail            : {}", self.c_tail.render_with(namer));
        let _ = writeln!(out, "d                 : {}", self.d.render_with(namer));
        let _ = writeln!(out, "W''               : {}", namer(&self.w2));
        let _ = writeln!(out, "package           : {}", pkg.name());
        out
    }
}

/// A word certified to have length at most 17.
pub struct ShortWord {
    word: Word,
    trace: Option<Box<ShorteningTrace>>,
}

impl ShortWord {
    fn new(word: Word, trace: Option<Box<ShorteningTrace>>) -> Result<ShortWord> {
        if word.length() > MAX_SHORT_LEN {
            return Err(Error::InvariantBreach(format!(
                "short word of length {}",
                word.length()
            )));
        }
        Ok(ShortWord { word, trace })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn trace(&self) -> Option<&ShorteningTrace> {
        self.trace.as_deref()
    }

    pub fn into_word(self) -> Word {
        self.word
    }
}

/// Shortens a word of the packaged group to length at most 17.
///
/// Randomness is consumed from `rng` only to seed per-restart sampling
/// streams, so a fixed generator state yields a fixed result. The result is
/// verified internally against the input before it is returned; budget
/// exhaustion reports failure instead.
pub fn shorten<R: Rng + ?Sized>(
    pkg: &GroupPackage,
    w: &Word,
    rng: &mut R,
    opts: &ShortenOptions,
) -> Result<ShortWord> {
    let reduced = w.reduce();
    if !opts.force_pipeline && reduced.length() <= MAX_SHORT_LEN {
        return ShortWord::new(reduced, None);
    }
    let w_mat = reduced.to_matrix(pkg)?;
    for _ in 0..opts.budget.restarts {
        let mut g_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let mut c_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let attempt = attempt(
            pkg,
            &reduced,
            &w_mat,
            &mut g_rng,
            &mut c_rng,
            opts.budget.samples_per_step,
        )?;
        if let Some(sw) = attempt {
            let check = sw.word.concat(&reduced.invert())?;
            if !action::is_identity(pkg, &check)? {
                return Err(Error::InvariantBreach(
                    "shortened word is not equal to its input".into(),
                ));
            }
            return Ok(sw);
        }
    }
    Err(Error::LasVegasFailure {
        restarts: opts.budget.restarts,
        samples: opts.budget.samples_per_step,
    })
}

/// One pipeline attempt; `Ok(None)` means a sampling step ran out of budget
/// and the caller should restart.
fn attempt(
    pkg: &GroupPackage,
    w_red: &Word,
    w_mat: &FpMat,
    g_rng: &mut ChaCha8Rng,
    c_rng: &mut ChaCha8Rng,
    samples: u32,
) -> Result<Option<ShortWord>> {
    let zm = pkg.z().matrix();

    // step 1: g with W' = Wg of even order n, t = (W')^(n/2) in class K
    let mut step1 = None;
    for _ in 0..samples {
        let g = island::island_random(pkg, g_rng);
        let wp_mat = w_mat.mul(g.matrix())?;
        let n = action::order(pkg, &wp_mat)?;
        if n % 2 != 0 {
            continue;
        }
        let t_mat = wp_mat.pow(n as u64 / 2);
        if action::class_of_involution(pkg, &t_mat)? != pkg.class_k() {
            continue;
        }
        step1 = Some((g, n, wp_mat, t_mat));
        break;
    }
    let Some((g, n, wp_mat, t_mat)) = step1 else {
        return Ok(None);
    };

    // step 2: c0 with u = t^c0 z of even order, y = u^(order/2) in class K
    let mut step2 = None;
    for _ in 0..samples {
        let c0 = island::island_random(pkg, c_rng);
        let tc0_mat = c0.matrix().inverse()?.mul(&t_mat)?.mul(c0.matrix())?;
        let u_mat = tc0_mat.mul(zm)?;
        if u_mat.is_identity() {
            continue;
        }
        let m = action::order(pkg, &u_mat)?;
        if m % 2 != 0 {
            continue;
        }
        let y_mat = u_mat.pow(m as u64 / 2);
        if action::class_of_involution(pkg, &y_mat)? != pkg.class_k() {
            continue;
        }
        // dihedral-trick consequences, asserted
        if y_mat.mul(zm)? != zm.mul(&y_mat)? || y_mat.mul(&tc0_mat)? != tc0_mat.mul(&y_mat)? {
            return Err(Error::InvariantBreach(
                "dihedral power does not commute with its factors".into(),
            ));
        }
        step2 = Some((c0, y_mat));
        break;
    }
    let Some((c0, y_mat)) = step2 else {
        return Ok(None);
    };

    // step 3: canonical island form of y (it centralizes z, so it lies in G)
    let y_gw = match island::membership_word(pkg, &y_mat) {
        Ok(gw) => gw,
        Err(Error::NotInIsland(fp)) => {
            return Err(Error::InvariantBreach(format!(
                "y centralizes z but is not in the island (fingerprint {fp})"
            )))
        }
        Err(e) => return Err(e),
    };
    let y_elem = IslandElem::with_gen_word(y_mat.clone(), y_gw);

    // step 4: c_tail conjugating y to z, length <= 4
    let c_tail = island::changing_post(pkg, &y_mat)?;

    // c = c0 c_tail; the leading island letters merge
    let c_word = Word::single(Letter::Island(c0.clone())).concat(&c_tail)?;
    if c_word.length() > 4 {
        return Err(Error::InvariantBreach(format!(
            "conjugating word c of length {}",
            c_word.length()
        )));
    }
    let c_mat = c_word.to_matrix(pkg)?;

    // step 5: canonical island form of t^c
    let tc_mat = c_mat.inverse()?.mul(&t_mat)?.mul(&c_mat)?;

    // step 6: d conjugating t^c to z, length <= 4
    let d = island::changing_post(pkg, &tc_mat)?;

    // step 7: canonical island form of W'' = (W')^(cd)
    let cd_mat = c_mat.mul(&d.to_matrix(pkg)?)?;
    let w2_mat = cd_mat.inverse()?.mul(&wp_mat)?.mul(&cd_mat)?;
    if w2_mat.mul(zm)? != zm.mul(&w2_mat)? {
        return Err(Error::InvariantBreach("W'' does not centralize z".into()));
    }
    let w2_gw = match island::membership_word(pkg, &w2_mat) {
        Ok(gw) => gw,
        Err(Error::NotInIsland(fp)) => {
            return Err(Error::InvariantBreach(format!(
                "W'' centralizes z but is not in the island (fingerprint {fp})"
            )))
        }
        Err(e) => return Err(e),
    };
    let w2_elem = IslandElem::with_gen_word(w2_mat, w2_gw);

    // assembly: c d W'' d^-1 c^-1 g^-1, island letters merging at the seams
    let result = c_word
        .concat(&d)?
        .concat(&Word::single(Letter::Island(w2_elem.clone())))?
        .concat(&d.invert())?
        .concat(&c_word.invert())?
        .concat(&Word::single(Letter::Island(g.inverse())))?;
    if result.length() > MAX_SHORT_LEN {
        return Err(Error::InvariantBreach(format!(
            "assembled word has length {}",
            result.length()
        )));
    }

    let wp_word = w_red.concat(&Word::single(Letter::Island(g.clone())))?;
    let trace = ShorteningTrace {
        g,
        n,
        t: wp_word.power(n as u64 / 2),
        c0,
        y: y_elem,
        c_tail,
        d,
        w2: w2_elem,
    };
    Ok(Some(ShortWord {
        word: result,
        trace: Some(Box::new(trace)),
    }))
}

/// Shortened product: concatenate (at most ~34 letters) and shorten back to
/// 17. Las Vegas: may report failure, never a wrong product.
pub fn multiply_short<R: Rng + ?Sized>(
    pkg: &GroupPackage,
    u: &ShortWord,
    v: &ShortWord,
    rng: &mut R,
) -> Result<ShortWord> {
    let prod = u.word().concat(v.word())?;
    debug_assert!(prod.length() <= 2 * MAX_SHORT_LEN);
    shorten(pkg, &prod, rng, &ShortenOptions::default())
}

/// Inversion by reversal: length-preserving, no randomness involved.
pub fn invert_short(u: &ShortWord) -> ShortWord {
    ShortWord {
        word: u.word().invert(),
        trace: None,
    }
}
