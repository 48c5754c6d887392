//! Realizes words as actions on the module: the identity test through the
//! anchor pair, the order oracle, involution extraction, conjugacy-class
//! identification and matrix/trace realization.

use crate::error::{Error, Result};
use crate::linalg::{FpMat, FpVec};
use crate::package::GroupPackage;
use crate::word::{Letter, PowerWord, Word};
use rand::Rng;
use std::collections::BTreeMap;

/// Two precomputed vectors whose joint stabilizer in the ambient group is
/// trivial; fixing both certifies the identity.
#[derive(Debug, Clone)]
pub struct AnchorPair {
    pub v1: FpVec,
    pub v2: FpVec,
}

/// Signature of an involution: matrix trace plus the sorted orders of the
/// products with the package's probe words.
pub type SignatureKey = (u8, Vec<u32>);

pub fn render_signature(sig: &SignatureKey) -> String {
    let mut out = sig.0.to_string();
    for o in &sig.1 {
        out.push(' ');
        out.push_str(&o.to_string());
    }
    out
}

/// Lookup table from involution signature to ambient conjugacy class label.
/// The builder enumerates every involution, so every signature that can arise
/// is present, and signatures of distinct classes never collide.
#[derive(Debug, Clone, Default)]
pub struct ClassInvariantTable {
    pub probe_tokens: Vec<String>,
    pub probe_mats: Vec<FpMat>,
    pub entries: BTreeMap<SignatureKey, String>,
}

impl ClassInvariantTable {
    pub fn signature_of(&self, pkg: &GroupPackage, m: &FpMat) -> Result<SignatureKey> {
        let mut orders = Vec::with_capacity(self.probe_mats.len());
        for pm in &self.probe_mats {
            orders.push(order_of_matrix(pkg, &m.mul(pm)?)?);
        }
        orders.sort_unstable();
        Ok((m.trace(), orders))
    }

    pub fn lookup(&self, sig: &SignatureKey) -> Option<&str> {
        self.entries.get(sig).map(|s| s.as_str())
    }
}

/// Anything that acts on the module: a word, a power annotation, or a bare
/// matrix.
pub trait WordExpr {
    fn apply_to(&self, pkg: &GroupPackage, v: &FpVec) -> Result<FpVec>;
    fn to_matrix(&self, pkg: &GroupPackage) -> Result<FpMat>;
}

impl WordExpr for Word {
    fn apply_to(&self, pkg: &GroupPackage, v: &FpVec) -> Result<FpVec> {
        let mut cur = v.clone();
        for letter in self.letters() {
            cur = match letter {
                Letter::Island(e) => cur.apply(e.matrix())?,
                Letter::Shuttle(1) => cur.apply(pkg.t_mat())?,
                Letter::Shuttle(_) => cur.apply(pkg.t_inv_mat())?,
            };
        }
        Ok(cur)
    }

    fn to_matrix(&self, pkg: &GroupPackage) -> Result<FpMat> {
        let mut m = FpMat::identity(pkg.field(), pkg.dim());
        for letter in self.letters() {
            m = match letter {
                Letter::Island(e) => m.mul(e.matrix())?,
                Letter::Shuttle(1) => m.mul(pkg.t_mat())?,
                Letter::Shuttle(_) => m.mul(pkg.t_inv_mat())?,
            };
        }
        Ok(m)
    }
}

impl WordExpr for PowerWord {
    fn apply_to(&self, pkg: &GroupPackage, v: &FpVec) -> Result<FpVec> {
        let mut cur = v.clone();
        for _ in 0..self.exponent {
            cur = self.base.apply_to(pkg, &cur)?;
        }
        Ok(cur)
    }

    fn to_matrix(&self, pkg: &GroupPackage) -> Result<FpMat> {
        Ok(self.base.to_matrix(pkg)?.pow(self.exponent))
    }
}

impl WordExpr for FpMat {
    fn apply_to(&self, _pkg: &GroupPackage, v: &FpVec) -> Result<FpVec> {
        v.apply(self)
    }

    fn to_matrix(&self, _pkg: &GroupPackage) -> Result<FpMat> {
        Ok(self.clone())
    }
}

/// Image of `v` under the word's action, leftmost letter first.
pub fn apply_word(pkg: &GroupPackage, w: &impl WordExpr, v: &FpVec) -> Result<FpVec> {
    w.apply_to(pkg, v)
}

/// Exact identity test: true iff the word fixes both anchors.
pub fn is_identity(pkg: &GroupPackage, w: &impl WordExpr) -> Result<bool> {
    let anchors = pkg.anchors();
    Ok(w.apply_to(pkg, &anchors.v1)? == anchors.v1
        && w.apply_to(pkg, &anchors.v2)? == anchors.v2)
}

/// Monte Carlo identity test against one random vector: `false` is always
/// correct; `true` is wrong with small probability.
///
/// The vector is the first anchor pushed through a short random walk over
/// the generators, i.e. a random point of the anchor's orbit. The anchor's
/// small stabilizer keeps the false-positive rate low even at desk scale,
/// where a uniformly random vector would be fixed by far too many elements.
pub fn is_identity_mc<R: Rng + ?Sized>(
    pkg: &GroupPackage,
    w: &impl WordExpr,
    rng: &mut R,
) -> Result<bool> {
    use crate::island::GenLetter;
    let mut v = pkg.anchors().v1.clone();
    for _ in 0..20 {
        let m = match rng.random_range(0..6u8) {
            0 => pkg.gen_letter_matrix(GenLetter::A),
            1 => pkg.gen_letter_matrix(GenLetter::AInv),
            2 => pkg.gen_letter_matrix(GenLetter::B),
            3 => pkg.gen_letter_matrix(GenLetter::BInv),
            4 => pkg.t_mat(),
            _ => pkg.t_inv_mat(),
        };
        v = v.apply(m)?;
    }
    Ok(w.apply_to(pkg, &v)? == v)
}

/// Smallest k >= 1 with w^k the identity, found by iterating the action on
/// the anchor pair, at most `max_order` steps.
pub fn order(pkg: &GroupPackage, w: &impl WordExpr) -> Result<u32> {
    let anchors = pkg.anchors();
    let mut c1 = anchors.v1.clone();
    let mut c2 = anchors.v2.clone();
    for k in 1..=pkg.max_order() {
        c1 = w.apply_to(pkg, &c1)?;
        c2 = w.apply_to(pkg, &c2)?;
        if c1 == anchors.v1 && c2 == anchors.v2 {
            return Ok(k);
        }
    }
    Err(Error::OrderOverflow {
        max: pkg.max_order(),
    })
}

/// [`order`] specialized to a matrix action.
pub fn order_of_matrix(pkg: &GroupPackage, m: &FpMat) -> Result<u32> {
    order(pkg, m)
}

/// If the word has even order n, its n/2-th power — an involution.
pub fn power_to_involution(pkg: &GroupPackage, w: &Word) -> Result<Option<PowerWord>> {
    let n = order(pkg, w)?;
    if n % 2 == 0 {
        Ok(Some(w.power(n as u64 / 2)))
    } else {
        Ok(None)
    }
}

/// If u has even order 2k, returns y = u^k. When u is a product of two
/// involutions t'z this is the dihedral trick: y commutes with both t' and z.
pub fn dihedral_even_power(pkg: &GroupPackage, u: &Word) -> Result<Option<PowerWord>> {
    power_to_involution(pkg, u)
}

/// Ambient conjugacy class label of an involution, via the signature table.
pub fn class_of_involution(pkg: &GroupPackage, t: &impl WordExpr) -> Result<String> {
    let m = t.to_matrix(pkg)?;
    if m.is_identity() || !m.mul(&m)?.is_identity() {
        return Err(Error::NotInvolution(order_of_matrix(pkg, &m).unwrap_or(0)));
    }
    let table = pkg.class_table();
    let sig = table.signature_of(pkg, &m)?;
    table
        .lookup(&sig)
        .map(|s| s.to_string())
        .ok_or_else(|| Error::UnknownSignature(render_signature(&sig)))
}

/// Product of the letter matrices in application order.
pub fn to_matrix(pkg: &GroupPackage, w: &impl WordExpr) -> Result<FpMat> {
    w.to_matrix(pkg)
}

/// Trace of the word's matrix realization.
pub fn trace_of_word(pkg: &GroupPackage, w: &impl WordExpr) -> Result<u8> {
    Ok(w.to_matrix(pkg)?.trace())
}
