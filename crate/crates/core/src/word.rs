//! The word algebra: alternating sequences of island letters and shuttle
//! letters T / T^-1, with reduction, concatenation, inversion and the length
//! count.
//!
//! Multiplication of group elements is concatenation of words. A word is
//! reduced by summing adjacent shuttle exponents mod 3 (the shuttle has order
//! 3), multiplying adjacent island letters together, and deleting island
//! identity letters, repeated to a fixed point. The empty word is the group
//! identity.

use crate::error::{Error, Result};
use crate::island::IslandElem;
use crate::linalg::FpMat;

/// One letter of a word: an island element or a shuttle power.
///
/// Shuttle exponents are stored mod 3 as 1 (T) or 2 (T^-1 = T^2); exponent 0
/// never survives reduction.
#[derive(Debug, Clone, PartialEq)]
pub enum Letter {
    Island(IslandElem),
    Shuttle(u8),
}

impl Letter {
    pub fn shuttle(exp: u8) -> Letter {
        debug_assert!(exp == 1 || exp == 2);
        Letter::Shuttle(exp)
    }
}

/// A word over the island and the shuttle.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    letters: Vec<Letter>,
    reduced: bool,
}

impl Word {
    /// The empty word, i.e. the group identity.
    pub fn empty() -> Word {
        Word {
            letters: Vec::new(),
            reduced: true,
        }
    }

    /// A word from raw letters; call [`Word::reduce`] to canonicalize.
    pub fn from_letters(letters: Vec<Letter>) -> Word {
        let reduced = letters.is_empty();
        Word { letters, reduced }
    }

    pub fn single(letter: Letter) -> Word {
        Word::from_letters(vec![letter]).reduce()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Letter count; island letters and shuttle letters each count 1.
    /// Meaningful as the length of the representation once reduced.
    pub fn length(&self) -> usize {
        self.letters.len()
    }

    /// Reduced word representing the same group element.
    pub fn reduce(&self) -> Word {
        if self.reduced {
            return self.clone();
        }
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for letter in &self.letters {
            push_reduced(&mut out, letter.clone());
        }
        Word {
            letters: out,
            reduced: true,
        }
    }

    /// `self` followed by `other`, reduced.
    pub fn concat(&self, other: &Word) -> Result<Word> {
        check_compatible(self, other)?;
        let mut letters = Vec::with_capacity(self.letters.len() + other.letters.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(Word::from_letters(letters).reduce())
    }

    /// Reversal with every island letter inverted and every shuttle exponent
    /// negated mod 3, then reduced.
    pub fn invert(&self) -> Word {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|letter| match letter {
                Letter::Island(e) => Letter::Island(e.inverse()),
                Letter::Shuttle(exp) => Letter::Shuttle(3 - exp),
            })
            .collect();
        Word::from_letters(letters).reduce()
    }

    /// `self^k` as an annotation, without expanding letters.
    pub fn power(&self, k: u64) -> PowerWord {
        PowerWord {
            base: self.reduce(),
            exponent: k.max(1),
        }
    }

    /// `self^-1 other^-1 self other`, reduced.
    pub fn commutator(&self, other: &Word) -> Result<Word> {
        self.invert()
            .concat(&other.invert())?
            .concat(self)?
            .concat(other)
    }

    /// Conjugate `self^c = c^-1 self c`, reduced.
    pub fn conjugate_by(&self, c: &Word) -> Result<Word> {
        c.invert().concat(self)?.concat(c)
    }

    /// Space-separated tokens; island letters are rendered through `namer`.
    pub fn render_with(&self, mut namer: impl FnMut(&IslandElem) -> String) -> String {
        self.letters
            .iter()
            .map(|letter| match letter {
                Letter::Island(e) => namer(e),
                Letter::Shuttle(1) => "T".to_string(),
                Letter::Shuttle(_) => "T-".to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the word token format: `g:<name>` or `g=<name>` for island
    /// letters resolved through `resolve`, `T` and `T-` for shuttle letters.
    /// An empty line is the identity. The result is reduced.
    pub fn parse(text: &str, mut resolve: impl FnMut(&str) -> Option<FpMat>) -> Result<Word> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            match tok {
                "T" => letters.push(Letter::Shuttle(1)),
                "T-" => letters.push(Letter::Shuttle(2)),
                _ => {
                    let name = tok
                        .strip_prefix("g:")
                        .or_else(|| tok.strip_prefix("g="))
                        .ok_or_else(|| Error::Parse(format!("unknown word token {tok:?}")))?;
                    let mat = resolve(name).ok_or_else(|| {
                        Error::Parse(format!("island element {name:?} is not defined"))
                    })?;
                    letters.push(Letter::Island(IslandElem::from_matrix(mat)));
                }
            }
        }
        Ok(Word::from_letters(letters).reduce())
    }
}

/// `base^exponent` without letter blow-up. Internal to evaluation; never
/// serialized.
#[derive(Debug, Clone)]
pub struct PowerWord {
    pub base: Word,
    pub exponent: u64,
}

impl PowerWord {
    /// The conjugate `(base^k)^c = (base^c)^k`.
    pub fn conjugate_by(&self, c: &Word) -> Result<PowerWord> {
        Ok(PowerWord {
            base: self.base.conjugate_by(c)?,
            exponent: self.exponent,
        })
    }
}

fn push_reduced(out: &mut Vec<Letter>, letter: Letter) {
    let mut incoming = Some(letter);
    while let Some(letter) = incoming.take() {
        if let Letter::Island(e) = &letter {
            if e.matrix().is_identity() {
                return;
            }
        }
        match (out.last(), &letter) {
            (Some(Letter::Island(_)), Letter::Island(y)) => {
                let Some(Letter::Island(x)) = out.pop() else {
                    unreachable!()
                };
                let merged = x.mul(y).expect("adjacent island letters share a field");
                // re-enter: the merged letter may be the identity, exposing
                // two shuttle letters that now have to combine
                incoming = Some(Letter::Island(merged));
            }
            (Some(Letter::Shuttle(e1)), Letter::Shuttle(e2)) => {
                let sum = (e1 + e2) % 3;
                out.pop();
                if sum != 0 {
                    incoming = Some(Letter::Shuttle(sum));
                }
            }
            _ => out.push(letter),
        }
    }
}

fn check_compatible(a: &Word, b: &Word) -> Result<()> {
    let shape = |w: &Word| {
        w.letters.iter().find_map(|l| match l {
            Letter::Island(e) => Some((e.matrix().field().p(), e.matrix().dim())),
            _ => None,
        })
    };
    if let (Some((pa, da)), Some((pb, db))) = (shape(a), shape(b)) {
        if pa != pb || da != db {
            return Err(Error::FieldMismatch(format!(
                "words over GF({pa}) dim {da} and GF({pb}) dim {db}"
            )));
        }
    }
    Ok(())
}
