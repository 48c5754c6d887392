//! Exact dense linear algebra over a small prime field GF(p).
//!
//! Everything here is plain byte-per-entry arithmetic reduced mod p. The
//! observable contract is exactness; no floating point is involved anywhere.
//! Matrices are square and row-major, vectors are rows acting on the right
//! (`v * M`), so the leftmost factor of a product acts first.

use crate::error::{Error, Result};
use rand::Rng;
use std::fmt;

/// A prime modulus in [2, 251].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    p: u8,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(p: u32) -> Result<FieldSpec> {
        if p < 2 || p > 251 || !is_prime(p) {
            return Err(Error::BadModulus(p));
        }
        Ok(FieldSpec { p: p as u8 })
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.p as u16) as u8
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.p as u16) as u8
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(&self, a: u8) -> Result<u8> {
        if a % self.p == 0 {
            return Err(Error::SingularMatrix);
        }
        let mut result = 1u8;
        let mut base = a % self.p;
        let mut e = self.p as u32 - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        Ok(result)
    }
}

/// Row vector of residues mod p.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpVec {
    p: u8,
    entries: Vec<u8>,
}

impl FpVec {
    pub fn new(field: FieldSpec, entries: Vec<u8>) -> FpVec {
        let p = field.p();
        FpVec {
            p,
            entries: entries.into_iter().map(|e| e % p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { p: self.p }
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Uniform random vector from the injected generator state.
    pub fn random<R: Rng + ?Sized>(dim: usize, field: FieldSpec, rng: &mut R) -> FpVec {
        let entries = (0..dim).map(|_| rng.random_range(0..field.p())).collect();
        FpVec {
            p: field.p(),
            entries,
        }
    }

    /// Right action `v * M`.
    pub fn apply(&self, m: &FpMat) -> Result<FpVec> {
        if self.len() != m.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs matrix dimension {}",
                self.len(),
                m.dim()
            )));
        }
        if self.p != m.p {
            return Err(Error::FieldMismatch(format!("p {} vs {}", self.p, m.p)));
        }
        let d = m.dim();
        let p = self.p as u32;
        let mut out = vec![0u8; d];
        for (i, &vi) in self.entries.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            let row = &m.entries[i * d..(i + 1) * d];
            for j in 0..d {
                let acc = out[j] as u32 + vi as u32 * row[j] as u32;
                out[j] = (acc % p) as u8;
            }
        }
        Ok(FpVec {
            p: self.p,
            entries: out,
        })
    }

    /// Space-separated residue rendering.
    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse(field: FieldSpec, s: &str) -> Result<FpVec> {
        let mut entries = Vec::new();
        for tok in s.split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad vector entry {tok:?}")))?;
            if v >= field.p() as u32 {
                return Err(Error::Parse(format!(
                    "vector entry {v} out of range for p = {}",
                    field.p()
                )));
            }
            entries.push(v as u8);
        }
        Ok(FpVec {
            p: field.p(),
            entries,
        })
    }
}

impl fmt::Debug for FpVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpVec[{}]", self.render())
    }
}

/// Square matrix of residues mod p, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpMat {
    p: u8,
    dim: usize,
    entries: Vec<u8>,
}

impl FpMat {
    pub fn new(field: FieldSpec, dim: usize, entries: Vec<u8>) -> Result<FpMat> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        let p = field.p();
        Ok(FpMat {
            p,
            dim,
            entries: entries.into_iter().map(|e| e % p).collect(),
        })
    }

    pub fn identity(field: FieldSpec, dim: usize) -> FpMat {
        let mut entries = vec![0u8; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        FpMat {
            p: field.p(),
            dim,
            entries,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { p: self.p }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.entries[i * self.dim + j] = v % self.p;
    }

    pub fn is_identity(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { 1 } else { 0 };
                if self.get(i, j) != want {
                    return false;
                }
            }
        }
        true
    }

    /// Exact product mod p.
    pub fn mul(&self, other: &FpMat) -> Result<FpMat> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        if self.p != other.p {
            return Err(Error::FieldMismatch(format!("p {} vs {}", self.p, other.p)));
        }
        let d = self.dim;
        let p = self.p as u32;
        let mut out = vec![0u8; d * d];
        for i in 0..d {
            let lhs = &self.entries[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (k, &a) in lhs.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let row = &other.entries[k * d..(k + 1) * d];
                for j in 0..d {
                    let acc = dst[j] as u32 + a as u32 * row[j] as u32;
                    dst[j] = (acc % p) as u8;
                }
            }
        }
        Ok(FpMat {
            p: self.p,
            dim: d,
            entries: out,
        })
    }

    /// Inverse by exact Gauss-Jordan elimination mod p.
    pub fn inverse(&self) -> Result<FpMat> {
        let d = self.dim;
        let field = self.field();
        let mut work = self.entries.clone();
        let mut inv = FpMat::identity(field, d).entries;
        for col in 0..d {
            let pivot_row = (col..d)
                .find(|&r| work[r * d + col] != 0)
                .ok_or(Error::SingularMatrix)?;
            if pivot_row != col {
                for j in 0..d {
                    work.swap(col * d + j, pivot_row * d + j);
                    inv.swap(col * d + j, pivot_row * d + j);
                }
            }
            let scale = field.inv(work[col * d + col])?;
            for j in 0..d {
                work[col * d + j] = field.mul(work[col * d + j], scale);
                inv[col * d + j] = field.mul(inv[col * d + j], scale);
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = work[r * d + col];
                if factor == 0 {
                    continue;
                }
                for j in 0..d {
                    let sub = field.mul(factor, work[col * d + j]);
                    work[r * d + j] = field.add(work[r * d + j], field.neg(sub));
                    let sub = field.mul(factor, inv[col * d + j]);
                    inv[r * d + j] = field.add(inv[r * d + j], field.neg(sub));
                }
            }
        }
        Ok(FpMat {
            p: self.p,
            dim: d,
            entries: inv,
        })
    }

    /// Sum of the diagonal mod p.
    pub fn trace(&self) -> u8 {
        let mut acc = 0u32;
        for i in 0..self.dim {
            acc += self.get(i, i) as u32;
        }
        (acc % self.p as u32) as u8
    }

    /// Square-and-multiply power.
    pub fn pow(&self, mut k: u64) -> FpMat {
        let mut result = FpMat::identity(self.field(), self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base).expect("same shape");
            }
            base = base.mul(&base).expect("same shape");
            k >>= 1;
        }
        result
    }

    /// The `rows` x `cols` submatrix (0-based index lists, equal lengths).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<FpMat> {
        if rows.len() != cols.len() {
            return Err(Error::DimensionMismatch(format!(
                "submatrix index sets of sizes {} and {}",
                rows.len(),
                cols.len()
            )));
        }
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                if i >= self.dim || j >= self.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "submatrix index ({i},{j}) outside {}x{}",
                        self.dim, self.dim
                    )));
                }
                entries.push(self.get(i, j));
            }
        }
        FpMat::new(self.field(), rows.len(), entries)
    }

    /// Matrix text block: `matrix <name> <d>` followed by d rows, digit rows
    /// for p <= 7 and space-separated residues for larger p.
    pub fn render_block(&self, name: &str) -> String {
        let mut out = format!("matrix {name} {}\n", self.dim);
        for i in 0..self.dim {
            if self.p <= 7 {
                for j in 0..self.dim {
                    out.push((b'0' + self.get(i, j)) as char);
                }
            } else {
                let row: Vec<String> = (0..self.dim).map(|j| self.get(i, j).to_string()).collect();
                out.push_str(&row.join(" "));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for FpMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMat {}x{} mod {}", self.dim, self.dim, self.p)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Parses every `matrix <name> <d>` block in `text`, in file order.
pub fn parse_matrix_blocks(field: FieldSpec, text: &str) -> Result<Vec<(String, FpMat)>> {
    let mut out = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("matrix") {
            return Err(Error::Parse(format!("expected matrix block, got {line:?}")));
        }
        let name = parts
            .next()
            .ok_or_else(|| Error::Parse("matrix block without a name".into()))?
            .to_string();
        let dim: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad dimension in matrix block {name}")))?;
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            let row = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix {name} is truncated")))?
                .trim();
            if field.p() <= 7 {
                if row.len() != dim {
                    return Err(Error::Parse(format!(
                        "matrix {name}: row {row:?} does not have {dim} digits"
                    )));
                }
                for ch in row.chars() {
                    let v = ch
                        .to_digit(10)
                        .ok_or_else(|| Error::Parse(format!("matrix {name}: bad digit {ch:?}")))?;
                    if v >= field.p() as u32 {
                        return Err(Error::Parse(format!(
                            "matrix {name}: digit {v} out of range for p = {}",
                            field.p()
                        )));
                    }
                    entries.push(v as u8);
                }
            } else {
                let toks: Vec<&str> = row.split_whitespace().collect();
                if toks.len() != dim {
                    return Err(Error::Parse(format!(
                        "matrix {name}: row has {} entries, expected {dim}",
                        toks.len()
                    )));
                }
                for tok in toks {
                    let v: u32 = tok
                        .parse()
                        .map_err(|_| Error::Parse(format!("matrix {name}: bad entry {tok:?}")))?;
                    if v >= field.p() as u32 {
                        return Err(Error::Parse(format!(
                            "matrix {name}: entry {v} out of range for p = {}",
                            field.p()
                        )));
                    }
                    entries.push(v as u8);
                }
            }
        }
        out.push((name, FpMat::new(field, dim, entries)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf3() -> FieldSpec {
        FieldSpec::new(3).unwrap()
    }

    /// Permutation matrix: the value at position i moves to position sigma(i).
    fn perm_mat(field: FieldSpec, images: &[usize]) -> FpMat {
        let d = images.len();
        let mut m = FpMat::new(field, d, vec![0; d * d]).unwrap();
        for (i, &j) in images.iter().enumerate() {
            m.set(i, j, 1);
        }
        m
    }

    #[test]
    fn field_rejects_non_primes() {
        assert!(FieldSpec::new(1).is_err());
        assert!(FieldSpec::new(4).is_err());
        assert!(FieldSpec::new(255).is_err());
        assert!(FieldSpec::new(2).is_ok());
        assert!(FieldSpec::new(251).is_ok());
    }

    #[test]
    fn mul_identity_and_scalars() {
        let f = gf3();
        let i4 = FpMat::identity(f, 4);
        let m = perm_mat(f, &[1, 0, 3, 2]);
        assert_eq!(i4.mul(&m).unwrap(), m);
        assert_eq!(m.mul(&i4).unwrap(), m);

        // over GF(3), (2)*(2) = (1)
        let two = FpMat::new(f, 1, vec![2]).unwrap();
        assert_eq!(two.mul(&two).unwrap(), FpMat::identity(f, 1));
    }

    #[test]
    fn transposition_squares_to_identity() {
        let f = gf3();
        let p12 = perm_mat(f, &[1, 0, 2, 3]);
        assert!(p12.mul(&p12).unwrap().is_identity());
    }

    #[test]
    fn vec_apply_permutes_coordinates() {
        let f = gf3();
        let v = FpVec::new(f, vec![0, 1, 2, 0]);
        let p12 = perm_mat(f, &[1, 0, 2, 3]);
        assert_eq!(v.apply(&p12).unwrap().entries(), &[1, 0, 2, 0]);

        let i4 = FpMat::identity(f, 4);
        assert_eq!(v.apply(&i4).unwrap(), v);

        // constant vectors are fixed by every permutation matrix
        let ones = FpVec::new(f, vec![1, 1, 1, 1]);
        let p = perm_mat(f, &[2, 0, 3, 1]);
        assert_eq!(ones.apply(&p).unwrap(), ones);
    }

    #[test]
    fn inverse_basics() {
        let f = gf3();
        let i4 = FpMat::identity(f, 4);
        assert_eq!(i4.inverse().unwrap(), i4);

        // inverse of a permutation matrix is its transpose
        let p = perm_mat(f, &[1, 2, 3, 0]);
        let pinv = p.inverse().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(pinv.get(i, j), p.get(j, i));
            }
        }

        let two = FpMat::new(f, 1, vec![2]).unwrap();
        assert_eq!(two.inverse().unwrap(), two);

        let singular = FpMat::new(f, 2, vec![1, 2, 2, 1]).unwrap();
        assert!(matches!(singular.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn trace_values() {
        let f = gf3();
        assert_eq!(FpMat::identity(f, 4).trace(), 1); // 4 mod 3
        assert_eq!(FpMat::new(f, 4, vec![0; 16]).unwrap().trace(), 0);
        assert_eq!(perm_mat(f, &[1, 0, 2, 3]).trace(), 2); // two fixed points
    }

    #[test]
    fn random_vec_is_deterministic_per_seed() {
        let f = gf3();
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(FpVec::random(4, f, &mut r1), FpVec::random(4, f, &mut r2));

        let f2 = FieldSpec::new(2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let v = FpVec::random(1, f2, &mut r);
        assert!(v.entries()[0] < 2);
    }

    #[test]
    fn random_vec_varies_across_seeds() {
        let f = gf3();
        let mut distinct = 0;
        for seed in 0..1000u64 {
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = ChaCha8Rng::seed_from_u64(seed + 1000);
            if FpVec::random(8, f, &mut r1) != FpVec::random(8, f, &mut r2) {
                distinct += 1;
            }
        }
        assert!(distinct > 950, "only {distinct} of 1000 seed pairs differed");
    }

    #[test]
    fn mul_is_associative_and_compatible_with_apply() {
        let f = FieldSpec::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let d = rng.random_range(1..=8);
            let rand_mat = |rng: &mut ChaCha8Rng| {
                let entries = (0..d * d).map(|_| rng.random_range(0..5)).collect();
                FpMat::new(f, d, entries).unwrap()
            };
            let a = rand_mat(&mut rng);
            let b = rand_mat(&mut rng);
            let c = rand_mat(&mut rng);
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);

            let v = FpVec::random(d, f, &mut rng);
            let lhs = v.apply(&a.mul(&b).unwrap()).unwrap();
            let rhs = v.apply(&a).unwrap().apply(&b).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn inverse_roundtrip_on_random_invertibles() {
        let f = gf3();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 30 {
            let d = rng.random_range(1..=8);
            let entries = (0..d * d).map(|_| rng.random_range(0..3)).collect();
            let m = FpMat::new(f, d, entries).unwrap();
            if let Ok(minv) = m.inverse() {
                assert!(m.mul(&minv).unwrap().is_identity());
                assert!(minv.mul(&m).unwrap().is_identity());
                checked += 1;
            }
        }
    }

    #[test]
    fn matrix_block_roundtrip() {
        let f = gf3();
        let m = perm_mat(f, &[1, 0, 3, 2]);
        let text = m.render_block("z");
        let parsed = parse_matrix_blocks(f, &text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0, "z");
        assert_eq!(parsed[0].1, m);

        let f11 = FieldSpec::new(11).unwrap();
        let wide = FpMat::new(f11, 2, vec![10, 0, 3, 7]).unwrap();
        let text = wide.render_block("w");
        let parsed = parse_matrix_blocks(f11, &text).unwrap();
        assert_eq!(parsed[0].1, wide);
    }
}
