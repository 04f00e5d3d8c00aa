//! Prime-exponent lattice: positive integers as exponent vectors.
//!
//! An integer n = prod_p p^{a_p} maps to the vector (a_p) over an ordered
//! basis of primes. Product sets of integers become sumsets of lattice
//! points, which is what every downstream module computes with.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("n = {n} has a cofactor {cofactor} with no prime factor in the basis")]
    CofactorRemains { n: u64, cofactor: u64 },
    #[error("basis must be nonempty, strictly increasing and all prime (offending entry {0})")]
    InvalidBasis(u64),
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("index {0} out of range for basis of size {1}")]
    IndexOutOfRange(usize, usize),
    #[error("vector length {got} does not match basis size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("input set must be nonempty with all elements >= 1")]
    EmptyOrNonPositive,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).map_or(false, |sq| sq <= n) {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Ordered list of distinct primes p_1 < p_2 < ... < p_t.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeBasis {
    primes: Vec<u64>,
}

impl PrimeBasis {
    pub fn new(primes: Vec<u64>) -> Result<Self, LatticeError> {
        if primes.is_empty() {
            return Err(LatticeError::InvalidBasis(0));
        }
        for (i, &p) in primes.iter().enumerate() {
            if !is_prime(p) {
                return Err(LatticeError::InvalidBasis(p));
            }
            if i > 0 && primes[i - 1] >= p {
                return Err(LatticeError::InvalidBasis(p));
            }
        }
        Ok(Self { primes })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Sorted union of two bases.
    pub fn union(&self, other: &PrimeBasis) -> PrimeBasis {
        let set: BTreeSet<u64> = self
            .primes
            .iter()
            .chain(other.primes.iter())
            .copied()
            .collect();
        PrimeBasis {
            primes: set.into_iter().collect(),
        }
    }

    /// Sub-basis made of the coordinates in `indices` (0-based, ascending).
    pub fn sub_basis(&self, indices: &[usize]) -> Result<PrimeBasis, LatticeError> {
        if indices.is_empty() {
            return Err(LatticeError::EmptyIndexSet);
        }
        let mut primes = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.primes.len() {
                return Err(LatticeError::IndexOutOfRange(i, self.primes.len()));
            }
            primes.push(self.primes[i]);
        }
        Ok(PrimeBasis { primes })
    }
}

/// A point of the exponent lattice: one non-negative exponent per basis prime.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn zeros(len: usize) -> Self {
        ExponentVector(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise sum (vector addition = integer multiplication).
    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        debug_assert_eq!(self.0.len(), other.0.len());
        ExponentVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise signed difference.
    pub fn sub_signed(&self, other: &ExponentVector) -> Vec<i64> {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect()
    }
}

/// A finite subset of the exponent lattice over a fixed basis.
///
/// Elements are kept sorted lexicographically and deduplicated, so iteration
/// order is canonical and reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpSet {
    basis: PrimeBasis,
    elements: Vec<ExponentVector>,
}

impl ExpSet {
    pub fn new(
        basis: PrimeBasis,
        elements: impl IntoIterator<Item = ExponentVector>,
    ) -> Result<Self, LatticeError> {
        let t = basis.len();
        let mut set = BTreeSet::new();
        for v in elements {
            if v.len() != t {
                return Err(LatticeError::LengthMismatch {
                    got: v.len(),
                    expected: t,
                });
            }
            set.insert(v);
        }
        Ok(ExpSet {
            basis,
            elements: set.into_iter().collect(),
        })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn elements(&self) -> &[ExponentVector] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: &ExponentVector) -> bool {
        self.elements.binary_search(v).is_ok()
    }

    /// Re-express this set over a larger basis containing the current one.
    pub fn reindex(&self, new_basis: &PrimeBasis) -> Result<ExpSet, LatticeError> {
        let mut positions = Vec::with_capacity(self.basis.len());
        for &p in self.basis.primes() {
            match new_basis.primes().binary_search(&p) {
                Ok(pos) => positions.push(pos),
                Err(_) => return Err(LatticeError::InvalidBasis(p)),
            }
        }
        let elements = self.elements.iter().map(|v| {
            let mut w = vec![0u32; new_basis.len()];
            for (i, &pos) in positions.iter().enumerate() {
                w[pos] = v.0[i];
            }
            ExponentVector(w)
        });
        ExpSet::new(new_basis.clone(), elements)
    }
}

/// Exponent vector of `n` over `basis` by trial division.
pub fn factorize(n: u64, basis: &PrimeBasis) -> Result<ExponentVector, LatticeError> {
    if n == 0 {
        return Err(LatticeError::EmptyOrNonPositive);
    }
    let mut rest = n;
    let mut exps = vec![0u32; basis.len()];
    for (i, &p) in basis.primes().iter().enumerate() {
        while rest % p == 0 {
            rest /= p;
            exps[i] += 1;
        }
    }
    if rest != 1 {
        return Err(LatticeError::CofactorRemains { n, cofactor: rest });
    }
    Ok(ExponentVector(exps))
}

/// Inverse of [`factorize`]: prod p_i^{v_i}, arbitrary precision.
pub fn evaluate(v: &ExponentVector, basis: &PrimeBasis) -> Result<BigUint, LatticeError> {
    if v.len() != basis.len() {
        return Err(LatticeError::LengthMismatch {
            got: v.len(),
            expected: basis.len(),
        });
    }
    let mut acc = BigUint::one();
    for (&p, &e) in basis.primes().iter().zip(v.0.iter()) {
        acc *= BigUint::from(p).pow(e);
    }
    Ok(acc)
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.checked_mul(d).map_or(false, |sq| sq <= n) {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Embed a finite set of positive integers into the exponent lattice over
/// the minimal basis (sorted union of prime factors). The embedding is a
/// bijection, so cardinality is preserved exactly.
pub fn embed_set(a: &[u64]) -> Result<(PrimeBasis, ExpSet), LatticeError> {
    if a.is_empty() || a.contains(&0) {
        return Err(LatticeError::EmptyOrNonPositive);
    }
    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for &n in a {
        primes.extend(prime_factors(n));
    }
    // A set of units {1} has no prime factors; keep a one-prime basis so
    // vectors are nonempty.
    if primes.is_empty() {
        primes.insert(2);
    }
    let basis = PrimeBasis {
        primes: primes.into_iter().collect(),
    };
    let mut elements = Vec::with_capacity(a.len());
    for &n in a {
        elements.push(factorize(n, &basis)?);
    }
    let set = ExpSet::new(basis.clone(), elements)?;
    Ok((basis, set))
}

/// Coordinate restriction pi_I of a set (indices 0-based). Collisions merge.
pub fn project(s: &ExpSet, indices: &[usize]) -> Result<ExpSet, LatticeError> {
    let sub = s.basis().sub_basis(indices)?;
    let elements = s
        .elements()
        .iter()
        .map(|v| ExponentVector(indices.iter().map(|&i| v.0[i]).collect()));
    ExpSet::new(sub, elements)
}

/// True iff pi_I is injective on `s`.
pub fn projection_injective(s: &ExpSet, indices: &[usize]) -> Result<bool, LatticeError> {
    Ok(project(s, indices)?.len() == s.len())
}

/// Text serialization: a header line `primes p1 p2 ...` followed by one line
/// per element with space-separated exponents. Exact round trip.
pub fn expset_to_text(s: &ExpSet) -> String {
    let mut out = String::from("primes");
    for p in s.basis().primes() {
        let _ = write!(out, " {p}");
    }
    out.push('\n');
    for v in s.elements() {
        let mut first = true;
        for e in &v.0 {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{e}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parse the text format produced by [`expset_to_text`].
pub fn expset_from_text(text: &str) -> Result<ExpSet, LatticeError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(LatticeError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("primes") {
        return Err(LatticeError::Parse {
            line: 1,
            msg: "header must start with 'primes'".into(),
        });
    }
    let mut primes = Vec::new();
    for tok in parts {
        let p: u64 = tok.parse().map_err(|_| LatticeError::Parse {
            line: 1,
            msg: format!("bad prime '{tok}'"),
        })?;
        primes.push(p);
    }
    let basis = PrimeBasis::new(primes).map_err(|e| LatticeError::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let t = basis.len();
    let mut elements = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut exps = Vec::with_capacity(t);
        for tok in line.split_whitespace() {
            let e: u32 = tok.parse().map_err(|_| LatticeError::Parse {
                line: i + 1,
                msg: format!("bad exponent '{tok}'"),
            })?;
            exps.push(e);
        }
        if exps.len() != t {
            return Err(LatticeError::Parse {
                line: i + 1,
                msg: format!("expected {t} exponents, got {}", exps.len()),
            });
        }
        elements.push(ExponentVector(exps));
    }
    ExpSet::new(basis, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(primes: &[u64]) -> PrimeBasis {
        PrimeBasis::new(primes.to_vec()).unwrap()
    }

    #[test]
    fn factorize_examples() {
        let b = basis(&[2, 3]);
        assert_eq!(factorize(12, &b).unwrap(), ExponentVector(vec![2, 1]));
        assert_eq!(factorize(1, &b).unwrap(), ExponentVector(vec![0, 0]));
        assert_eq!(
            factorize(10, &b),
            Err(LatticeError::CofactorRemains { n: 10, cofactor: 5 })
        );
    }

    #[test]
    fn evaluate_examples() {
        let b = basis(&[2, 3]);
        assert_eq!(
            evaluate(&ExponentVector(vec![2, 1]), &b).unwrap(),
            BigUint::from(12u32)
        );
        assert_eq!(
            evaluate(&ExponentVector(vec![0, 0]), &b).unwrap(),
            BigUint::one()
        );
        // Oracle: repeated multiplication.
        let mut oracle = BigUint::one();
        for _ in 0..10 {
            oracle *= BigUint::from(2u32);
        }
        for _ in 0..10 {
            oracle *= BigUint::from(3u32);
        }
        assert_eq!(evaluate(&ExponentVector(vec![10, 10]), &b).unwrap(), oracle);
    }

    #[test]
    fn embed_examples() {
        let (b, s) = embed_set(&[1, 2, 3, 6]).unwrap();
        assert_eq!(b.primes(), &[2, 3]);
        assert_eq!(s.len(), 4);
        assert!(s.contains(&ExponentVector(vec![0, 0])));
        assert!(s.contains(&ExponentVector(vec![1, 1])));

        let (b, s) = embed_set(&[5]).unwrap();
        assert_eq!(b.primes(), &[5]);
        assert_eq!(s.elements(), &[ExponentVector(vec![1])]);

        let (b, s) = embed_set(&[8, 12]).unwrap();
        assert_eq!(b.primes(), &[2, 3]);
        assert!(s.contains(&ExponentVector(vec![3, 0])));
        assert!(s.contains(&ExponentVector(vec![2, 1])));
    }

    #[test]
    fn embed_preserves_cardinality() {
        let a: Vec<u64> = vec![3, 5, 9, 14, 30, 31, 1024];
        let (_, s) = embed_set(&a).unwrap();
        assert_eq!(s.len(), a.len());
    }

    #[test]
    fn project_examples() {
        let b = basis(&[2, 3]);
        let s = ExpSet::new(
            b,
            vec![ExponentVector(vec![1, 0]), ExponentVector(vec![0, 1])],
        )
        .unwrap();
        let p = project(&s, &[0]).unwrap();
        assert_eq!(p.len(), 2);
        let full = project(&s, &[0, 1]).unwrap();
        assert_eq!(full, s);

        let b3 = basis(&[2, 3, 5]);
        let s3 = ExpSet::new(
            b3,
            vec![
                ExponentVector(vec![0, 0, 1]),
                ExponentVector(vec![0, 1, 0]),
            ],
        )
        .unwrap();
        let p1 = project(&s3, &[0]).unwrap();
        assert_eq!(p1.len(), 1); // collision
        assert!(!projection_injective(&s3, &[0]).unwrap());
        assert!(projection_injective(&s3, &[1]).unwrap());
    }

    #[test]
    fn project_empty_index_set() {
        let (_, s) = embed_set(&[2, 3]).unwrap();
        assert!(matches!(project(&s, &[]), Err(LatticeError::EmptyIndexSet)));
    }

    #[test]
    fn roundtrip_and_homomorphism() {
        let b = basis(&[2, 3, 7]);
        for n in 1u64..500 {
            if let Ok(v) = factorize(n, &b) {
                assert_eq!(evaluate(&v, &b).unwrap(), BigUint::from(n));
            }
        }
        let m = 12u64;
        let n = 126u64;
        let vm = factorize(m, &b).unwrap();
        let vn = factorize(n, &b).unwrap();
        assert_eq!(factorize(m * n, &b).unwrap(), vm.add(&vn));
    }

    #[test]
    fn text_roundtrip() {
        let (_, s) = embed_set(&[1, 2, 3, 6, 8, 12, 35]).unwrap();
        let text = expset_to_text(&s);
        let back = expset_from_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(expset_to_text(&back), text);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(expset_from_text("").is_err());
        assert!(expset_from_text("primes 4\n").is_err());
        assert!(expset_from_text("primes 2 3\n1\n").is_err());
        assert!(expset_from_text("nope 2\n").is_err());
    }
}
