//! Sumset and product-set kernels, representation functions, additive
//! energies, graph-restricted sumsets and doubling constants.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{self, ExpSet, ExponentVector, LatticeError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SetError {
    #[error("set contains a non-positive element")]
    NonPositiveElement,
    #[error("budget of {budget} elements exceeded (reached {reached})")]
    BudgetExceeded { budget: usize, reached: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A finite sorted set of integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntSet {
    elements: Vec<i64>,
}

impl IntSet {
    pub fn new(elements: impl IntoIterator<Item = i64>) -> Self {
        let set: BTreeSet<i64> = elements.into_iter().collect();
        IntSet {
            elements: set.into_iter().collect(),
        }
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn min(&self) -> Option<i64> {
        self.elements.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.elements.last().copied()
    }

    pub fn all_positive(&self) -> bool {
        self.elements.first().map_or(false, |&x| x >= 1)
    }
}

fn sumset_ints_budget(a: &[i64], b: &[i64], budget: usize) -> Result<Vec<i64>, SetError> {
    let mut out = BTreeSet::new();
    for &x in a {
        for &y in b {
            out.insert(x + y);
        }
        // Abort mid-stage: a full pairwise pass can dwarf the budget.
        if out.len() > budget {
            return Err(SetError::BudgetExceeded {
                budget,
                reached: out.len(),
            });
        }
    }
    Ok(out.into_iter().collect())
}

/// kA = {x_1 + ... + x_k : x_i in A}, computed by binary doubling.
pub fn iterated_sumset(s: &IntSet, k: u32) -> IntSet {
    iterated_sumset_budget(s, k, usize::MAX).expect("no budget")
}

/// Same as [`iterated_sumset`] but aborts once an intermediate set exceeds
/// `budget` elements.
pub fn iterated_sumset_budget(s: &IntSet, k: u32, budget: usize) -> Result<IntSet, SetError> {
    assert!(k >= 1, "k must be >= 1");
    let mut result: Option<Vec<i64>> = None; // accumulates sum over set bits
    let mut power = s.elements.clone(); // 2^j A
    let mut rem = k;
    loop {
        if rem & 1 == 1 {
            let next = match &result {
                None => power.clone(),
                Some(r) => sumset_ints_budget(r, &power, budget)?,
            };
            result = Some(next);
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        power = sumset_ints_budget(&power, &power, budget)?;
    }
    Ok(IntSet {
        elements: result.unwrap(),
    })
}

fn sumset_exp_budget(
    a: &[ExponentVector],
    b: &[ExponentVector],
    budget: usize,
) -> Result<Vec<ExponentVector>, SetError> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            out.insert(x.add(y));
        }
        if out.len() > budget {
            return Err(SetError::BudgetExceeded {
                budget,
                reached: out.len(),
            });
        }
    }
    Ok(out.into_iter().collect())
}

/// k-fold sumset in the exponent lattice (vector addition).
pub fn iterated_sumset_exp(s: &ExpSet, k: u32) -> ExpSet {
    iterated_sumset_exp_budget(s, k, usize::MAX).expect("no budget")
}

pub fn iterated_sumset_exp_budget(s: &ExpSet, k: u32, budget: usize) -> Result<ExpSet, SetError> {
    assert!(k >= 1, "k must be >= 1");
    let mut result: Option<Vec<ExponentVector>> = None;
    let mut power = s.elements().to_vec();
    let mut rem = k;
    loop {
        if rem & 1 == 1 {
            let next = match &result {
                None => power.clone(),
                Some(r) => sumset_exp_budget(r, &power, budget)?,
            };
            result = Some(next);
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        power = sumset_exp_budget(&power, &power, budget)?;
    }
    Ok(ExpSet::new(s.basis().clone(), result.unwrap())?)
}

/// k-fold product set of a set of positive integers, computed in exponent
/// space and evaluated back to (arbitrary-precision) integers.
pub fn product_set(a: &IntSet, k: u32) -> Result<Vec<BigUint>, SetError> {
    if !a.all_positive() {
        return Err(SetError::NonPositiveElement);
    }
    let ints: Vec<u64> = a.elements.iter().map(|&x| x as u64).collect();
    let (basis, exps) = lattice::embed_set(&ints)?;
    let sum = iterated_sumset_exp(&exps, k);
    let mut out: Vec<BigUint> = sum
        .elements()
        .iter()
        .map(|v| lattice::evaluate(v, &basis).expect("matching basis"))
        .collect();
    out.sort();
    Ok(out)
}

/// |A^{(k)}| without materializing the integer products.
pub fn product_set_size(a: &IntSet, k: u32) -> Result<usize, SetError> {
    if !a.all_positive() {
        return Err(SetError::NonPositiveElement);
    }
    let ints: Vec<u64> = a.elements.iter().map(|&x| x as u64).collect();
    let (_, exps) = lattice::embed_set(&ints)?;
    Ok(iterated_sumset_exp(&exps, k).len())
}

pub fn product_set_size_budget(a: &IntSet, k: u32, budget: usize) -> Result<usize, SetError> {
    if !a.all_positive() {
        return Err(SetError::NonPositiveElement);
    }
    let ints: Vec<u64> = a.elements.iter().map(|&x| x as u64).collect();
    let (_, exps) = lattice::embed_set(&ints)?;
    Ok(iterated_sumset_exp_budget(&exps, k, budget)?.len())
}

/// A bipartite graph over index ranges 0..n_left and 0..n_right.
///
/// The fiber query G(x) scans both orientations, matching the symmetric
/// reading of a graph over A x A when both sides coincide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    rows: Vec<Vec<usize>>,
    #[serde(skip)]
    cols: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(
        n_left: usize,
        n_right: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .inspect(|&(i, j)| {
                assert!(i < n_left && j < n_right, "edge ({i},{j}) out of range");
            })
            .collect();
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut g = BipartiteGraph {
            n_left,
            n_right,
            edges,
            rows: Vec::new(),
            cols: Vec::new(),
        };
        g.rebuild_adjacency();
        g
    }

    pub fn full(n_left: usize, n_right: usize) -> Self {
        let edges = (0..n_left).flat_map(|i| (0..n_right).map(move |j| (i, j)));
        BipartiteGraph::new(n_left, n_right, edges)
    }

    fn rebuild_adjacency(&mut self) {
        self.rows = vec![Vec::new(); self.n_left];
        self.cols = vec![Vec::new(); self.n_right];
        for &(i, j) in &self.edges {
            self.rows[i].push(j);
            self.cols[j].push(i);
        }
    }

    /// Restore adjacency indexes after deserialization.
    pub fn reindex(&mut self) {
        self.rebuild_adjacency();
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    /// Exact edge density |G| / (N1 N2).
    pub fn density(&self) -> Ratio<u64> {
        if self.n_left == 0 || self.n_right == 0 {
            return Ratio::new(0, 1);
        }
        Ratio::new(
            self.edges.len() as u64,
            (self.n_left as u64) * (self.n_right as u64),
        )
    }

    /// Induced subgraph on subsets of the two sides, re-indexed to the
    /// positions within `left` / `right` (which must be sorted).
    pub fn induced(&self, left: &[usize], right: &[usize]) -> BipartiteGraph {
        let lpos: HashMap<usize, usize> = left.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let rpos: HashMap<usize, usize> = right.iter().enumerate().map(|(p, &j)| (j, p)).collect();
        let edges = self.edges.iter().filter_map(|&(i, j)| {
            match (lpos.get(&i), rpos.get(&j)) {
                (Some(&a), Some(&b)) => Some((a, b)),
                _ => None,
            }
        });
        BipartiteGraph::new(left.len(), right.len(), edges.collect::<Vec<_>>())
    }
}

/// Graph-restricted sumset over arbitrary element types.
pub fn graph_sumset_by<T: Ord, F: Fn(usize, usize) -> T>(
    g: &BipartiteGraph,
    add: F,
) -> BTreeSet<T> {
    g.edges().iter().map(|&(i, j)| add(i, j)).collect()
}

/// A1 +_G A2 for integer sides.
pub fn graph_sumset(a1: &IntSet, a2: &IntSet, g: &BipartiteGraph) -> IntSet {
    assert_eq!(g.n_left(), a1.len());
    assert_eq!(g.n_right(), a2.len());
    let sums = graph_sumset_by(g, |i, j| a1.elements()[i] + a2.elements()[j]);
    IntSet {
        elements: sums.into_iter().collect(),
    }
}

/// A1 +_G A2 for exponent-lattice sides.
pub fn graph_sumset_exp(a1: &ExpSet, a2: &ExpSet, g: &BipartiteGraph) -> BTreeSet<ExponentVector> {
    assert_eq!(g.n_left(), a1.len());
    assert_eq!(g.n_right(), a2.len());
    graph_sumset_by(g, |i, j| a1.elements()[i].add(&a2.elements()[j]))
}

/// K(G) = |A1 +_G A2| / sqrt(N1 N2); 0 for an empty graph.
pub fn doubling_constant(a1: &IntSet, a2: &IntSet, g: &BipartiteGraph) -> f64 {
    if a1.is_empty() || a2.is_empty() || g.edge_count() == 0 {
        return 0.0;
    }
    let s = graph_sumset(a1, a2, g).len() as f64;
    s / ((a1.len() as f64) * (a2.len() as f64)).sqrt()
}

pub fn doubling_constant_exp(a1: &ExpSet, a2: &ExpSet, g: &BipartiteGraph) -> f64 {
    if a1.is_empty() || a2.is_empty() || g.edge_count() == 0 {
        return 0.0;
    }
    let s = graph_sumset_exp(a1, a2, g).len() as f64;
    s / ((a1.len() as f64) * (a2.len() as f64)).sqrt()
}

/// r_h(n; A) for all n, via iterated hash-map convolution. Exact counts.
pub fn representation_counts_hash(a: &IntSet, h: u32) -> BTreeMap<i64, u128> {
    assert!(h >= 1);
    let mut counts: BTreeMap<i64, u128> = a.elements().iter().map(|&x| (x, 1u128)).collect();
    for _ in 1..h {
        let mut next: BTreeMap<i64, u128> = BTreeMap::new();
        for (&s, &c) in &counts {
            for &x in a.elements() {
                *next.entry(s + x).or_insert(0) += c;
            }
        }
        counts = next;
    }
    counts
}

/// r_h(n; A) via dense integer convolution over the affine-normalized range.
pub fn representation_counts_conv(a: &IntSet, h: u32) -> BTreeMap<i64, u128> {
    assert!(h >= 1);
    if a.is_empty() {
        return BTreeMap::new();
    }
    let min = a.min().unwrap();
    let width = (a.max().unwrap() - min) as usize;
    let mut counts = vec![0u128; width + 1];
    for &x in a.elements() {
        counts[(x - min) as usize] = 1;
    }
    let offsets: Vec<usize> = a.elements().iter().map(|&x| (x - min) as usize).collect();
    for step in 1..h {
        let mut next = vec![0u128; width * (step as usize + 1) + 1];
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &o in &offsets {
                next[s + o] += c;
            }
        }
        counts = next;
    }
    let base = min * h as i64;
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(s, c)| (base + s as i64, c))
        .collect()
}

/// Predicted dense-range size for the convolution engine.
fn conv_range(a: &IntSet, h: u32) -> Option<usize> {
    let min = a.min()?;
    let max = a.max()?;
    Some((max - min) as usize * h as usize + 1)
}

const CONV_RANGE_LIMIT: usize = 10_000_000;

/// r_h(n; A), choosing the engine by predicted memory.
pub fn representation_counts(a: &IntSet, h: u32) -> BTreeMap<i64, u128> {
    match conv_range(a, h) {
        Some(r) if r <= CONV_RANGE_LIMIT => representation_counts_conv(a, h),
        _ => representation_counts_hash(a, h),
    }
}

/// E_h(A) = sum_n r_h(n; A)^2.
pub fn additive_energy(a: &IntSet, h: u32) -> u128 {
    representation_counts(a, h).values().map(|&c| c * c).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBound {
    pub lower_bound: f64,
    pub sumset_size: usize,
    pub holds: bool,
}

/// Cauchy-Schwarz bound |hA| >= N^{2h} / E_h(A); `holds` is certified by an
/// exact integer comparison.
pub fn energy_sumset_bound(a: &IntSet, h: u32) -> EnergyBound {
    let counts = representation_counts(a, h);
    let energy: u128 = counts.values().map(|&c| c * c).sum();
    let sumset_size = counts.len();
    let n = a.len() as u128;
    let n_pow = n.pow(2 * h);
    EnergyBound {
        lower_bound: n_pow as f64 / energy as f64,
        sumset_size,
        holds: n_pow <= energy * sumset_size as u128,
    }
}

/// S - S for an integer set.
pub fn difference_set(s: &IntSet) -> IntSet {
    let mut out = BTreeSet::new();
    for &x in s.elements() {
        for &y in s.elements() {
            out.insert(x - y);
        }
    }
    IntSet {
        elements: out.into_iter().collect(),
    }
}

/// A/A realized as the signed difference set of the lattice image. The map
/// through exponent space is a bijection, so |A/A| = |cal A - cal A| exactly.
pub fn quotient_set(a: &IntSet) -> Result<BTreeSet<Vec<i64>>, SetError> {
    if !a.all_positive() {
        return Err(SetError::NonPositiveElement);
    }
    let ints: Vec<u64> = a.elements().iter().map(|&x| x as u64).collect();
    let (_, exps) = lattice::embed_set(&ints)?;
    let mut out = BTreeSet::new();
    for x in exps.elements() {
        for y in exps.elements() {
            out.insert(x.sub_signed(y));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RuzsaAudit {
    pub n: usize,
    pub sumset_size: usize,
    pub diffset_size: usize,
    pub doubling: f64,
    pub holds: bool,
}

/// Ruzsa sum-difference audit: |cal A - cal A| <= K^2 |cal A| with
/// K = |cal A + cal A| / |cal A|, checked exactly in integers.
pub fn ruzsa_audit(a: &IntSet) -> Result<RuzsaAudit, SetError> {
    let ints: Vec<u64> = a
        .elements()
        .iter()
        .map(|&x| if x >= 1 { Ok(x as u64) } else { Err(SetError::NonPositiveElement) })
        .collect::<Result<_, _>>()?;
    let (_, exps) = lattice::embed_set(&ints)?;
    let n = exps.len();
    let sumset_size = iterated_sumset_exp(&exps, 2).len();
    let diffset_size = quotient_set(a)?.len();
    // |A-A| <= (|A+A|/N)^2 N  <=>  |A-A| * N <= |A+A|^2
    let holds = (diffset_size as u128) * (n as u128) <= (sumset_size as u128).pow(2);
    Ok(RuzsaAudit {
        n,
        sumset_size,
        diffset_size,
        doubling: sumset_size as f64 / n as f64,
        holds,
    })
}

/// CSV rows `n,count` for a representation-count table.
pub fn rep_counts_csv(counts: &BTreeMap<i64, u128>) -> String {
    let mut out = String::from("n,count\n");
    for (n, c) in counts {
        out.push_str(&format!("{n},{c}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterated_sumset_examples() {
        let a = IntSet::new([1, 2]);
        assert_eq!(iterated_sumset(&a, 2).elements(), &[2, 3, 4]);
        assert_eq!(iterated_sumset(&a, 1), a);
        let b = IntSet::new([0, 1]);
        assert_eq!(iterated_sumset(&b, 3).elements(), &[0, 1, 2, 3]);
    }

    #[test]
    fn product_set_examples() {
        let a = IntSet::new([2, 3]);
        let p = product_set(&a, 2).unwrap();
        let expect: Vec<BigUint> = [4u32, 6, 9].iter().map(|&x| BigUint::from(x)).collect();
        assert_eq!(p, expect);

        // Brute-force pairwise oracle.
        let a = IntSet::new([1, 2, 3, 6]);
        let mut brute = BTreeSet::new();
        for &x in a.elements() {
            for &y in a.elements() {
                brute.insert(x * y);
            }
        }
        assert_eq!(product_set_size(&a, 2).unwrap(), brute.len());
        assert_eq!(brute.len(), 9);

        let s = IntSet::new([5]);
        assert_eq!(product_set(&s, 7).unwrap(), vec![BigUint::from(5u32).pow(7)]);
    }

    #[test]
    fn product_set_rejects_nonpositive() {
        let a = IntSet::new([0, 2]);
        assert_eq!(product_set(&a, 2), Err(SetError::NonPositiveElement));
    }

    #[test]
    fn graph_sumset_examples() {
        let a = IntSet::new([0, 1]);
        let full = BipartiteGraph::full(2, 2);
        assert_eq!(graph_sumset(&a, &a, &full).elements(), &[0, 1, 2]);
        let single = BipartiteGraph::new(2, 2, [(0, 0)]);
        assert_eq!(graph_sumset(&a, &a, &single).elements(), &[0]);
        let empty = BipartiteGraph::new(2, 2, []);
        assert!(graph_sumset(&a, &a, &empty).is_empty());
    }

    #[test]
    fn doubling_constant_examples() {
        let a = IntSet::new([0, 1]);
        let full = BipartiteGraph::full(2, 2);
        assert!((doubling_constant(&a, &a, &full) - 1.5).abs() < 1e-12);

        let n = 17;
        let ap = IntSet::new(0..n);
        let full = BipartiteGraph::full(n as usize, n as usize);
        let expect = (2 * n - 1) as f64 / n as f64;
        assert!((doubling_constant(&ap, &ap, &full) - expect).abs() < 1e-12);

        let empty = BipartiteGraph::new(2, 2, []);
        assert_eq!(doubling_constant(&a, &a, &empty), 0.0);
    }

    #[test]
    fn representation_count_examples() {
        let a = IntSet::new([1, 2]);
        assert_eq!(representation_counts(&a, 2)[&3], 2);

        let a = IntSet::new([3, 7, 10]);
        let r1 = representation_counts(&a, 1);
        for &x in a.elements() {
            assert_eq!(r1[&x], 1);
        }
        assert_eq!(r1.len(), 3);

        let a = IntSet::new([0, 1, 2]);
        let r2 = representation_counts(&a, 2);
        let expect: BTreeMap<i64, u128> =
            [(0, 1), (1, 2), (2, 3), (3, 2), (4, 1)].into_iter().collect();
        assert_eq!(r2, expect);
    }

    #[test]
    fn engines_agree() {
        let sets = [
            IntSet::new([0, 1, 2]),
            IntSet::new([-5, 3, 7, 100]),
            IntSet::new([1, 2, 4, 8, 16, 32]),
            IntSet::new([0]),
        ];
        for a in &sets {
            for h in 1..=3 {
                assert_eq!(
                    representation_counts_hash(a, h),
                    representation_counts_conv(a, h),
                    "engines disagree on {a:?} h={h}"
                );
            }
        }
    }

    #[test]
    fn energy_examples() {
        let a = IntSet::new([0, 1, 2]);
        // Brute force over all 81 quadruples.
        let mut brute = 0u128;
        for &x in a.elements() {
            for &y in a.elements() {
                for &z in a.elements() {
                    for &w in a.elements() {
                        if x + y == z + w {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(brute, 19);
        assert_eq!(additive_energy(&a, 2), 19);
        assert_eq!(additive_energy(&a, 1), a.len() as u128);

        // AP beats a spread-out set of the same size.
        let ap = IntSet::new(0..8);
        let random = IntSet::new([3, 17, 40, 110, 260, 511, 700, 1021]);
        assert!(additive_energy(&ap, 2) > additive_energy(&random, 2));
    }

    #[test]
    fn energy_bound_examples() {
        let a = IntSet::new([0, 1, 2]);
        let b = energy_sumset_bound(&a, 2);
        assert!(b.holds);
        assert_eq!(b.sumset_size, 5);
        assert!((b.lower_bound - 81.0 / 19.0).abs() < 1e-12);

        let singleton = IntSet::new([7]);
        let b = energy_sumset_bound(&singleton, 2);
        assert!(b.holds);
        assert_eq!(b.sumset_size, 1);
    }

    #[test]
    fn difference_and_quotient_examples() {
        let s = IntSet::new([0, 1, 3]);
        assert_eq!(
            difference_set(&s).elements(),
            &[-3, -2, -1, 0, 1, 2, 3]
        );
        let q = quotient_set(&IntSet::new([2, 4])).unwrap();
        let expect: BTreeSet<Vec<i64>> =
            [vec![-1], vec![0], vec![1]].into_iter().collect();
        assert_eq!(q, expect);
        let q = quotient_set(&IntSet::new([9])).unwrap();
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn ruzsa_audit_examples() {
        let r = ruzsa_audit(&IntSet::new([1, 2, 3, 6])).unwrap();
        assert!(r.holds);
        let r = ruzsa_audit(&IntSet::new([2, 4, 8, 16])).unwrap();
        assert!(r.holds);
        assert_eq!(r.diffset_size, 7);
        let r = ruzsa_audit(&IntSet::new([5])).unwrap();
        assert!(r.holds);
        assert_eq!(r.diffset_size, 1);
    }

    #[test]
    fn sumset_affine_invariance() {
        let a = IntSet::new([2, 5, 11, 13]);
        let mapped = IntSet::new(a.elements().iter().map(|&x| 7 * x - 3));
        for k in 1..=3 {
            assert_eq!(
                iterated_sumset(&a, k).len(),
                iterated_sumset(&mapped, k).len()
            );
        }
    }

    #[test]
    fn graph_monotonicity() {
        let a = IntSet::new([0, 1, 5, 9]);
        let small = BipartiteGraph::new(4, 4, [(0, 1), (2, 3)]);
        let big = BipartiteGraph::new(4, 4, [(0, 1), (2, 3), (1, 1), (3, 0)]);
        let s_small = graph_sumset(&a, &a, &small);
        let s_big = graph_sumset(&a, &a, &big);
        assert!(s_small.elements().iter().all(|x| s_big.elements().contains(x)));
        assert!(doubling_constant(&a, &a, &small) <= doubling_constant(&a, &a, &big));
    }

    #[test]
    fn budget_truncates() {
        let a = IntSet::new(0..50);
        let err = iterated_sumset_budget(&a, 8, 10).unwrap_err();
        assert!(matches!(err, SetError::BudgetExceeded { .. }));
    }
}
