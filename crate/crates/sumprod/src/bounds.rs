//! Numeric evaluators for the bound calculus: admissible pairs, the
//! constrained-transform step, the iteration pair, the two-regime pair with
//! searched constants, Lambda, k(b), and the pigeonhole chain over sumset
//! growth.
//!
//! Everything works in log space: quantities like q^{(log K/delta)^{C/gamma}}
//! overflow doubles at the parameter regimes of interest, so every evaluator
//! takes and returns natural logarithms.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::config::Config;
use crate::setops::{self, IntSet};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("no grid point satisfies the transform constraints")]
    EmptyFeasibleSet,
    #[error("no multiplier choice satisfies the factor conditions: {0}")]
    ConstantSearchFailed(String),
    #[error("chain needs at least two sizes")]
    ChainTooShort,
    #[error("admissibility violated: {check} at ln_n={ln_n}, delta={delta}, k={k}")]
    AdmissibilityViolated {
        check: &'static str,
        ln_n: f64,
        delta: f64,
        k: f64,
    },
}

/// Evaluation point: N in log space, delta in (0, 1], K >= 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Point {
    pub ln_n: f64,
    pub delta: f64,
    pub k: f64,
}

impl Point {
    pub fn new(ln_n: f64, delta: f64, k: f64) -> Self {
        assert!(ln_n > 0.0 && delta > 0.0 && delta <= 1.0 && k >= 1.0);
        Point { ln_n, delta, k }
    }
}

type Eval = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// A pair of bound evaluators (phi, psi) in log space, together with the
/// named constants that produced them.
#[derive(Clone)]
pub struct AdmissiblePair {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    phi: Eval,
    psi: Eval,
}

impl AdmissiblePair {
    pub fn ln_phi(&self, p: &Point) -> f64 {
        (self.phi)(p)
    }

    pub fn ln_psi(&self, p: &Point) -> f64 {
        (self.psi)(p)
    }

    /// JSON record of one evaluation: inputs, constants, log-values.
    pub fn evaluate_json(&self, p: &Point) -> serde_json::Value {
        serde_json::json!({
            "pair": self.name,
            "params": self.params,
            "point": p,
            "ln_phi": self.ln_phi(p),
            "ln_psi": self.ln_psi(p),
        })
    }
}

impl std::fmt::Debug for AdmissiblePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdmissiblePair")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

fn lkd(p: &Point) -> f64 {
    // log(K/delta), clamped so iterated logs stay defined near K ~ delta.
    (p.k / p.delta).ln().max(1.0)
}

// ---------------------------------------------------------------------------
// Base pair
// ---------------------------------------------------------------------------

/// phi = (delta/K)^C N, psi = min(q^{(K/delta)^C}, N^{1/2}).
pub fn base_pair(q: f64, c: f64) -> AdmissiblePair {
    assert!(q >= 2.0 && c > 0.0);
    let phi = move |p: &Point| c * (p.delta.ln() - p.k.ln()) + p.ln_n;
    let psi = move |p: &Point| {
        let pow = (c * (p.k / p.delta).ln()).exp(); // (K/delta)^C, may be inf
        (pow * q.ln()).min(p.ln_n / 2.0)
    };
    AdmissiblePair {
        name: "base".into(),
        params: [("C".to_string(), c), ("q".to_string(), q)].into(),
        phi: Arc::new(phi),
        psi: Arc::new(psi),
    }
}

// ---------------------------------------------------------------------------
// Constrained transform
// ---------------------------------------------------------------------------

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// One grid evaluation of the transform at `p`: the minimum of
/// phi' * phi'' and Cq times the maximum of psi' * psi'' over all grid
/// tuples (N', N'', delta', delta'', K', K'') satisfying the four
/// constraints. All values are logs.
pub fn transform_eval(
    pair: &AdmissiblePair,
    p: &Point,
    grid: usize,
    cq: f64,
) -> Result<(f64, f64), BoundsError> {
    let ln_n = p.ln_n;
    let lk = p.k.ln().max(1.0); // log K clamped for the (3.5)/(3.8) bounds
    let l = lkd(p);
    // (3.5): N >= N'N'' > N (delta/log K)^40
    let prod_lo = ln_n + 40.0 * (p.delta.ln() - lk.ln());
    // (3.6): N' + N'' < (K/delta)^20 N^{1/2}
    let sum_hi = 20.0 * (p.k / p.delta).ln() + ln_n / 2.0;
    // (3.7): delta' delta'' > delta (log K/delta)^{-6}
    let dd_lo = p.delta.ln() - 6.0 * l.ln();
    // (3.8): K' K'' < delta^{-6} (log K)^{20} K
    let kk_hi = -6.0 * p.delta.ln() + 20.0 * lk.ln() + p.k.ln();

    let n_axis = axis(0.0, ln_n, grid);
    let d_axis = axis(dd_lo.min(0.0), 0.0, grid);
    let k_axis = axis(0.0, kk_hi.max(0.0), grid);

    let mut best_phi = f64::INFINITY;
    let mut best_psi = f64::NEG_INFINITY;
    let mut feasible = false;
    for &ln_n1 in &n_axis {
        for &ln_n2 in &n_axis {
            let prod = ln_n1 + ln_n2;
            if !(prod > prod_lo && prod <= ln_n) {
                continue;
            }
            // log(N' + N'') via stable log-sum-exp.
            let (a, b) = if ln_n1 >= ln_n2 {
                (ln_n1, ln_n2)
            } else {
                (ln_n2, ln_n1)
            };
            if a + (1.0 + (b - a).exp()).ln() >= sum_hi {
                continue;
            }
            for &ln_d1 in &d_axis {
                for &ln_d2 in &d_axis {
                    if ln_d1 + ln_d2 <= dd_lo {
                        continue;
                    }
                    for &ln_k1 in &k_axis {
                        for &ln_k2 in &k_axis {
                            if ln_k1 + ln_k2 >= kk_hi {
                                continue;
                            }
                            feasible = true;
                            let p1 = Point {
                                ln_n: ln_n1.max(f64::MIN_POSITIVE),
                                delta: ln_d1.exp(),
                                k: ln_k1.exp(),
                            };
                            let p2 = Point {
                                ln_n: ln_n2.max(f64::MIN_POSITIVE),
                                delta: ln_d2.exp(),
                                k: ln_k2.exp(),
                            };
                            let phi = pair.ln_phi(&p1) + pair.ln_phi(&p2);
                            let psi = pair.ln_psi(&p1) + pair.ln_psi(&p2);
                            if phi < best_phi {
                                best_phi = phi;
                            }
                            if psi > best_psi {
                                best_psi = psi;
                            }
                        }
                    }
                }
            }
        }
    }
    if !feasible {
        return Err(BoundsError::EmptyFeasibleSet);
    }
    Ok((best_phi, cq.ln() + best_psi))
}

/// Wrap a pair into its transform: per-point constrained grid min/max. On
/// an empty feasible set the evaluators fall back to the inner pair.
pub fn transform_pair(pair: &AdmissiblePair, cfg: &Config) -> AdmissiblePair {
    let q = pair.params.get("q").copied().unwrap_or(2.0);
    let cq = cfg.cq_mult * q;
    let grid = cfg.grid_points;
    let inner = pair.clone();
    let inner2 = pair.clone();
    let phi = move |p: &Point| match transform_eval(&inner, p, grid, cq) {
        Ok((f, _)) => f,
        Err(_) => inner.ln_phi(p),
    };
    let psi = move |p: &Point| match transform_eval(&inner2, p, grid, cq) {
        Ok((_, g)) => g,
        Err(_) => inner2.ln_psi(p),
    };
    let mut params = pair.params.clone();
    params.insert("Cq".to_string(), cq);
    params.insert("grid_points".to_string(), grid as f64);
    AdmissiblePair {
        name: format!("transform({})", pair.name),
        params,
        phi: Arc::new(phi),
        psi: Arc::new(psi),
    }
}

// ---------------------------------------------------------------------------
// Iteration pair
// ---------------------------------------------------------------------------

/// phi = (delta/K)^{C log log(K/delta)} N, psi = q^{(log K/delta)^{C/gamma}} N^gamma.
pub fn lemma43_pair(gamma: f64, q: f64, c: f64) -> AdmissiblePair {
    assert!(gamma > 0.0 && gamma < 1.0);
    let phi = move |p: &Point| {
        let l = lkd(p);
        // log log clamped at 0 so the exponent never turns negative.
        let ll = l.ln().max(0.0);
        -c * ll * l + p.ln_n
    };
    let psi = move |p: &Point| {
        let l = lkd(p);
        ((c / gamma) * l.ln().max(0.0)).exp() * q.ln() + gamma * p.ln_n
    };
    AdmissiblePair {
        name: "lemma43".into(),
        params: [
            ("C".to_string(), c),
            ("q".to_string(), q),
            ("gamma".to_string(), gamma),
        ]
        .into(),
        phi: Arc::new(phi),
        psi: Arc::new(psi),
    }
}

/// The internal depth schedule of the iteration at a point: t = 2^ell on
/// the scale of log(K/delta), and log A = (1/gamma) log t.
pub fn lemma43_schedule(gamma: f64, p: &Point) -> (u32, f64, f64) {
    let l = lkd(p).max(2.0);
    let ell = l.log2().round().max(1.0) as u32;
    let t = (1u64 << ell.min(62)) as f64;
    (ell, t, t.ln() / gamma)
}

// ---------------------------------------------------------------------------
// Two-regime pair with searched constants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Lemma51Constants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// ln(N-bar) actually used (possibly escalated).
    pub log_n_bar: f64,
    /// Chosen multipliers A2/A1 and A3/A2, B2/B1 and B3/B2.
    pub mult_a2: f64,
    pub mult_a3: f64,
    pub mult_b2: f64,
    pub mult_b3: f64,
    /// Worst sampled margins: min ln u, min ln v, max ln u', max ln v'.
    pub min_ln_u: f64,
    pub min_ln_v: f64,
    pub max_ln_up: f64,
    pub max_ln_vp: f64,
}

const LN_20_11: f64 = 0.5978370007556204; // ln(20/11)

fn factor_margins(
    a1: f64,
    a2: f64,
    a3: f64,
    b1: f64,
    b2: f64,
    b3: f64,
    samples: &[Point],
) -> (f64, f64, f64, f64) {
    let mut min_u = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_up = f64::NEG_INFINITY;
    let mut max_vp = f64::NEG_INFINITY;
    for p in samples {
        let ll = p.ln_n.ln();
        // u = (log N)^{-20A1 - 6A2 ll N - 40} e^{(9/10) A3 (ll N)^2}
        let ln_u = -(20.0 * a1 + 6.0 * a2 * ll + 40.0) * ll + 0.9 * a3 * ll * ll;
        // v = delta^{6A1 - ln(20/11) A2 + 40}
        let ln_v = (6.0 * a1 - LN_20_11 * a2 + 40.0) * p.delta.ln();
        // u' = (log N)^{20B1 + 6B2 ll N} e^{-(9/10) B3 (ll N)^2}
        let ln_up = (20.0 * b1 + 6.0 * b2 * ll) * ll - 0.9 * b3 * ll * ll;
        // v' = delta^{-6B1 + ln(20/11) B2}
        let ln_vp = (-6.0 * b1 + LN_20_11 * b2) * p.delta.ln();
        min_u = min_u.min(ln_u);
        min_v = min_v.min(ln_v);
        max_up = max_up.max(ln_up);
        max_vp = max_vp.max(ln_vp);
    }
    (min_u, min_v, max_up, max_vp)
}

/// Sample grid in the pair's validity region: N >= N-bar, delta in
/// [0.01, 1], K/delta < N^{10^-6}.
fn lemma51_samples(log_n_bar: f64, per_axis: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for ln_n in axis(log_n_bar, 2.0 * log_n_bar, per_axis) {
        for ln_d in axis((0.01f64).ln(), 0.0, per_axis) {
            let ln_k_max = (1e-6 * ln_n + ln_d).max(0.0);
            for ln_k in axis(0.0, ln_k_max, per_axis) {
                out.push(Point {
                    ln_n,
                    delta: ln_d.exp(),
                    k: ln_k.exp(),
                });
            }
        }
    }
    out
}

/// Choose the constants A1..A3, B1..B3: A1 and B1 from the anchor scale
/// N-bar, the rest by the smallest power-of-two multipliers that make the
/// sampled factors u, v at least 1 and u', v' at most 1. The anchor
/// escalates (tenfold in log N-bar) until the scaling property of phi also
/// holds on the sample grid.
pub fn lemma51_constants(
    tau: f64,
    gamma: f64,
    cfg: &Config,
) -> Result<Lemma51Constants, BoundsError> {
    assert!(tau > 0.0 && tau < 0.5 && gamma > 0.0 && gamma < 0.5);
    let mut log_n_bar = cfg.log_n_bar;
    for _ in 0..8 {
        let lln = log_n_bar.ln();
        let a1 = cfg.c0 * lln;
        let b1 = ((1.0 - cfg.lemma51_c * gamma).max(0.1) * lln).exp();
        let samples = lemma51_samples(log_n_bar, 8);
        let mults = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
        let mut found: Option<Lemma51Constants> = None;
        'search: for &ma2 in &mults {
            for &ma3 in &mults {
                for &mb2 in &mults {
                    for &mb3 in &mults {
                        let (a2, a3) = (ma2 * a1, ma3 * ma2 * a1);
                        let (b2, b3) = (mb2 * b1, mb3 * mb2 * b1);
                        let (mu, mv, mup, mvp) =
                            factor_margins(a1, a2, a3, b1, b2, b3, &samples);
                        if mu >= 0.0 && mv >= 0.0 && mup <= 0.0 && mvp <= 0.0 {
                            found = Some(Lemma51Constants {
                                a1,
                                a2,
                                a3,
                                b1,
                                b2,
                                b3,
                                log_n_bar,
                                mult_a2: ma2,
                                mult_a3: ma3,
                                mult_b2: mb2,
                                mult_b3: mb3,
                                min_ln_u: mu,
                                min_ln_v: mv,
                                max_ln_up: mup,
                                max_ln_vp: mvp,
                            });
                            break 'search;
                        }
                    }
                }
            }
        }
        if let Some(c) = found {
            // Scaling of phi needs 2 A3 llN / ln N <= tau over the region;
            // the binding case is the smallest N.
            if 2.0 * c.a3 * lln / log_n_bar <= tau {
                return Ok(c);
            }
        }
        log_n_bar *= 10.0;
    }
    Err(BoundsError::ConstantSearchFailed(format!(
        "tau={tau} gamma={gamma} log_n_bar up to {log_n_bar}"
    )))
}

/// phi = K^{-A1} delta^{A2 llN} e^{A3 (llN)^2} N^{1-tau},
/// psi = K^{B1} delta^{-B2 llN} e^{-B3 (llN)^2} N^gamma.
pub fn lemma51_pair(tau: f64, gamma: f64, cfg: &Config) -> Result<AdmissiblePair, BoundsError> {
    let c = lemma51_constants(tau, gamma, cfg)?;
    let (a1, a2, a3, b1, b2, b3) = (c.a1, c.a2, c.a3, c.b1, c.b2, c.b3);
    let phi = move |p: &Point| {
        let ll = p.ln_n.ln().max(0.0);
        -a1 * p.k.ln() + a2 * ll * p.delta.ln() + a3 * ll * ll + (1.0 - tau) * p.ln_n
    };
    let psi = move |p: &Point| {
        let ll = p.ln_n.ln().max(0.0);
        b1 * p.k.ln() - b2 * ll * p.delta.ln() - b3 * ll * ll + gamma * p.ln_n
    };
    let params: BTreeMap<String, f64> = [
        ("A1".to_string(), a1),
        ("A2".to_string(), a2),
        ("A3".to_string(), a3),
        ("B1".to_string(), b1),
        ("B2".to_string(), b2),
        ("B3".to_string(), b3),
        ("tau".to_string(), tau),
        ("gamma".to_string(), gamma),
        ("log_n_bar".to_string(), c.log_n_bar),
    ]
    .into();
    Ok(AdmissiblePair {
        name: "lemma51".into(),
        params,
        phi: Arc::new(phi),
        psi: Arc::new(psi),
    })
}

// ---------------------------------------------------------------------------
// Admissibility sampling
// ---------------------------------------------------------------------------

/// Sampling region for [`check_admissible`].
#[derive(Debug, Clone, Copy)]
pub struct SampleRegion {
    pub ln_n: (f64, f64),
    pub delta: (f64, f64),
    /// K ranges over [1, N^k_exp_max].
    pub k_exp_max: f64,
}

impl SampleRegion {
    pub fn desk() -> Self {
        SampleRegion {
            ln_n: (10.0, 40.0),
            delta: (0.01, 1.0),
            k_exp_max: 0.25,
        }
    }

    /// Validity region of the two-regime pair: N >= N-bar, K small per its
    /// induction hypothesis.
    pub fn large(log_n_bar: f64) -> Self {
        SampleRegion {
            ln_n: (log_n_bar, 2.0 * log_n_bar),
            delta: (0.01, 1.0),
            k_exp_max: 1e-6,
        }
    }
}

/// Check monotonicity (phi up in N and delta, down in K; psi up in K) and
/// the scaling property (phi(N)/N non-increasing in N) on a log-spaced
/// sample grid of `per_axis`^3 points.
pub fn check_admissible(
    pair: &AdmissiblePair,
    region: &SampleRegion,
    per_axis: usize,
) -> Result<(), BoundsError> {
    let eps = 1e-9;
    let ln_ns = axis(region.ln_n.0, region.ln_n.1, per_axis);
    let ln_ds = axis(region.delta.0.ln(), region.delta.1.ln(), per_axis);
    let violation = |check, p: &Point| BoundsError::AdmissibilityViolated {
        check,
        ln_n: p.ln_n,
        delta: p.delta,
        k: p.k,
    };
    for &ln_n in &ln_ns {
        let ln_ks = axis(0.0, region.k_exp_max * ln_n, per_axis);
        for &ln_d in &ln_ds {
            for &ln_k in &ln_ks {
                let p = Point {
                    ln_n,
                    delta: ln_d.exp(),
                    k: ln_k.exp(),
                };
                // Neighbor in each axis direction.
                let dn = (region.ln_n.1 - region.ln_n.0) / (per_axis - 1).max(1) as f64;
                let pn = Point { ln_n: ln_n + dn, ..p };
                if pair.ln_phi(&pn) + eps < pair.ln_phi(&p) {
                    return Err(violation("phi increasing in N", &p));
                }
                // Scaling (3.1): phi(N)/N non-increasing.
                if pair.ln_phi(&pn) - pn.ln_n > pair.ln_phi(&p) - p.ln_n + eps {
                    return Err(violation("phi(N)/N non-increasing", &p));
                }
                let dd = (ln_d + 0.1).min(0.0);
                let pd = Point {
                    delta: dd.exp(),
                    ..p
                };
                if pd.delta > p.delta && pair.ln_phi(&pd) + eps < pair.ln_phi(&p) {
                    return Err(violation("phi increasing in delta", &p));
                }
                let pk = Point { k: (ln_k + 0.1).exp(), ..p };
                if pair.ln_phi(&pk) > pair.ln_phi(&p) + eps {
                    return Err(violation("phi decreasing in K", &p));
                }
                if pair.ln_psi(&pk) + eps < pair.ln_psi(&p) {
                    return Err(violation("psi increasing in K", &p));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Lambda and k(b)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct LambdaResult {
    pub lambda: f64,
    pub tau: f64,
    pub gamma: f64,
    pub constants: Lemma51Constants,
    /// Lambda > 2 A1/tau, Lambda > B1, Lambda gamma / (2 B2) > 1.
    pub consequences: [bool; 3],
}

/// Lambda = 2 A1/tau + A2 + B1 + 2 B2/gamma, with its three stated
/// consequences checked.
pub fn compute_lambda(tau: f64, gamma: f64, c: &Lemma51Constants) -> LambdaResult {
    let lambda = 2.0 * c.a1 / tau + c.a2 + c.b1 + 2.0 * c.b2 / gamma;
    LambdaResult {
        lambda,
        tau,
        gamma,
        constants: c.clone(),
        consequences: [
            lambda > 2.0 * c.a1 / tau,
            lambda > c.b1,
            lambda * gamma / (2.0 * c.b2) > 1.0,
        ],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KOfB {
    pub b: u32,
    pub gamma: f64,
    pub tau: f64,
    /// Moment fed to the calculus: q = 2h with h = 2b.
    pub q: f64,
    pub lambda: f64,
    /// log2 k = ceil(100 b Lambda); k itself only when it fits in u128.
    pub log2_k: f64,
    pub k: Option<u128>,
    /// log2 of the single-constant form C^{b^4}.
    pub remark_log2_k: f64,
    pub remark_c: f64,
}

/// k(b) = 2^{ceil(100 b Lambda(b))} with gamma = tau = 1/(100b), q = 4b.
pub fn compute_k_of_b(b: u32, cfg: &Config) -> Result<KOfB, BoundsError> {
    assert!(b >= 1);
    let gamma = 1.0 / (100.0 * b as f64);
    let tau = gamma;
    let consts = lemma51_constants(tau, gamma, cfg)?;
    let lr = compute_lambda(tau, gamma, &consts);
    let log2_k = (100.0 * b as f64 * lr.lambda).ceil();
    let remark_c: f64 = 2.0;
    Ok(KOfB {
        b,
        gamma,
        tau,
        q: 4.0 * b as f64,
        lambda: lr.lambda,
        log2_k,
        k: if log2_k < 128.0 {
            Some(1u128 << log2_k as u32)
        } else {
            None
        },
        remark_log2_k: (b as f64).powi(4) * remark_c.log2(),
        remark_c,
    })
}

// ---------------------------------------------------------------------------
// Pigeonhole chain and the dichotomy driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ChainResult {
    /// Selected scale k0 = 2^{l0}.
    pub k0: u64,
    pub l0: usize,
    /// |2 k0 A| / |k0 A|, the minimal consecutive ratio.
    pub ratio: f64,
    pub trail: Vec<f64>,
    /// ratio <= (sizes[l]/sizes[0])^{1/l}: min vs geometric mean.
    pub le_geometric_mean: bool,
}

/// Given sizes |2^j A| for j = 0..=l, return the j with the smallest
/// consecutive ratio. Ties break toward smaller j.
pub fn pigeonhole_chain(sizes: &[f64]) -> Result<ChainResult, BoundsError> {
    if sizes.len() < 2 {
        return Err(BoundsError::ChainTooShort);
    }
    assert!(sizes.windows(2).all(|w| w[0] > 0.0 && w[1] >= w[0]));
    let trail: Vec<f64> = sizes.windows(2).map(|w| w[1] / w[0]).collect();
    let l0 = trail
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let ratio = trail[l0];
    let ell = trail.len() as f64;
    let gm = (sizes[sizes.len() - 1] / sizes[0]).powf(1.0 / ell);
    Ok(ChainResult {
        k0: 1u64 << l0,
        l0,
        ratio,
        trail,
        le_geometric_mean: ratio <= gm * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    SumHorn,
    ProductHorn,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriverRow {
    pub k: u64,
    pub sumset_size: usize,
    pub productset_size: usize,
    /// log_N of the two sizes.
    pub sum_exponent: f64,
    pub prod_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriverResult {
    pub n: usize,
    pub b: u32,
    pub rows: Vec<DriverRow>,
    pub chain: Option<ChainResult>,
    pub verdict: Verdict,
    pub truncated: bool,
}

/// Desk-scale enactment of the dichotomy: compute |2^j A| and |A^{(2^j)}|
/// as far as the budget allows and report which side grows faster. Purely
/// empirical; no asymptotic claim.
pub fn theorem_driver(a: &IntSet, b: u32, budget: usize) -> Result<DriverResult, BoundsError> {
    let n = a.len();
    if n <= 1 {
        return Ok(DriverResult {
            n,
            b,
            rows: vec![DriverRow {
                k: 1,
                sumset_size: n,
                productset_size: n,
                sum_exponent: 0.0,
                prod_exponent: 0.0,
            }],
            chain: None,
            verdict: Verdict::Degenerate,
            truncated: false,
        });
    }
    let ln_n = (n as f64).ln();
    let mut rows = Vec::new();
    let mut truncated = false;
    let mut k = 1u64;
    // Stop once 2^j exceeds roughly N^b on both sides or budget is hit.
    let target = (n as f64).powi(b as i32);
    loop {
        let sum = setops::iterated_sumset_budget(a, k as u32, budget);
        let prod = setops::product_set_size_budget(a, k as u32, budget);
        let (ssize, psize) = match (sum, prod) {
            (Ok(s), Ok(p)) => (s.len(), p),
            _ => {
                truncated = true;
                break;
            }
        };
        rows.push(DriverRow {
            k,
            sumset_size: ssize,
            productset_size: psize,
            sum_exponent: (ssize as f64).ln() / ln_n,
            prod_exponent: (psize as f64).ln() / ln_n,
        });
        if (ssize as f64 > target && psize as f64 > target) || k >= 1 << 6 {
            break;
        }
        k *= 2;
    }
    let sizes: Vec<f64> = rows.iter().map(|r| r.sumset_size as f64).collect();
    let chain = if sizes.len() >= 2 {
        Some(pigeonhole_chain(&sizes)?)
    } else {
        None
    };
    let last = rows.last().unwrap();
    let verdict = if last.sum_exponent >= last.prod_exponent {
        Verdict::SumHorn
    } else {
        Verdict::ProductHorn
    };
    Ok(DriverResult {
        n,
        b,
        rows,
        chain,
        verdict,
        truncated,
    })
}
