//! Numerical lower bounds for Lambda_q constants of finite integer sets.
//!
//! lambda_q(A) is the largest L^q(T) norm of a unit-l2 trigonometric
//! polynomial with spectrum in A. For even q = 2h the grid quadrature is
//! exact once M > h * spread(A), so the values reported here are certified
//! one-sided bounds, not approximations of "the" constant.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::setops::{additive_energy, IntSet};

#[derive(Debug, Error, PartialEq)]
pub enum LambdaError {
    #[error("grid with M = {m} too coarse for exact quadrature (need M > {need})")]
    GridTooCoarse { m: usize, need: usize },
    #[error("moment q must be >= 2, got {0}")]
    MomentTooSmall(f64),
    #[error("support frequency {n} shares the factor {p}")]
    CoprimalityViolated { n: i64, p: u64 },
    #[error("moment q must be a positive even integer for exact quadrature, got {0}")]
    OddMoment(u32),
    #[error("coefficient vector has l2 norm {0}, exceeding 1")]
    NormTooLarge(f64),
    #[error("empty set")]
    EmptySet,
}

/// Equispaced quadrature points theta_j = j/M on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TorusGrid {
    pub m: usize,
}

impl TorusGrid {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        TorusGrid { m }
    }

    /// Default grid for an even moment 2h: twice the exactness threshold.
    pub fn for_even_moment(a: &IntSet, h: u32) -> Self {
        let spread = spread(a);
        TorusGrid::new(4 * h as usize * spread + 1)
    }

    /// Smallest grid that is exact for moment 2h over `a`.
    pub fn exact_threshold(a: &IntSet, h: u32) -> usize {
        h as usize * spread(a)
    }
}

fn spread(a: &IntSet) -> usize {
    match (a.min(), a.max()) {
        (Some(lo), Some(hi)) => (hi - lo) as usize,
        _ => 0,
    }
}

/// Unit-l2 coefficients indexed by the elements of a fixed set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub coeffs: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, LambdaError> {
        let norm = l2_norm(&coeffs);
        if norm > 1.0 + 1e-12 {
            return Err(LambdaError::NormTooLarge(norm));
        }
        Ok(CoefficientVector { coeffs })
    }

    pub fn uniform(n: usize) -> Self {
        let v = 1.0 / (n as f64).sqrt();
        CoefficientVector {
            coeffs: vec![Complex64::new(v, 0.0); n],
        }
    }

    pub fn concentrated(n: usize, idx: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[idx] = Complex64::new(1.0, 0.0);
        CoefficientVector { coeffs }
    }

    pub fn l2(&self) -> f64 {
        l2_norm(&self.coeffs)
    }
}

fn l2_norm(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(coeffs: &mut [Complex64]) {
    let n = l2_norm(coeffs);
    if n > 0.0 {
        for c in coeffs.iter_mut() {
            *c /= n;
        }
    }
}

/// Sample F(theta_j) = sum_n c_n e^{2 pi i n theta_j} on the grid.
///
/// Frequencies are recentered by the minimum; |F| is unchanged under that
/// modulation and the required grid shrinks.
fn sample_poly(freqs: &[i64], coeffs: &[Complex64], grid: TorusGrid) -> Vec<Complex64> {
    let lo = freqs.iter().copied().min().unwrap_or(0);
    let m = grid.m;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (f, c) in freqs.iter().zip(coeffs.iter()) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let shifted = ((f - lo) as usize) % m;
        let step = std::f64::consts::TAU * shifted as f64 / m as f64;
        for (j, slot) in out.iter_mut().enumerate() {
            let phase = step * j as f64;
            *slot += c * Complex64::new(phase.cos(), phase.sin());
        }
    }
    out
}

fn norm_from_samples(samples: &[Complex64], q: f64) -> f64 {
    let m = samples.len() as f64;
    let s: f64 = samples.iter().map(|v| v.norm().powf(q)).sum();
    (s / m).powf(1.0 / q)
}

/// L^q(T) quadrature norm of sum c_n e^{2 pi i n theta} over spectrum `a`.
pub fn trig_norm(a: &IntSet, c: &CoefficientVector, q: f64, grid: TorusGrid) -> Result<f64, LambdaError> {
    if q < 2.0 {
        return Err(LambdaError::MomentTooSmall(q));
    }
    if a.is_empty() {
        return Err(LambdaError::EmptySet);
    }
    assert_eq!(a.len(), c.coeffs.len());
    let samples = sample_poly(a.elements(), &c.coeffs, grid);
    Ok(norm_from_samples(&samples, q))
}

/// Exact L^{2h} norm: errors out if the grid misses the exactness threshold.
pub fn trig_norm_even_exact(
    a: &IntSet,
    c: &CoefficientVector,
    h: u32,
    grid: TorusGrid,
) -> Result<f64, LambdaError> {
    let need = TorusGrid::exact_threshold(a, h);
    if grid.m <= need {
        return Err(LambdaError::GridTooCoarse { m: grid.m, need });
    }
    trig_norm(a, c, (2 * h) as f64, grid)
}

/// (E_h(A) / N^h)^{1/2h}: the exact L^{2h} norm of the uniform-coefficient
/// polynomial, computed combinatorially. A certified lower bound for
/// lambda_{2h}(A).
pub fn lambda_uniform_even(a: &IntSet, h: u32) -> f64 {
    assert!(h >= 1);
    let e = additive_energy(a, h) as f64;
    let n = a.len() as f64;
    (e / n.powi(h as i32)).powf(1.0 / (2 * h) as f64)
}

/// Triangle-inequality upper bound sqrt(N).
pub fn lambda_trivial_upper(a: &IntSet) -> f64 {
    (a.len() as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaEstimate {
    pub set: Vec<i64>,
    pub q: f64,
    /// Best certified value found; the certificate reproduces it.
    pub lower: f64,
    /// Structural upper bound sqrt(N).
    pub upper: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub restarts: u32,
    pub iterations: u64,
    pub seed: u64,
    /// re/im pairs aligned with `set`.
    pub certificate: Vec<(f64, f64)>,
}

/// Objective ||F||_q^q on the grid plus its gradient with respect to the
/// conjugate coefficients (the ascent direction on the sphere).
fn objective_and_grad(
    freqs: &[i64],
    coeffs: &[Complex64],
    q: f64,
    grid: TorusGrid,
) -> (f64, Vec<Complex64>) {
    let samples = sample_poly(freqs, coeffs, grid);
    let m = grid.m as f64;
    let mut obj = 0.0;
    let mut weights = Vec::with_capacity(samples.len());
    for v in &samples {
        let r = v.norm();
        obj += r.powf(q);
        let w = if r > 0.0 { r.powf(q - 2.0) } else { 0.0 };
        weights.push(v * w);
    }
    obj /= m;
    let lo = freqs.iter().copied().min().unwrap_or(0);
    let mm = grid.m;
    let mut grad = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    for (idx, f) in freqs.iter().enumerate() {
        let shifted = ((f - lo) as usize) % mm;
        let step = std::f64::consts::TAU * shifted as f64 / mm as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, w) in weights.iter().enumerate() {
            let phase = step * j as f64;
            // conj(e^{i phase}) = e^{-i phase}
            acc += w * Complex64::new(phase.cos(), -phase.sin());
        }
        grad[idx] = acc * (q / (2.0 * m));
    }
    (obj, grad)
}

fn ascend(
    freqs: &[i64],
    start: Vec<Complex64>,
    q: f64,
    grid: TorusGrid,
    max_iters: u32,
) -> (Vec<Complex64>, f64, u64) {
    let mut c = start;
    normalize(&mut c);
    let (mut obj, mut grad) = objective_and_grad(freqs, &c, q, grid);
    let mut eta = 0.5;
    let mut iters = 0u64;
    for _ in 0..max_iters {
        iters += 1;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<Complex64> = c
                .iter()
                .zip(grad.iter())
                .map(|(ci, gi)| ci + gi * eta)
                .collect();
            normalize(&mut cand);
            let (cand_obj, cand_grad) = objective_and_grad(freqs, &cand, q, grid);
            if cand_obj >= obj {
                let improved = cand_obj - obj;
                c = cand;
                obj = cand_obj;
                grad = cand_grad;
                eta = (eta * 1.5).min(64.0);
                accepted = true;
                if improved < 1e-13 * obj.max(1.0) {
                    return (c, obj, iters);
                }
                break;
            }
            eta *= 0.5;
            if eta < 1e-18 {
                return (c, obj, iters);
            }
        }
        if !accepted {
            break;
        }
    }
    (c, obj, iters)
}

/// Multistart projected gradient ascent on the unit sphere.
///
/// Restart 0 warm-starts from the uniform vector; the rest use seeded random
/// phases, with the per-restart rng derived from (seed, restart) so serial
/// and parallel schedules agree. Deterministic given `seed`.
pub fn lambda_lower_bound(
    a: &IntSet,
    q: f64,
    restarts: u32,
    max_iters: u32,
    seed: u64,
) -> Result<LambdaEstimate, LambdaError> {
    if q < 2.0 {
        return Err(LambdaError::MomentTooSmall(q));
    }
    if a.is_empty() {
        return Err(LambdaError::EmptySet);
    }
    let n = a.len();
    let upper = lambda_trivial_upper(a);

    // Parseval: at q = 2 the objective is identically the l2 norm, so any
    // unit vector is a maximizer.
    if q == 2.0 {
        let cert = CoefficientVector::uniform(n);
        return Ok(LambdaEstimate {
            set: a.elements().to_vec(),
            q,
            lower: 1.0,
            upper,
            m: 1,
            restarts: 0,
            iterations: 0,
            seed,
            certificate: cert.coeffs.iter().map(|c| (c.re, c.im)).collect(),
        });
    }

    let grid = pick_grid(a, q);
    let freqs = a.elements();
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let mut total_iters = 0u64;
    for r in 0..restarts.max(1) {
        let start = if r == 0 {
            CoefficientVector::uniform(n).coeffs
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            (0..n)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect()
        };
        let (c, obj, iters) = ascend(freqs, start, q, grid, max_iters);
        total_iters += iters;
        if best.as_ref().map_or(true, |(_, b)| obj > *b) {
            best = Some((c, obj));
        }
    }
    let (cert, obj) = best.unwrap();
    let lower = obj.powf(1.0 / q);
    Ok(LambdaEstimate {
        set: a.elements().to_vec(),
        q,
        lower,
        upper,
        m: grid.m,
        restarts: restarts.max(1),
        iterations: total_iters,
        seed,
        certificate: cert.iter().map(|c| (c.re, c.im)).collect(),
    })
}

/// Even moments get the doubled-exactness grid; otherwise the grid doubles
/// until the uniform-coefficient norm moves by less than 1e-8 relative.
fn pick_grid(a: &IntSet, q: f64) -> TorusGrid {
    let h2 = q / 2.0;
    if h2.fract() == 0.0 {
        return TorusGrid::for_even_moment(a, h2 as u32);
    }
    let c = CoefficientVector::uniform(a.len());
    let mut m = (4 * spread(a) + 1).max(64);
    let mut prev = trig_norm(a, &c, q, TorusGrid::new(m)).unwrap();
    for _ in 0..16 {
        let next_m = m * 2;
        let next = trig_norm(a, &c, q, TorusGrid::new(next_m)).unwrap();
        if (next - prev).abs() <= 1e-8 * prev.max(1.0) {
            return TorusGrid::new(next_m);
        }
        m = next_m;
        prev = next;
    }
    TorusGrid::new(m)
}

/// One trigonometric polynomial of a dilate family, tagged by its exponent
/// multi-index alpha.
#[derive(Debug, Clone)]
pub struct DilatePoly {
    pub alpha: Vec<u32>,
    /// (frequency, coefficient) pairs; frequencies coprime to the dilate primes.
    pub terms: Vec<(i64, Complex64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Report {
    pub primes: Vec<u64>,
    pub q: u32,
    pub trials: u32,
    /// max over trials of LHS / (sum ||F_a||_q^2)^{1/2}
    pub max_ratio: f64,
    /// ratio^{1/k} / q for the maximizing trial
    pub c_est: f64,
    pub per_trial: Vec<f64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Measured constant for the dilate moment inequality: the norm of
/// sum_alpha F_alpha(p_1^{a_1}...p_k^{a_k} theta) against the l2 aggregate
/// of the individual norms. Trial 0 uses the coefficients as given; later
/// trials redraw them at random on the same supports.
pub fn prop1_ratio(
    p_list: &[u64],
    polys: &[DilatePoly],
    q: u32,
    trials: u32,
    seed: u64,
) -> Result<Prop1Report, LambdaError> {
    if q < 2 || q % 2 != 0 {
        return Err(LambdaError::OddMoment(q));
    }
    let h = q / 2;
    for poly in polys {
        assert_eq!(poly.alpha.len(), p_list.len(), "alpha arity must match p_list");
        for &(n, _) in &poly.terms {
            for &p in p_list {
                if gcd(n.unsigned_abs(), p) != 1 {
                    return Err(LambdaError::CoprimalityViolated { n, p });
                }
            }
        }
    }
    let k = p_list.len() as f64;
    let mut per_trial = Vec::with_capacity(trials.max(1) as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials.max(1) {
        // Dilated frequencies n * prod p_i^{a_i}, coefficients summed on
        // collision (none occur for coprime supports, but stay exact anyway).
        let mut dilated: std::collections::BTreeMap<i64, Complex64> = Default::default();
        let mut rhs_sq = 0.0;
        for poly in polys {
            let mut dilate = 1i64;
            for (&p, &e) in p_list.iter().zip(poly.alpha.iter()) {
                for _ in 0..e {
                    dilate = dilate.checked_mul(p as i64).expect("dilate overflow");
                }
            }
            let coeffs: Vec<Complex64> = poly
                .terms
                .iter()
                .map(|&(_, c)| {
                    if trial == 0 {
                        c
                    } else {
                        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                    }
                })
                .collect();
            for (&(n, _), &c) in poly.terms.iter().zip(coeffs.iter()) {
                let f = n.checked_mul(dilate).expect("frequency overflow");
                *dilated.entry(f).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
            let freqs = IntSet::new(poly.terms.iter().map(|&(n, _)| n));
            // ||F_alpha||_q is dilation invariant, evaluate on the raw support.
            let grid = TorusGrid::for_even_moment(&freqs, h);
            let fnorm = {
                let raw: Vec<i64> = freqs.elements().to_vec();
                let mut aligned = vec![Complex64::new(0.0, 0.0); raw.len()];
                for (&(n, _), &c) in poly.terms.iter().zip(coeffs.iter()) {
                    let idx = raw.binary_search(&n).unwrap();
                    aligned[idx] += c;
                }
                let samples = sample_poly(&raw, &aligned, grid);
                norm_from_samples(&samples, q as f64)
            };
            rhs_sq += fnorm * fnorm;
        }
        let freqs: Vec<i64> = dilated.keys().copied().collect();
        let coeffs: Vec<Complex64> = dilated.values().copied().collect();
        let combined = IntSet::new(freqs.iter().copied());
        let grid = TorusGrid::for_even_moment(&combined, h);
        let samples = sample_poly(&freqs, &coeffs, grid);
        let lhs = norm_from_samples(&samples, q as f64);
        per_trial.push(if rhs_sq > 0.0 { lhs / rhs_sq.sqrt() } else { 0.0 });
    }
    let max_ratio = per_trial.iter().cloned().fold(f64::MIN, f64::max);
    let c_est = if k > 0.0 {
        max_ratio.powf(1.0 / k) / q as f64
    } else {
        max_ratio / q as f64
    };
    Ok(Prop1Report {
        primes: p_list.to_vec(),
        q,
        trials: trials.max(1),
        max_ratio,
        c_est,
        per_trial,
    })
}
