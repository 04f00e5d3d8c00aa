//! Acceptance gate: ten end-to-end checks, one line of output each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumprod::bounds;
use sumprod::harness::{self, FamilySpec};
use sumprod::lambda::{self, CoefficientVector, DilatePoly, TorusGrid};
use sumprod::lattice;
use sumprod::regularize;
use sumprod::setops::{self, BipartiteGraph, IntSet};
use sumprod::Config;

fn report(num: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {:02} {:<28} {} {}",
        num,
        name,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "acceptance {num} ({name}) failed: {detail}");
}

fn random_set(rng: &mut ChaCha8Rng, max_n: usize, range: i64) -> IntSet {
    let n = rng.gen_range(2..=max_n);
    let mut s = BTreeSet::new();
    while s.len() < n {
        s.insert(rng.gen_range(1..=range));
    }
    IntSet::new(s)
}

#[test]
fn criterion_01_parseval() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = random_set(&mut rng, 64, 10_000);
        let est = lambda::lambda_lower_bound(&a, 2.0, 1, 10, 101).unwrap();
        worst = worst.max((est.lower - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "parseval_lambda2",
        worst <= 1e-9 && secs < 5.0,
        &format!("max |lambda_2 - 1| = {worst:.2e}, {secs:.2}s"),
    );
}

#[test]
fn criterion_02_moment_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_set(&mut rng, 32, 5_000);
        let n = a.len() as f64;
        let grid = TorusGrid::for_even_moment(&a, 2);
        let got = lambda::trig_norm(&a, &CoefficientVector::uniform(a.len()), 4.0, grid).unwrap();
        // Exhaustive quadruple counter.
        let mut e2 = 0u128;
        let els = a.elements();
        for &x in els {
            for &y in els {
                for &z in els {
                    for &w in els {
                        if x + y == z + w {
                            e2 += 1;
                        }
                    }
                }
            }
        }
        let expect = (e2 as f64 / (n * n)).powf(0.25);
        worst = worst.max((got - expect).abs() / expect);
    }
    report(
        2,
        "uniform_moment_identity",
        worst <= 1e-6,
        &format!("max rel err = {worst:.2e}"),
    );
}

#[test]
fn criterion_03_energy_chain() {
    // Brute force both sides on a dense sample of small sets.
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut checked = 0u32;
    let mut ok = true;
    for _ in 0..300 {
        let n = rng.gen_range(2..=12usize);
        let mut s = BTreeSet::new();
        while s.len() < n {
            s.insert(rng.gen_range(1..=100i64));
        }
        let a = IntSet::new(s);
        for h in 2..=3u32 {
            // |hA| by direct enumeration of h-tuples.
            let mut sums: BTreeSet<i64> = a.elements().iter().copied().collect();
            for _ in 1..h {
                let mut next = BTreeSet::new();
                for &s in &sums {
                    for &x in a.elements() {
                        next.insert(s + x);
                    }
                }
                sums = next;
            }
            // E_h by direct collision count over representation sums.
            let mut counts: std::collections::BTreeMap<i64, u128> = Default::default();
            let mut stack = vec![(0i64, 0u32)];
            while let Some((acc, depth)) = stack.pop() {
                if depth == h {
                    *counts.entry(acc).or_default() += 1;
                    continue;
                }
                for &x in a.elements() {
                    stack.push((acc + x, depth + 1));
                }
            }
            let eh: u128 = counts.values().map(|&c| c * c).sum();
            let lhs = sums.len() as u128 * eh;
            let rhs = (a.len() as u128).pow(2 * h);
            if lhs < rhs {
                ok = false;
            }
            // Library agrees with the brute force.
            let bound = setops::energy_sumset_bound(&a, h);
            if setops::additive_energy(&a, h) != eh
                || bound.sumset_size != sums.len()
                || !bound.holds
            {
                ok = false;
            }
            checked += 1;
        }
    }
    report(3, "energy_sumset_chain", ok, &format!("{checked} exact instances"));
}

#[test]
fn criterion_04_product_sum_correspondence() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut ok = true;
    for _ in 0..100 {
        let a = random_set(&mut rng, 20, 10_000);
        let k = rng.gen_range(2..=4u32);
        let ints: Vec<u64> = a.elements().iter().map(|&x| x as u64).collect();
        let (_, exps) = lattice::embed_set(&ints).unwrap();
        let prod = setops::product_set_size(&a, k).unwrap();
        let sum = setops::iterated_sumset_exp(&exps, k).len();
        if prod != sum {
            ok = false;
        }
    }
    report(4, "product_sum_bijection", ok, "100 sets, k <= 4");
}

#[test]
fn criterion_05_ruzsa() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut ok = true;
    for _ in 0..100 {
        let a = random_set(&mut rng, 24, 2_000);
        if !setops::ruzsa_audit(&a).unwrap().holds {
            ok = false;
        }
    }
    report(5, "ruzsa_difference_bound", ok, "100 sets");
}

#[test]
fn criterion_06_prop1_instance() {
    let one = Complex64::new(1.0, 0.0);
    let polys: Vec<DilatePoly> = (0..3)
        .map(|e| DilatePoly {
            alpha: vec![e],
            terms: vec![(1, one)],
        })
        .collect();
    let rep = lambda::prop1_ratio(&[2], &polys, 4, 1, 0).unwrap();
    let expect = 15.0f64.powf(0.25) / 3.0f64.sqrt();
    let err = (rep.max_ratio - expect).abs();
    report(
        6,
        "dilate_family_ratio",
        err <= 1e-6 && rep.c_est < 1.0,
        &format!("ratio = {:.6} (oracle {expect:.6}), C_est = {:.4}", rep.max_ratio, rep.c_est),
    );
}

#[test]
fn criterion_07_regularization_ledger() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let basis = lattice::PrimeBasis::new(vec![2, 3, 5, 7]).unwrap();
    let mut ran = 0u32;
    let mut ok = true;
    let mut detail = String::new();
    for trial in 0..25 {
        let delta = [0.1, 0.3, 0.5][trial % 3];
        let side = |rng: &mut ChaCha8Rng| {
            let mut elems = BTreeSet::new();
            while elems.len() < 128 {
                elems.insert(lattice::ExponentVector(vec![
                    rng.gen_range(0..8),
                    rng.gen_range(0..5),
                    rng.gen_range(0..4),
                    rng.gen_range(0..3),
                ]));
            }
            lattice::ExpSet::new(basis.clone(), elems).unwrap()
        };
        let a1 = side(&mut rng);
        let a2 = side(&mut rng);
        let p = f64::min(2.0 * delta, 0.9);
        let edges: Vec<(usize, usize)> = (0..128usize)
            .flat_map(|i| (0..128usize).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(p))
            .collect();
        let g = BipartiteGraph::new(128, 128, edges);
        match regularize::run_pipeline(&a1, &a2, &g, delta) {
            Ok(result) => {
                let audit = regularize::audit::audit_pipeline(&a1, &a2, &g, &result, 107);
                if !audit.all_pass() {
                    ok = false;
                    for c in audit.checks.iter().filter(|c| !c.pass) {
                        detail.push_str(&format!("[{} {}]", c.name, c.detail));
                    }
                }
                for (key, e) in &result.report.ledger {
                    if !e.pass {
                        ok = false;
                        detail.push_str(&format!("[ledger {key}]"));
                    }
                }
                ran += 1;
            }
            Err(e) => {
                ok = false;
                detail.push_str(&format!("[trial {trial}: {e}]"));
            }
        }
    }
    report(
        7,
        "regularization_ledger",
        ok && ran == 25,
        if detail.is_empty() {
            "25 graphs, 128x128, audit clean"
        } else {
            detail.as_str()
        },
    );
}

#[test]
fn criterion_08_injectivity_freiman() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut ok = true;
    for _ in 0..100 {
        let a = random_set(&mut rng, 16, 5_000);
        let ints: Vec<u64> = a.elements().iter().map(|&x| x as u64).collect();
        let (_, s) = lattice::embed_set(&ints).unwrap();
        let idx = regularize::select_injective_coords(&s);
        if !lattice::projection_injective(&s, &idx).unwrap() {
            ok = false;
        }
        // Greedy-minimal: no single coordinate can be dropped.
        if idx.len() > 1 {
            for drop in 0..idx.len() {
                let mut trial = idx.clone();
                trial.remove(drop);
                if lattice::projection_injective(&s, &trial).unwrap() {
                    ok = false;
                }
            }
        }
        // Rational-rank oracle for the Freiman dimension: rank of the
        // difference lattice computed by exact Gaussian elimination over Q.
        let dim = regularize::freiman_dimension(&s);
        let base = &s.elements()[0].0;
        let rows: Vec<Vec<i128>> = s.elements()[1..]
            .iter()
            .map(|v| {
                v.0.iter()
                    .zip(base.iter())
                    .map(|(&a, &b)| a as i128 - b as i128)
                    .collect()
            })
            .collect();
        if dim != rational_rank(rows) {
            ok = false;
        }
    }
    report(8, "injective_freiman", ok, "100 sets");
}

/// Row-echelon rank over Q via exact rational elimination (num-rational).
fn rational_rank(rows: Vec<Vec<i128>>) -> usize {
    use num_rational::Ratio;
    let mut m: Vec<Vec<Ratio<i128>>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(Ratio::from_integer).collect())
        .collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != Ratio::from_integer(0)) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c];
        for r in 0..m.len() {
            if r != rank && m[r][c] != Ratio::from_integer(0) {
                let f = m[r][c] / pivot;
                for k in c..cols {
                    let sub = f * m[rank][k];
                    m[r][k] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn criterion_09_bound_calculus() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let cfg = Config::default();

    // Lambda formula bit-exact plus its three consequences on random
    // positive constants.
    let mut ok = true;
    for _ in 0..1_000 {
        let tau = rng.gen_range(1e-4..0.5f64);
        let gamma = rng.gen_range(1e-4..0.5f64);
        let c = bounds::Lemma51Constants {
            a1: rng.gen_range(0.1..50.0),
            a2: rng.gen_range(0.1..500.0),
            a3: rng.gen_range(0.1..50.0),
            b1: rng.gen_range(0.1..50.0),
            b2: rng.gen_range(0.1..500.0),
            b3: rng.gen_range(0.1..50.0),
            log_n_bar: 16.0,
            mult_a2: 0.0,
            mult_a3: 0.0,
            mult_b2: 0.0,
            mult_b3: 0.0,
            min_ln_u: 0.0,
            min_ln_v: 0.0,
            max_ln_up: 0.0,
            max_ln_vp: 0.0,
        };
        let r = bounds::compute_lambda(tau, gamma, &c);
        if r.lambda != 2.0 * c.a1 / tau + c.a2 + c.b1 + 2.0 * c.b2 / gamma {
            ok = false;
        }
        if !r.consequences.iter().all(|&x| x) {
            ok = false;
        }
    }

    // Pigeonhole ratio never beats the geometric mean.
    for _ in 0..1_000 {
        let len = rng.gen_range(2..10usize);
        let mut sizes = vec![rng.gen_range(1.0..100.0f64)];
        for _ in 1..len {
            let last = *sizes.last().unwrap();
            sizes.push(last * rng.gen_range(1.0..16.0f64));
        }
        let chain = bounds::pigeonhole_chain(&sizes).unwrap();
        if !chain.le_geometric_mean {
            ok = false;
        }
    }

    // Admissibility sampler on all three constructors.
    let base_ok = bounds::check_admissible(
        &bounds::base_pair(4.0, 2.0),
        &bounds::SampleRegion::desk(),
        8,
    )
    .is_ok();
    let l43_ok = bounds::check_admissible(
        &bounds::lemma43_pair(0.1, 4.0, 2.0),
        &bounds::SampleRegion::desk(),
        8,
    )
    .is_ok();
    let l51_ok = match bounds::lemma51_pair(0.01, 0.01, &cfg) {
        Ok(pair) => {
            let nb = pair.params["log_n_bar"];
            bounds::check_admissible(&pair, &bounds::SampleRegion::large(nb), 6).is_ok()
        }
        Err(_) => false,
    };
    report(
        9,
        "bound_calculus",
        ok && base_ok && l43_ok && l51_ok,
        &format!("formula/consequences ok={ok}, admissible base={base_ok} l43={l43_ok} l51={l51_ok}"),
    );
}

#[test]
fn criterion_10_dichotomy() {
    let start = Instant::now();
    let gp = harness::generate_family(&FamilySpec::Gp { base: 2, n: 16 }, 0).unwrap();
    let rgp = bounds::theorem_driver(&gp, 2, 50_000).unwrap();
    let gp2 = rgp
        .rows
        .iter()
        .find(|r| r.k == 2)
        .map(|r| r.sumset_size)
        .unwrap_or(0);
    let ap = harness::generate_family(
        &FamilySpec::Ap {
            start: 1,
            step: 1,
            n: 16,
        },
        0,
    )
    .unwrap();
    let rap = bounds::theorem_driver(&ap, 2, 50_000).unwrap();
    let ap2 = rap
        .rows
        .iter()
        .find(|r| r.k == 2)
        .map(|r| r.sumset_size)
        .unwrap_or(0);
    // CSV emission of the exponent tables.
    let spec = FamilySpec::Gp { base: 2, n: 16 };
    let exp = harness::run_growth_experiment(&spec, 4, 400_000, 0, None).unwrap();
    let csv = harness::experiment_csv(&exp);
    let secs = start.elapsed().as_secs_f64();
    let pass = rgp.verdict == bounds::Verdict::SumHorn
        && gp2 == 136
        && rap.verdict == bounds::Verdict::ProductHorn
        && ap2 == 31
        && csv.starts_with("k,sumset_size,productset_size")
        && secs < 60.0;
    report(
        10,
        "dichotomy_illustration",
        pass,
        &format!(
            "gp |2A|={gp2} {:?}, ap |2A|={ap2} {:?}, {secs:.1}s",
            rgp.verdict, rap.verdict
        ),
    );
}
