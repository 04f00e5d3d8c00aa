//! Set-family generators, growth experiments and the verification suite
//! behind the CLI.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, Verdict};
use crate::lambda;
use crate::lattice;
use crate::regularize;
use crate::setops::{self, IntSet};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid family spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Set(#[from] setops::SetError),
}

/// A deterministic set-family recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// {start, start+step, ..., start+(n-1) step}
    Ap { start: i64, step: i64, n: usize },
    /// {1, base, base^2, ..., base^{n-1}}
    Gp { base: i64, n: usize },
    /// {prod p_i^{e_i} : 0 <= e_i < bounds_i}
    MultiplicativeGrid { primes: Vec<u64>, bounds: Vec<u32> },
    /// n distinct values drawn from [lo, lo+width) under the run seed.
    RandomInterval { lo: i64, width: i64, n: usize },
    Explicit { elements: Vec<i64> },
}

impl FamilySpec {
    pub fn describe(&self) -> String {
        match self {
            FamilySpec::Ap { start, step, n } => format!("ap({start},{step},{n})"),
            FamilySpec::Gp { base, n } => format!("gp({base},{n})"),
            FamilySpec::MultiplicativeGrid { primes, bounds } => {
                format!("mgrid({primes:?},{bounds:?})")
            }
            FamilySpec::RandomInterval { lo, width, n } => {
                format!("rand([{lo},{}),{n})", lo + width)
            }
            FamilySpec::Explicit { elements } => format!("explicit({})", elements.len()),
        }
    }
}

/// Generate the family; deterministic under (spec, seed).
pub fn generate_family(spec: &FamilySpec, seed: u64) -> Result<IntSet, HarnessError> {
    match spec {
        FamilySpec::Ap { start, step, n } => {
            if *n == 0 || *step == 0 {
                return Err(HarnessError::InvalidSpec("ap needs n > 0, step != 0".into()));
            }
            Ok(IntSet::new(
                (0..*n as i64).map(|i| start + i * step),
            ))
        }
        FamilySpec::Gp { base, n } => {
            if *n == 0 || *base < 2 {
                return Err(HarnessError::InvalidSpec("gp needs n > 0, base >= 2".into()));
            }
            let mut v = Vec::with_capacity(*n);
            let mut x = 1i64;
            for _ in 0..*n {
                v.push(x);
                x = x.checked_mul(*base).ok_or_else(|| {
                    HarnessError::InvalidSpec("gp overflows i64".into())
                })?;
            }
            Ok(IntSet::new(v))
        }
        FamilySpec::MultiplicativeGrid { primes, bounds } => {
            if primes.len() != bounds.len() || primes.is_empty() {
                return Err(HarnessError::InvalidSpec(
                    "mgrid needs matching nonempty primes/bounds".into(),
                ));
            }
            let mut out = vec![1i64];
            for (&p, &b) in primes.iter().zip(bounds.iter()) {
                if b == 0 {
                    return Err(HarnessError::InvalidSpec("mgrid bound must be > 0".into()));
                }
                let mut next = Vec::with_capacity(out.len() * b as usize);
                for &x in &out {
                    let mut y = x;
                    for e in 0..b {
                        if e > 0 {
                            y = y.checked_mul(p as i64).ok_or_else(|| {
                                HarnessError::InvalidSpec("mgrid overflows i64".into())
                            })?;
                        }
                        next.push(y);
                    }
                }
                out = next;
            }
            Ok(IntSet::new(out))
        }
        FamilySpec::RandomInterval { lo, width, n } => {
            if *n == 0 || *width < *n as i64 {
                return Err(HarnessError::InvalidSpec(
                    "random_interval needs width >= n > 0".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut set = BTreeSet::new();
            while set.len() < *n {
                set.insert(lo + rng.gen_range(0..*width));
            }
            Ok(IntSet::new(set))
        }
        FamilySpec::Explicit { elements } => {
            if elements.is_empty() {
                return Err(HarnessError::InvalidSpec("explicit set is empty".into()));
            }
            Ok(IntSet::new(elements.iter().copied()))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    pub sumset_size: usize,
    pub productset_size: usize,
    pub sum_exponent: f64,
    pub prod_exponent: f64,
    /// Product growth of the random subset in remark-2 mode.
    pub subset_productset_size: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<GrowthRow>,
    pub verdict: Verdict,
    pub truncated: bool,
    pub runtime_ms: u128,
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Exact growth table k = 1..=k_max; stops early (truncated) when a stage
/// exceeds the element budget.
pub fn run_growth_experiment(
    spec: &FamilySpec,
    k_max: u32,
    budget: usize,
    seed: u64,
    remark2_exponent: Option<f64>,
) -> Result<ExperimentResult, HarnessError> {
    assert!(k_max >= 2);
    let start = Instant::now();
    let a = generate_family(spec, seed)?;
    let n = a.len();
    let subset = remark2_exponent.map(|dp| {
        let m = ((n as f64).powf(dp).ceil() as usize).clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5_a5a5);
        let mut els = a.elements().to_vec();
        els.shuffle(&mut rng);
        els.truncate(m);
        IntSet::new(els)
    });
    let mut rows: Vec<GrowthRow> = Vec::new();
    let mut truncated = false;
    let ln_n = (n.max(2) as f64).ln();
    for k in 1..=k_max {
        let sum = setops::iterated_sumset_budget(&a, k, budget);
        let prod = setops::product_set_size_budget(&a, k, budget);
        let (s, p) = match (sum, prod) {
            (Ok(s), Ok(p)) => (s.len(), p),
            _ => {
                truncated = true;
                break;
            }
        };
        let sub = match &subset {
            Some(a1) => match setops::product_set_size_budget(a1, k, budget) {
                Ok(v) => Some(v),
                Err(_) => {
                    truncated = true;
                    break;
                }
            },
            None => None,
        };
        // Stars-and-bars ceiling on |kA| and the monotonicity contract.
        assert!(
            (s as u128) <= binomial(n as u128 + k as u128 - 1, k as u128),
            "sumset size exceeds the stars-and-bars bound"
        );
        if let Some(prev) = rows.last() {
            assert!(
                s >= prev.sumset_size && p >= prev.productset_size,
                "growth columns must be non-decreasing (k={k})"
            );
        }
        if let (Some(a1), Some(sub)) = (&subset, sub) {
            let _ = a1;
            assert!(sub <= p, "subset product growth cannot exceed the full set");
        }
        rows.push(GrowthRow {
            k,
            sumset_size: s,
            productset_size: p,
            sum_exponent: (s as f64).ln() / ln_n,
            prod_exponent: (p as f64).ln() / ln_n,
            subset_productset_size: sub,
        });
    }
    let verdict = match rows.last() {
        None => Verdict::Degenerate,
        Some(_) if n <= 1 => Verdict::Degenerate,
        Some(last) => {
            if last.sum_exponent >= last.prod_exponent {
                Verdict::SumHorn
            } else {
                Verdict::ProductHorn
            }
        }
    };
    Ok(ExperimentResult {
        family: spec.describe(),
        n,
        seed,
        rows,
        verdict,
        truncated,
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// CSV with header `k,sumset_size,productset_size[,subset_productset_size]`.
pub fn experiment_csv(result: &ExperimentResult) -> String {
    let remark2 = result.rows.iter().any(|r| r.subset_productset_size.is_some());
    let mut out = String::from("k,sumset_size,productset_size");
    if remark2 {
        out.push_str(",subset_productset_size");
    }
    out.push('\n');
    for r in &result.rows {
        let _ = write!(out, "{},{},{}", r.k, r.sumset_size, r.productset_size);
        if remark2 {
            let _ = write!(
                out,
                ",{}",
                r.subset_productset_size.map_or(String::new(), |v| v.to_string())
            );
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Tiny,
    Small,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tiny" => Ok(Scale::Tiny),
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            _ => Err(format!("unknown scale '{s}' (tiny|small|full)")),
        }
    }
}

impl Scale {
    fn reps(&self, tiny: usize, small: usize, full: usize) -> usize {
        match self {
            Scale::Tiny => tiny,
            Scale::Small => small,
            Scale::Full => full,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub scale: Scale,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Stable text rendering: one line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(
            out,
            "{} ({}/{} checks)",
            if self.all_pass() { "OK" } else { "FAILED" },
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        out
    }
}

fn random_set(rng: &mut ChaCha8Rng, max_n: usize, range: i64) -> IntSet {
    let n = rng.gen_range(2..=max_n.max(2));
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert(rng.gen_range(1..=range));
    }
    IntSet::new(set)
}

/// Run every module's invariant checks at the given scale.
pub fn verify_suite(seed: u64, scale: Scale) -> VerifyReport {
    verify_suite_with(seed, scale, false)
}

/// `tamper` negates the Parseval oracle — a self-test hook proving the
/// suite can fail.
pub fn verify_suite_with(seed: u64, scale: Scale, tamper: bool) -> VerifyReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(VerifyCheck {
            name: name.to_string(),
            pass,
            detail,
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Parseval: lambda_2 = 1 on random sets.
    {
        let reps = scale.reps(5, 20, 50);
        let mut worst = 0.0f64;
        for _ in 0..reps {
            let a = random_set(&mut rng, 16, 1000);
            let est = lambda::lambda_lower_bound(&a, 2.0, 1, 10, seed).unwrap();
            worst = worst.max((est.lower - 1.0).abs());
        }
        let pass = if tamper { worst > 1e-9 } else { worst <= 1e-9 };
        push("lambda.parseval", pass, format!("max |lambda_2 - 1| = {worst:.2e}"));
    }

    // Uniform-coefficient moment identity at q = 4.
    {
        let reps = scale.reps(5, 10, 20);
        let mut worst = 0.0f64;
        for _ in 0..reps {
            let a = random_set(&mut rng, 12, 200);
            let c = lambda::CoefficientVector::uniform(a.len());
            let grid = lambda::TorusGrid::for_even_moment(&a, 2);
            let v = lambda::trig_norm(&a, &c, 4.0, grid).unwrap();
            let expect = lambda::lambda_uniform_even(&a, 2);
            worst = worst.max((v - expect).abs() / expect);
        }
        push(
            "lambda.moment_identity",
            worst <= 1e-6,
            format!("max rel err = {worst:.2e}"),
        );
    }

    // Energy lower bound on |hA|, exact integers.
    {
        let reps = scale.reps(5, 15, 40);
        let mut ok = true;
        for _ in 0..reps {
            let a = random_set(&mut rng, 10, 100);
            for h in 2..=3 {
                if !setops::energy_sumset_bound(&a, h).holds {
                    ok = false;
                }
            }
        }
        push("setops.energy_bound", ok, format!("{reps} sets, h in 2..=3"));
    }

    // Product/sum correspondence through the lattice.
    {
        let reps = scale.reps(5, 20, 60);
        let mut ok = true;
        for _ in 0..reps {
            let a = random_set(&mut rng, 10, 2000);
            let k = rng.gen_range(2..=4);
            let ints: Vec<u64> = a.elements().iter().map(|&x| x as u64).collect();
            let (_, exps) = lattice::embed_set(&ints).unwrap();
            let lhs = setops::product_set_size(&a, k).unwrap();
            let rhs = setops::iterated_sumset_exp(&exps, k).len();
            if lhs != rhs {
                ok = false;
            }
        }
        push("lattice.product_sum", ok, format!("{reps} sets, k <= 4"));
    }

    // Ruzsa difference bound.
    {
        let reps = scale.reps(5, 20, 60);
        let mut ok = true;
        for _ in 0..reps {
            let a = random_set(&mut rng, 12, 500);
            if !setops::ruzsa_audit(&a).unwrap().holds {
                ok = false;
            }
        }
        push("setops.ruzsa", ok, format!("{reps} sets"));
    }

    // Regularization pipeline plus independent audit.
    {
        let reps = scale.reps(1, 3, 8);
        let side = scale.reps(24, 48, 128);
        let mut ok = true;
        let mut detail = String::new();
        for rep in 0..reps {
            let basis = crate::lattice::PrimeBasis::new(vec![2, 3, 5, 7]).unwrap();
            let mut elems = BTreeSet::new();
            while elems.len() < side {
                elems.insert(crate::lattice::ExponentVector(vec![
                    rng.gen_range(0..6),
                    rng.gen_range(0..4),
                    rng.gen_range(0..3),
                    rng.gen_range(0..2),
                ]));
            }
            let s = crate::lattice::ExpSet::new(basis, elems).unwrap();
            let delta = [0.1, 0.3, 0.5][rep % 3];
            let edges: Vec<(usize, usize)> = (0..s.len())
                .flat_map(|i| (0..s.len()).map(move |j| (i, j)))
                .filter(|_| rng.gen_bool(f64::min(2.0 * delta, 0.9)))
                .collect();
            let g = setops::BipartiteGraph::new(s.len(), s.len(), edges);
            if (g.edge_count() as f64) <= delta * (s.len() * s.len()) as f64 {
                continue;
            }
            match regularize::run_pipeline(&s, &s, &g, delta) {
                Ok(result) => {
                    let audit = regularize::audit::audit_pipeline(&s, &s, &g, &result, seed);
                    if !audit.all_pass() {
                        ok = false;
                        for c in audit.checks.iter().filter(|c| !c.pass) {
                            let _ = write!(detail, "[{} {}]", c.name, c.detail);
                        }
                    }
                }
                Err(e) => {
                    ok = false;
                    let _ = write!(detail, "[pipeline: {e}]");
                }
            }
        }
        push(
            "regularize.pipeline_audit",
            ok,
            if detail.is_empty() {
                format!("{reps} instances, side {side}")
            } else {
                detail
            },
        );
    }

    // Injective coordinates and Freiman rank.
    {
        let reps = scale.reps(10, 30, 100);
        let mut ok = true;
        for _ in 0..reps {
            let a = random_set(&mut rng, 12, 500);
            let ints: Vec<u64> = a.elements().iter().map(|&x| x as u64).collect();
            let (_, s) = lattice::embed_set(&ints).unwrap();
            let idx = regularize::select_injective_coords(&s);
            if !lattice::projection_injective(&s, &idx).unwrap() {
                ok = false;
            }
            if idx.len() > 1 {
                for drop in 0..idx.len() {
                    let mut trial = idx.clone();
                    trial.remove(drop);
                    if lattice::projection_injective(&s, &trial).unwrap() {
                        ok = false; // not greedy-minimal
                    }
                }
            }
            if !regularize::freiman_audit(&s).lemma_holds {
                ok = false;
            }
        }
        push("regularize.injective_freiman", ok, format!("{reps} sets"));
    }

    // Bound calculus invariants.
    {
        let cfg = crate::config::Config::default();
        let base_ok =
            bounds::check_admissible(&bounds::base_pair(4.0, 2.0), &bounds::SampleRegion::desk(), 8)
                .is_ok();
        let l43_ok = bounds::check_admissible(
            &bounds::lemma43_pair(0.1, 4.0, 2.0),
            &bounds::SampleRegion::desk(),
            8,
        )
        .is_ok();
        let l51 = bounds::lemma51_pair(0.01, 0.01, &cfg);
        let l51_ok = match &l51 {
            Ok(pair) => {
                let nb = pair.params["log_n_bar"];
                bounds::check_admissible(pair, &bounds::SampleRegion::large(nb), 6).is_ok()
            }
            Err(_) => false,
        };
        push(
            "bounds.admissible",
            base_ok && l43_ok && l51_ok,
            format!("base={base_ok} lemma43={l43_ok} lemma51={l51_ok}"),
        );

        let reps = scale.reps(20, 100, 1000);
        let mut ok = true;
        for _ in 0..reps {
            let mut sizes = vec![rng.gen_range(2..100) as f64];
            for _ in 0..rng.gen_range(1..8) {
                let r = 1.0 + rng.gen::<f64>() * 10.0;
                let last = *sizes.last().unwrap();
                sizes.push(last * r);
            }
            let chain = bounds::pigeonhole_chain(&sizes).unwrap();
            if !chain.le_geometric_mean {
                ok = false;
            }
        }
        push("bounds.pigeonhole", ok, format!("{reps} chains"));
    }

    // Dichotomy anchors with exact counts.
    {
        // Modest budget: the driver truncates once a stage would explode,
        // which is enough to read off the horn.
        let gp = generate_family(&FamilySpec::Gp { base: 2, n: 16 }, seed).unwrap();
        let rgp = bounds::theorem_driver(&gp, 2, 50_000).unwrap();
        let gp2 = setops::iterated_sumset(&gp, 2).len();
        let ap = generate_family(
            &FamilySpec::Ap {
                start: 1,
                step: 1,
                n: 16,
            },
            seed,
        )
        .unwrap();
        let rap = bounds::theorem_driver(&ap, 2, 50_000).unwrap();
        let ap2 = setops::iterated_sumset(&ap, 2).len();
        let pass = rgp.verdict == Verdict::SumHorn
            && gp2 == 136
            && rap.verdict == Verdict::ProductHorn
            && ap2 == 31;
        push(
            "bounds.dichotomy",
            pass,
            format!("gp |2A|={gp2} ({:?}), ap |2A|={ap2} ({:?})", rgp.verdict, rap.verdict),
        );
    }

    VerifyReport {
        seed,
        scale,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_examples() {
        let ap = generate_family(
            &FamilySpec::Ap {
                start: 1,
                step: 1,
                n: 8,
            },
            0,
        )
        .unwrap();
        assert_eq!(ap.elements(), &[1, 2, 3, 4, 5, 6, 7, 8]);

        let gp = generate_family(&FamilySpec::Gp { base: 2, n: 8 }, 0).unwrap();
        assert_eq!(gp.elements(), &[1, 2, 4, 8, 16, 32, 64, 128]);

        let mg = generate_family(
            &FamilySpec::MultiplicativeGrid {
                primes: vec![2, 3],
                bounds: vec![3, 3],
            },
            0,
        )
        .unwrap();
        assert_eq!(mg.len(), 9);
        assert!(mg.elements().contains(&36));
    }

    #[test]
    fn family_determinism_and_cardinality() {
        let spec = FamilySpec::RandomInterval {
            lo: 1,
            width: 1000,
            n: 25,
        };
        let a = generate_family(&spec, 42).unwrap();
        let b = generate_family(&spec, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 25);
        let c = generate_family(&spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn family_rejects_bad_specs() {
        assert!(generate_family(&FamilySpec::Gp { base: 1, n: 4 }, 0).is_err());
        assert!(generate_family(
            &FamilySpec::Ap {
                start: 0,
                step: 0,
                n: 4
            },
            0
        )
        .is_err());
        assert!(generate_family(
            &FamilySpec::RandomInterval {
                lo: 0,
                width: 3,
                n: 10
            },
            0
        )
        .is_err());
    }

    #[test]
    fn growth_experiment_gp_oracle() {
        let spec = FamilySpec::Gp { base: 2, n: 8 };
        let r = run_growth_experiment(&spec, 2, 10_000_000, 0, None).unwrap();
        assert_eq!(r.rows[0].sumset_size, 8);
        assert_eq!(r.rows[0].productset_size, 8);
        // Sidon: C(8,2) + 8 distinct pairwise sums; GP products collapse.
        assert_eq!(r.rows[1].sumset_size, 36);
        assert_eq!(r.rows[1].productset_size, 15);
    }

    #[test]
    fn growth_experiment_ap_oracle() {
        let spec = FamilySpec::Ap {
            start: 1,
            step: 1,
            n: 8,
        };
        let r = run_growth_experiment(&spec, 2, 10_000_000, 0, None).unwrap();
        assert_eq!(r.rows[1].sumset_size, 15);
        // Multiplication-table count for {1..8} x {1..8}.
        let mut t = BTreeSet::new();
        for x in 1i64..=8 {
            for y in 1i64..=8 {
                t.insert(x * y);
            }
        }
        assert_eq!(r.rows[1].productset_size, t.len());
    }

    #[test]
    fn growth_experiment_remark2_subset() {
        let spec = FamilySpec::Ap {
            start: 1,
            step: 1,
            n: 12,
        };
        let r = run_growth_experiment(&spec, 3, 10_000_000, 5, Some(0.7)).unwrap();
        for row in &r.rows {
            let sub = row.subset_productset_size.unwrap();
            assert!(sub <= row.productset_size);
        }
    }

    #[test]
    fn growth_experiment_budget() {
        let spec = FamilySpec::RandomInterval {
            lo: 1,
            width: 100_000,
            n: 40,
        };
        let r = run_growth_experiment(&spec, 6, 2_000, 1, None).unwrap();
        assert!(r.truncated);
        assert!(!r.rows.is_empty());
    }

    #[test]
    fn csv_shape() {
        let spec = FamilySpec::Gp { base: 2, n: 6 };
        let r = run_growth_experiment(&spec, 3, 10_000_000, 0, None).unwrap();
        let csv = experiment_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,sumset_size,productset_size");
        assert_eq!(lines.count(), r.rows.len());
    }

    #[test]
    fn verify_tiny_passes_and_is_deterministic() {
        let a = verify_suite(11, Scale::Tiny);
        assert!(a.all_pass(), "{}", a.render());
        let b = verify_suite(11, Scale::Tiny);
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn verify_tamper_fails() {
        let r = verify_suite_with(11, Scale::Tiny, true);
        assert!(!r.all_pass());
        assert!(r.checks.iter().any(|c| c.name == "lambda.parseval" && !c.pass));
    }
}
