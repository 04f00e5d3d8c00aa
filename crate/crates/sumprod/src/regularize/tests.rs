use super::*;
use crate::lattice::{embed_set, ExpSet, ExponentVector, PrimeBasis};
use crate::setops::{BipartiteGraph, IntSet};

fn grid_set(amax: u32, bmax: u32, cmax: u32) -> ExpSet {
    let basis = PrimeBasis::new(vec![2, 3, 5]).unwrap();
    let mut elems = Vec::new();
    for a in 0..amax {
        for b in 0..bmax {
            for c in 0..cmax {
                elems.push(ExponentVector(vec![a, b, c]));
            }
        }
    }
    ExpSet::new(basis, elems).unwrap()
}

#[test]
fn step1_full_graph_removes_nothing() {
    let g = BipartiteGraph::full(5, 4);
    let r = step1_density_regularize(&g, 0.5).unwrap();
    assert_eq!(r.left, vec![0, 1, 2, 3, 4]);
    assert_eq!(r.right, vec![0, 1, 2, 3]);
    assert!(r.removed.is_empty());
    assert!(r.min_row_ratio > 1.0);
    assert!(r.removal_invariant);
}

#[test]
fn step1_removes_light_row() {
    // Row 0 sees one column; all other rows are full.
    let mut edges = vec![(0usize, 0usize)];
    for i in 1..6 {
        for j in 0..6 {
            edges.push((i, j));
        }
    }
    let g = BipartiteGraph::new(6, 6, edges);
    let r = step1_density_regularize(&g, 0.8).unwrap();
    assert!(!r.left.contains(&0));
    assert_eq!(r.right.len(), 6);
    // Survivors all satisfy the strict row/column bound.
    assert!(r.min_row_ratio > 1.0);
    assert!(r.min_col_ratio > 1.0);
}

#[test]
fn step1_rejects_sparse_graph() {
    let g = BipartiteGraph::new(4, 4, [(0, 0), (1, 1)]);
    assert!(matches!(
        step1_density_regularize(&g, 0.5),
        Err(RegError::DensityTooLow { .. })
    ));
}

#[test]
fn fact1_keeps_popular_columns() {
    // Columns 0..3 see both rows of E; column 4 sees nothing.
    let mut edges = Vec::new();
    for j in 0..4 {
        edges.push((0, j));
        edges.push((1, j));
    }
    let g = BipartiteGraph::new(2, 5, edges);
    let r = fact1_extract(&[0, 1], &[0, 1, 2, 3, 4], &g, 0.5).unwrap();
    assert_eq!(r.kept, vec![0, 1, 2, 3]);
    assert!(r.size_ratio > 1.0);
    assert!(r.min_degree_ratio > 1.0);
}

#[test]
fn fact1_rejects_sparse_hypothesis() {
    let g = BipartiteGraph::new(2, 4, [(0, 0)]);
    assert!(matches!(
        fact1_extract(&[0, 1], &[0, 1, 2, 3], &g, 0.5),
        Err(RegError::HypothesisFails { .. })
    ));
}

#[test]
fn fiber_profile_monotone_and_split() {
    let s = grid_set(3, 3, 2);
    let p = fiber_profile(&s, &s);
    // n(0)=18, n(1)=6, n(2)=2, n(3)=1; N^{1/4} = 324^{1/4} ~ 4.24.
    assert_eq!(p.n1, vec![18, 6, 2, 1]);
    assert_eq!(p.t_prime, 1);
    assert!(p.bracket_ok);
    for w in p.n1.windows(2) {
        assert!(w[0] >= w[1]);
    }
    assert_eq!(choose_split(&p), 1);
}

#[test]
fn fiber_profile_tiny_set_degenerates() {
    let (_, s) = embed_set(&[2, 3]).unwrap();
    let p = fiber_profile(&s, &s);
    // 1 + 1 = 2 >= 4^{1/4}, so even the full split satisfies the bracket.
    assert!(p.t_prime <= s.basis().len());
}

#[test]
fn dyadic_regularization_brackets_and_retains() {
    // Fibers over the first coordinate with sizes 1, 2, 4: three classes.
    let basis = PrimeBasis::new(vec![2, 3]).unwrap();
    let mut elems = vec![ExponentVector(vec![0, 0])];
    for b in 0..2 {
        elems.push(ExponentVector(vec![1, b]));
    }
    for b in 0..4 {
        elems.push(ExponentVector(vec![2, b]));
    }
    let s = ExpSet::new(basis, elems).unwrap();
    let d = dyadic_fiber_regularize(&s, 1, None);
    // Mass-maximizing class is the size-4 fiber.
    assert_eq!(d.m, 4);
    assert_eq!(d.kept.len(), 4);
    assert_eq!(d.total_weight, 7);
    let classes = (d.max_fiber as f64).log2().floor() + 1.0;
    assert!(d.retained_weight as f64 >= d.total_weight as f64 / classes);
}

#[test]
fn dyadic_regularization_respects_weights() {
    // Same fibers, but all the weight sits on the singleton.
    let basis = PrimeBasis::new(vec![2, 3]).unwrap();
    let mut elems = vec![ExponentVector(vec![0, 0])];
    for b in 0..4 {
        elems.push(ExponentVector(vec![2, b]));
    }
    let s = ExpSet::new(basis, elems).unwrap();
    let w = vec![100, 1, 1, 1, 1];
    let d = dyadic_fiber_regularize(&s, 1, Some(&w));
    assert_eq!(d.m, 1);
    assert_eq!(d.kept, vec![0]);
}

#[test]
fn step5_full_graph_single_class() {
    let s = grid_set(2, 2, 2);
    let g = BipartiteGraph::full(s.len(), s.len());
    // Split after the first prime: fibers of size 4, so m = 4.
    let r = step5_graph_regularize(&s, &s, &g, 1, 4, 4).unwrap();
    // Every base pair has the same 16 edges and the same tail sumset.
    assert_eq!(r.big_m1, 2);
    assert_eq!(r.big_m2, 2);
    assert_eq!(r.base_pairs.len(), 4);
    assert_eq!(r.d1_count, 16);
    assert!((r.delta1 - 1.0).abs() < 1e-12);
    assert_eq!(r.gtilde.len(), g.edge_count());
}

#[test]
fn pipeline_runs_and_audits_clean() {
    let s = grid_set(3, 3, 2);
    let n = s.len();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| (i + 2 * j) % 3 != 0)
        .collect();
    let g = BipartiteGraph::new(n, n, edges);
    let result = run_pipeline(&s, &s, &g, 0.5).unwrap();
    let r = &result.report;
    assert_eq!(r.t_prime, 1);
    assert!(r.nbb1 > 0 && r.nbb2 > 0);
    assert!(r.gtilde_edges > 0);
    for (key, e) in &r.ledger {
        assert!(e.pass, "ledger entry {key} failed: {e:?}");
        assert!(e.measured_ratio.is_finite());
    }
    let audit = audit::audit_pipeline(&s, &s, &g, &result, 7);
    for c in &audit.checks {
        assert!(c.pass, "audit check {} failed: {}", c.name, c.detail);
    }
}

#[test]
fn pipeline_full_graph_step7_present() {
    let s = grid_set(2, 2, 3);
    let g = BipartiteGraph::full(s.len(), s.len());
    let result = run_pipeline(&s, &s, &g, 0.9).unwrap();
    let s7 = result.report.step7.as_ref().unwrap();
    assert!(!s7.refined_edges.is_empty());
    assert!(s7.l1 >= 1 && s7.l2 >= 1);
    let audit = audit::audit_pipeline(&s, &s, &g, &result, 3);
    assert!(audit.all_pass(), "{:?}", audit.checks);
}

#[test]
fn pipeline_report_serializes() {
    let s = grid_set(2, 2, 2);
    let g = BipartiteGraph::full(s.len(), s.len());
    let result = run_pipeline(&s, &s, &g, 0.5).unwrap();
    let json = serde_json::to_string(&result.report).unwrap();
    assert!(json.contains("\"3.24\""));
    assert!(json.contains("measured_ratio"));
}

#[test]
fn bsg_full_graph_keeps_everything() {
    let a = IntSet::new(0..10);
    let g = BipartiteGraph::full(10, 10);
    let (aprime, rep) = bsg_extract(&a, &g, 0.5).unwrap();
    assert_eq!(aprime, a);
    assert!((rep.delta_prime - 1.0).abs() < 1e-12);
    assert!((rep.edge_fraction - 1.0).abs() < 1e-12);
}

#[test]
fn bsg_two_blocks_keeps_one() {
    // Two APs far apart; the graph joins each half only to itself.
    let a = IntSet::new((0..8).chain(1000..1008));
    let mut edges = Vec::new();
    for i in 0..8 {
        for j in 0..8 {
            edges.push((i, j));
            edges.push((i + 8, j + 8));
        }
    }
    let g = BipartiteGraph::new(16, 16, edges);
    let (aprime, rep) = bsg_extract(&a, &g, 0.25).unwrap();
    assert_eq!(aprime.len(), 8);
    // The selected half is an interval, so its difference set is small.
    assert!(rep.k_prime < 1.0);
}

#[test]
fn freiman_dimension_examples() {
    let (_, ap) = embed_set(&[2, 4, 8, 16]).unwrap(); // exponents 1..4 of 2
    assert_eq!(freiman_dimension(&ap), 1);

    let s = grid_set(3, 3, 1);
    assert_eq!(freiman_dimension(&s), 2);

    let (_, single) = embed_set(&[6]).unwrap();
    assert_eq!(freiman_dimension(&single), 0);

    let s3 = grid_set(2, 2, 2);
    assert_eq!(freiman_dimension(&s3), 3);
}

#[test]
fn injective_coords_examples() {
    // Distinct first coordinates: one index suffices.
    let (_, ap) = embed_set(&[2, 4, 8, 16]).unwrap();
    assert_eq!(select_injective_coords(&ap), vec![0]);

    // A diagonal in a 2-d grid needs only one of the two coordinates.
    let basis = PrimeBasis::new(vec![2, 3]).unwrap();
    let diag = ExpSet::new(
        basis.clone(),
        (0..4).map(|i| ExponentVector(vec![i, i])),
    )
    .unwrap();
    assert_eq!(select_injective_coords(&diag).len(), 1);

    // The full grid needs both.
    let grid = grid_set(3, 3, 1);
    let chosen = select_injective_coords(&grid);
    assert!(crate::lattice::projection_injective(&grid, &chosen).unwrap());
    assert_eq!(chosen.len(), 2);
}

#[test]
fn freiman_audit_examples() {
    let (_, ap) = embed_set(&[2, 4, 8, 16]).unwrap();
    let a = freiman_audit(&ap);
    assert_eq!(a.dim, 1);
    assert!(a.lemma_holds);
    // Doubling is 7/4: the d(d+1)/2 correction matters at this size, so
    // only the rounded-up form of the doubling bound survives.
    assert!(!a.naive_form_holds);
    assert!(a.ceil_form_holds);

    let grid = grid_set(3, 3, 1);
    let a = freiman_audit(&grid);
    assert_eq!(a.dim, 2);
    assert!(a.lemma_holds);
    assert!(a.margin >= 0);

    // A generic set of full dimension meets the exact lemma with equality:
    // |S+S| = 10 = (3+1)*4 - 6, so both simplified forms are too lossy.
    let (_, s) = embed_set(&[2, 3, 5, 30]).unwrap();
    let a = freiman_audit(&s);
    assert_eq!(a.dim, 3);
    assert!(a.lemma_holds);
    assert_eq!(a.margin, 0);
    assert!(!a.ceil_form_holds);
}
