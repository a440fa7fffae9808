//! Randomized invariants over seeded graphs and plans.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use disagg::io::{format_edge_list, format_matrix_market, parse_edge_list, parse_matrix_market};
use disagg::precond::{
    build_preconditioner, condition_estimate, local_identity, pcg_solve, scaled_inner_condition,
    transfer_constant, weight_rule_system, InnerKind,
};
use disagg::report::consistent_rhs;
use disagg::spectral::{eigs, eigs_matrix};
use disagg::{
    apply, apply_sequential, lift_eigvec, scaled_prolongation, DisaggregationPlan, LocalTemplate,
};

use common::{hub_instance, instance, random_custom, rng};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn galerkin_and_scaled_identities(seed in any::<u64>()) {
        let (g, plan) = instance(seed, 5, 25);
        let sys = apply(&g, &plan).unwrap();
        let a = sys.a().matrix();
        let tol = 1e-12 * sys.a().max_diagonal();
        prop_assert!((a - sys.p().transpose() * sys.ad().matrix() * sys.p()).amax() <= tol);
        let pt = scaled_prolongation(&sys);
        prop_assert!((pt.transpose() * &pt - DMatrix::identity(g.n(), g.n())).amax() <= 1e-12);
        prop_assert!((pt.transpose() * sys.scaled_laplacian() * &pt - a).amax() <= tol);
        // A_D is a Laplacian: zero row sums.
        let rows = sys.ad().matrix() * DVector::from_element(sys.size(), 1.0);
        prop_assert!(rows.amax() <= 1e-12 * sys.ad().max_diagonal());
    }

    #[test]
    fn lower_energy_identity(seed in any::<u64>(), vseed in any::<u64>()) {
        let (g, plan) = instance(seed, 5, 25);
        let sys = apply(&g, &plan).unwrap();
        let mut r = rng(vseed);
        let v = DVector::from_fn(g.n(), |_, _| rand::Rng::gen_range(&mut r, -1.0..1.0));
        let lifted = scaled_prolongation(&sys) * &v;
        let lhs = lifted.dot(&(sys.scaled_laplacian() * &lifted));
        let rhs = sys.a().quadratic_form(&v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-14);
    }

    #[test]
    fn sequential_matches_simultaneous(seed in any::<u64>()) {
        let (g, plan) = hub_instance(seed, 5, 20);
        let sys = apply(&g, &plan).unwrap();
        let steps = apply_sequential(&g, &plan).unwrap();
        let last = &steps.last().unwrap().system;
        prop_assert_eq!(last.size(), sys.size());
        prop_assert_eq!(last.gd().edge_count(), sys.gd().edge_count());
        let a = eigs(sys.ad()).unwrap().eigenvalues;
        let b = eigs(last.ad()).unwrap().eigenvalues;
        let scale = a.last().copied().unwrap_or(1.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn lifted_vectors_have_zero_mean(seed in any::<u64>()) {
        let (g, plan) = instance(seed, 5, 25);
        let sys = apply(&g, &plan).unwrap();
        let s = eigs(sys.a()).unwrap();
        for i in 1..s.dim() {
            let (_, phi) = s.eigenpair(i);
            prop_assert!(lift_eigvec(&sys, &phi).unwrap().sum().abs() <= 1e-12 * sys.size() as f64);
        }
    }

    #[test]
    fn interlacing(seed in any::<u64>()) {
        let (g, plan) = instance(seed, 5, 30);
        let sys = apply(&g, &plan).unwrap();
        let a = eigs(sys.a()).unwrap();
        let scaled = eigs_matrix(&sys.scaled_laplacian()).unwrap();
        prop_assert!(disagg::spectral::interlacing_check(&a, &scaled).unwrap().holds);
    }

    #[test]
    fn local_identity_all_templates(d in 2usize..=8, tseed in any::<u64>(), useed in any::<u64>()) {
        let mut r = rng(tseed);
        let templates = [LocalTemplate::Cycle, LocalTemplate::Clique, LocalTemplate::Path, random_custom(&mut r, d)];
        let mut ur = rng(useed);
        let u = DVector::from_fn(d, |_, _| rand::Rng::gen_range(&mut ur, -5.0..5.0));
        for t in &templates {
            let l = t.unit_laplacian(d).unwrap();
            for j in 0..d {
                let (lhs, rhs) = local_identity(&l, j, &u).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn graph_files_round_trip(seed in any::<u64>()) {
        let (g, _) = instance(seed, 2, 30);
        prop_assert_eq!(&parse_edge_list(&format_edge_list(&g)).unwrap(), &g);
        let back = parse_matrix_market(&format_matrix_market(&g)).unwrap();
        prop_assert_eq!(back.n(), g.n());
        let mut x: Vec<_> = g.edges().iter().map(|e| (e.i.min(e.j), e.i.max(e.j), e.w.to_bits())).collect();
        let mut y: Vec<_> = back.edges().iter().map(|e| (e.i.min(e.j), e.i.max(e.j), e.w.to_bits())).collect();
        x.sort();
        y.sort();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn plan_json_round_trip(seed in any::<u64>()) {
        let (_, plan) = hub_instance(seed, 4, 15);
        let text = serde_json::to_string(&plan).unwrap();
        let back: DisaggregationPlan = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, plan);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn weight_rule_certificate(seed in any::<u64>(), eps in prop::sample::select(vec![0.01, 0.1, 1.0])) {
        let (g, plan) = hub_instance(seed, 5, 20);
        let sys = apply(&g, &plan).unwrap();
        let (ruled, ledger) = weight_rule_system(&sys, eps).unwrap();
        for (w, t) in ruled.internal_weights().iter().flatten().zip(ledger.thresholds.iter().flatten()) {
            prop_assert!(w >= t);
        }
        let classified = ledger.kept_edges.len() + ledger.attached_edges.len() + ledger.bridge_edges.len()
            + ledger.internal_edges.iter().map(Vec::len).sum::<usize>();
        prop_assert_eq!(classified, ruled.gd().edge_count());
        prop_assert!(transfer_constant(&ruled).unwrap() <= 1.0 + eps + 1e-9);
    }

    #[test]
    fn transported_condition_numbers(seed in any::<u64>(), eps in prop::sample::select(vec![0.01, 0.1, 1.0])) {
        let (g, plan) = instance(seed, 5, 25);
        let sys = apply(&g, &plan).unwrap();
        let (ruled, _) = weight_rule_system(&sys, eps).unwrap();
        for kind in [InnerKind::ExactPseudoinverse, InnerKind::Jacobi, InnerKind::SymGaussSeidel] {
            let pc = build_preconditioner(&ruled, kind).unwrap();
            prop_assert!((&pc.b - pc.b.transpose()).amax() <= 1e-12 * pc.b.amax());
            let kappa = condition_estimate(&pc.b, ruled.a()).unwrap();
            let inner = condition_estimate(&pc.inner, ruled.ad()).unwrap();
            prop_assert!(kappa <= (1.0 + eps) * inner + 1e-6, "{kind}: {kappa} vs {inner}");
            let scaled = scaled_inner_condition(&ruled, &pc).unwrap();
            prop_assert!((scaled - inner).abs() <= 1e-9 * inner);
        }
    }

    #[test]
    fn pcg_energy_error_decreases(seed in any::<u64>(), bseed in any::<u64>()) {
        let (g, plan) = instance(seed, 5, 30);
        let sys = apply(&g, &plan).unwrap();
        let (ruled, _) = weight_rule_system(&sys, 0.1).unwrap();
        let b = consistent_rhs(&g, bseed);
        for kind in [InnerKind::ExactPseudoinverse, InnerKind::Jacobi, InnerKind::SymGaussSeidel] {
            let pc = build_preconditioner(&ruled, kind).unwrap();
            let (x, report) = pcg_solve(ruled.a(), &b, &pc.b, 1e-10, 500).unwrap();
            prop_assert!(report.converged);
            prop_assert!(report.energy_monotone());
            prop_assert!(x.sum().abs() <= 1e-10 * x.norm().max(1.0));
            prop_assert!((ruled.a().apply(&x) - &b).norm() <= 1e-10 * b.norm());
        }
    }
}
