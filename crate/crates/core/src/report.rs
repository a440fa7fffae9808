//! The full check suite for one `(graph, plan)` pair and its JSON document.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::disaggregate::{
    apply, lift_eigvec, scaled_prolongation, DisaggregatedSystem, DisaggregationPlan,
};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, rayleigh_quotient, WeightedGraph};
use crate::precond::{
    build_preconditioner, condition_estimate, pcg_solve, scaled_inner_condition, transfer_constant,
    weight_rule_system, InnerKind, DEFAULT_EPS,
};
use crate::spectral::{
    cheeger_disagg_bound, cheeger_report, connectivity_ratio_bound_multi,
    connectivity_ratio_bound_product, connectivity_ratio_bound_single, eigs, eigs_matrix,
    interlacing_check, multi_split_factor, normalized_eigs, normalized_rq, residual_bound_single,
    rq_shrink_single, shrink_factor, BOUND_SLACK, CHEEGER_MAX_VERTICES,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One inequality or identity, `lhs` compared with `rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckBlock {
    pub name: String,
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub tolerance: f64,
}

impl CheckBlock {
    /// `lhs <= rhs + tolerance`.
    fn at_most(name: &str, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        CheckBlock {
            name: name.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + tolerance,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverBlock {
    pub inner: InnerKind,
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub kappa_ba: f64,
    pub kappa_inner: f64,
    pub c1_squared: f64,
    pub energy_monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDescriptor {
    pub sha256: String,
    pub n: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub input: InputDescriptor,
    pub plan: DisaggregationPlan,
    pub checks: Vec<CheckBlock>,
    pub solver: Vec<SolverBlock>,
    /// Interpretation choices and degeneracy flags that affect the checks.
    pub notes: Vec<String>,
}

impl ReportDocument {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn is_finite(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.lhs.is_finite() && c.rhs.is_finite() && c.tolerance.is_finite())
            && self.solver.iter().all(|s| {
                [
                    s.eps,
                    s.final_residual,
                    s.kappa_ba,
                    s.kappa_inner,
                    s.c1_squared,
                ]
                .iter()
                .all(|x| x.is_finite())
            })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub eps: f64,
    pub seed: u64,
    pub tol: f64,
    pub maxit: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            eps: DEFAULT_EPS,
            seed: 0,
            tol: 1e-10,
            maxit: 500,
        }
    }
}

/// PCG iteration budget for condition number `kappa` and relative tolerance `tol`.
pub fn pcg_iteration_bound(kappa: f64, tol: f64) -> usize {
    (0.5 * kappa.sqrt() * (2.0 / tol).ln()).ceil() as usize + 2
}

/// Relative difference, or difference relative to `scale` when `b` is zero.
fn relative_gap(a: f64, b: f64, scale: f64) -> f64 {
    if b.abs() > 1e-12 * scale {
        (a - b).abs() / b.abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Random right-hand side in the range of `A`.
pub fn consistent_rhs(g: &WeightedGraph, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DVector::from_fn(g.n(), |_, _| rng.gen_range(-1.0..1.0));
    build_laplacian(g).apply(&x)
}

pub fn run_checks(
    g: &WeightedGraph,
    plan: &DisaggregationPlan,
    input: InputDescriptor,
    opts: SuiteOptions,
) -> Result<ReportDocument> {
    let sys = apply(g, plan)?;
    let mut notes = Vec::new();
    let (spectral, precond) =
        rayon::join(|| spectral_checks(g, &sys), || precond_checks(&sys, opts));
    let (mut checks, spectral_notes) = spectral?;
    let (more, solver) = precond?;
    checks.extend(more);
    notes.extend(spectral_notes);
    notes.dedup();
    let doc = ReportDocument {
        tool_version: TOOL_VERSION.into(),
        input,
        plan: plan.clone(),
        checks,
        solver,
        notes,
    };
    if !doc.is_finite() {
        return Err(Error::Domain("report contains non-finite values".into()));
    }
    Ok(doc)
}

fn spectral_checks(
    g: &WeightedGraph,
    sys: &DisaggregatedSystem,
) -> Result<(Vec<CheckBlock>, Vec<String>)> {
    let mut notes = Vec::new();
    let checks = spectral_checks_inner(g, sys, &mut notes)?;
    Ok((checks, notes))
}

fn spectral_checks_inner(
    g: &WeightedGraph,
    sys: &DisaggregatedSystem,
    notes: &mut Vec<String>,
) -> Result<Vec<CheckBlock>> {
    let mut out = Vec::new();
    let a = sys.a().matrix();
    let scale = sys.a().max_diagonal().max(f64::MIN_POSITIVE);
    let p = sys.p();
    let pt = scaled_prolongation(sys);

    let galerkin = (a - p.transpose() * sys.ad().matrix() * p).amax();
    out.push(CheckBlock::at_most(
        "galerkin",
        "galerkin-identity",
        galerkin,
        0.0,
        1e-12 * scale,
    ));
    let ortho = (pt.transpose() * &pt - DMatrix::identity(g.n(), g.n())).amax();
    out.push(CheckBlock::at_most(
        "scaled_orthonormality",
        "scaled-prolongation-orthonormal",
        ortho,
        0.0,
        1e-12,
    ));

    let base = eigs(sys.a())?;
    let lmax = base.lambda_max().max(f64::MIN_POSITIVE);
    if base.fiedler_degenerate {
        notes.push("lambda_2(A) is repeated; the first solver eigenvector is used".into());
    }

    if !sys.plan().is_empty() {
        notes.push(
            "characteristic value of a split vertex = its entry in the unit Fiedler vector".into(),
        );
        let mut worst_mean: f64 = 0.0;
        let mut worst_rq: f64 = 0.0;
        let mut worst_numerator: f64 = 0.0;
        let mut worst_ineq = f64::NEG_INFINITY;
        for i in 0..base.dim() {
            let (lambda, phi) = base.eigenpair(i);
            let lifted = lift_eigvec(sys, &phi)?;
            if i > 0 {
                worst_mean = worst_mean.max(lifted.sum().abs());
            }
            let numerator = sys.ad().quadratic_form(&lifted);
            worst_numerator = worst_numerator.max((numerator - lambda).abs() / lmax);
            let direct = rayleigh_quotient(sys.ad(), &lifted)?;
            if sys.split_count() == 1 {
                let grp = &sys.groups()[0];
                let closed = rq_shrink_single(lambda, phi[grp.vertex], grp.d, g.n())?;
                worst_rq = worst_rq.max(relative_gap(direct, closed, lmax));
            } else {
                let (factor, _) = multi_split_factor(sys, &phi);
                worst_ineq = worst_ineq.max(direct - lambda / factor);
            }
        }
        out.push(CheckBlock::at_most(
            "lift_zero_mean",
            "lifted-vector-orthogonal-to-constants",
            worst_mean,
            0.0,
            1e-12 * g.n() as f64,
        ));
        out.push(CheckBlock::at_most(
            "lift_energy",
            "lifted-vector-energy",
            worst_numerator,
            0.0,
            1e-10,
        ));
        if sys.split_count() == 1 {
            out.push(CheckBlock::at_most(
                "lifted_rayleigh_quotient",
                "single-split-rayleigh-quotient",
                worst_rq,
                0.0,
                1e-10,
            ));
            let ratio = connectivity_ratio_bound_single(sys, &base)?;
            out.push(ratio_block(
                "connectivity_ratio_single",
                "single-split-connectivity-ratio",
                ratio.ratio,
                ratio.bound,
            ));

            let mut lhs = 0.0;
            let mut rhs = 0.0;
            let mut margin = f64::INFINITY;
            for i in 1..base.dim() {
                let (lambda, phi) = base.eigenpair(i);
                let r = residual_bound_single(sys, lambda, &phi)?;
                if r.rhs - r.lhs < margin {
                    margin = r.rhs - r.lhs;
                    lhs = r.lhs;
                    rhs = r.rhs;
                }
            }
            if base.dim() > 1 {
                out.push(CheckBlock::at_most(
                    "eigen_residual",
                    "lifted-eigen-residual",
                    lhs,
                    rhs,
                    BOUND_SLACK,
                ));
            }

            let norm = normalized_eigs(g)?;
            let nmax = norm
                .eigenvalues
                .last()
                .copied()
                .unwrap_or(1.0)
                .max(f64::MIN_POSITIVE);
            let mut worst: f64 = 0.0;
            // The constant pair lifts to the zero vector.
            for i in 1..norm.eigenvalues.len() {
                let phi = norm.eigenvectors.column(i).clone_owned();
                let (value, closed) = normalized_rq(sys, norm.eigenvalues[i], &phi)?;
                worst = worst.max(relative_gap(value, closed, nmax));
            }
            out.push(CheckBlock::at_most(
                "normalized_rayleigh_quotient",
                "normalized-rayleigh-quotient",
                worst,
                0.0,
                1e-10,
            ));
        } else {
            out.push(CheckBlock::at_most(
                "lifted_rayleigh_quotient_multi",
                "multi-split-rayleigh-quotient",
                worst_ineq,
                0.0,
                BOUND_SLACK * lmax,
            ));
            let ratio = connectivity_ratio_bound_multi(sys, &base)?;
            if !ratio.positivity_condition {
                notes.push(
                    "n + n_d - m d_max <= 0: the simultaneous estimate may not exceed 1".into(),
                );
            }
            out.push(ratio_block(
                "connectivity_ratio_multi",
                "multi-split-connectivity-ratio",
                ratio.ratio,
                ratio.bound,
            ));
        }
        let product = connectivity_ratio_bound_product(g, sys.plan())?;
        if product.degenerate.iter().any(|&d| d) {
            notes.push(
                "an intermediate lambda_2 is repeated; the first solver eigenvector is used".into(),
            );
        }
        notes.push("sequential estimate reads each split vertex from the Fiedler vector of the intermediate graph".into());
        out.push(ratio_block(
            "connectivity_ratio_product",
            "sequential-connectivity-ratio",
            product.ratio,
            product.bound,
        ));
    }

    let gd = eigs(sys.ad())?;
    out.push(CheckBlock::at_most(
        "connectivity_monotone",
        "connectivity-does-not-increase",
        gd.algebraic_connectivity,
        base.algebraic_connectivity,
        BOUND_SLACK,
    ));

    let alpha = shrink_factor(g, sys.plan())?;
    let nu2_g = normalized_eigs(g)?.nu2;
    let nu2_gd = normalized_eigs(sys.gd())?.nu2;
    out.push(CheckBlock::at_most(
        "normalized_connectivity_shrink",
        "normalized-connectivity-shrink",
        nu2_gd,
        alpha * nu2_g,
        BOUND_SLACK,
    ));

    if g.n() <= CHEEGER_MAX_VERTICES && g.n() >= 2 {
        let c = cheeger_report(g)?;
        out.push(CheckBlock::at_most(
            "cheeger_lower",
            "cheeger-inequality",
            c.lower,
            c.nu2,
            1e-12,
        ));
        out.push(CheckBlock::at_most(
            "cheeger_upper",
            "cheeger-inequality",
            c.nu2,
            c.upper,
            1e-12,
        ));
        let bound = cheeger_disagg_bound(g, sys)?;
        if let Some(h_gd) = bound.h_gd {
            out.push(CheckBlock::at_most(
                "cheeger_disaggregated",
                "disaggregated-cheeger-bound",
                h_gd,
                bound.bound,
                1e-12,
            ));
            if bound.monotone_holds.is_some() {
                out.push(CheckBlock::at_most(
                    "cheeger_monotone",
                    "disaggregated-cheeger-monotone",
                    h_gd,
                    bound.h_g,
                    1e-12,
                ));
            }
        } else {
            notes.push(
                "G_D too large for exact Cheeger enumeration; only the bound is reported".into(),
            );
        }
    }

    let scaled = eigs_matrix(&sys.scaled_laplacian())?;
    let inter = interlacing_check(&base, &scaled)?;
    out.push(CheckBlock {
        name: "interlacing".into(),
        anchor: "scaled-spectrum-interlacing".into(),
        lhs: -inter.min_slack,
        rhs: 0.0,
        holds: inter.holds,
        tolerance: inter.tolerance,
    });

    let c0 = (pt.transpose() * sys.scaled_laplacian() * &pt - a).amax();
    out.push(CheckBlock::at_most(
        "lower_energy_identity",
        "prolongation-energy-identity",
        c0,
        0.0,
        1e-12 * scale,
    ));
    Ok(out)
}

fn ratio_block(name: &str, anchor: &str, ratio: f64, bound: f64) -> CheckBlock {
    CheckBlock {
        name: name.into(),
        anchor: anchor.into(),
        lhs: ratio,
        rhs: bound,
        holds: ratio >= bound - BOUND_SLACK,
        tolerance: BOUND_SLACK,
    }
}

fn precond_checks(
    sys: &DisaggregatedSystem,
    opts: SuiteOptions,
) -> Result<(Vec<CheckBlock>, Vec<SolverBlock>)> {
    let eps = opts.eps;
    let (ruled, _) = weight_rule_system(sys, eps)?;
    let c1 = transfer_constant(&ruled)?;
    let mut out = vec![CheckBlock::at_most(
        "energy_transfer",
        "weight-rule-energy-transfer",
        c1,
        1.0 + eps,
        BOUND_SLACK,
    )];
    let g = sys.original();
    let b = consistent_rhs(g, opts.seed);
    let mut solver = Vec::new();
    for kind in [InnerKind::ExactPseudoinverse, InnerKind::Jacobi] {
        let pc = build_preconditioner(&ruled, kind)?;
        let kappa = condition_estimate(&pc.b, ruled.a())?;
        let kappa_inner = condition_estimate(&pc.inner, ruled.ad())?;
        let kappa_scaled = scaled_inner_condition(&ruled, &pc)?;
        let tag = kind.to_string();
        out.push(CheckBlock::at_most(
            &format!("condition_{tag}"),
            "transported-preconditioner-condition",
            kappa,
            (1.0 + eps) * kappa_inner,
            1e-6,
        ));
        out.push(CheckBlock::at_most(
            &format!("scaled_inner_condition_{tag}"),
            "scaled-inner-condition-invariance",
            (kappa_scaled - kappa_inner).abs(),
            0.0,
            1e-9 * kappa_inner,
        ));
        let (_, report) = pcg_solve(ruled.a(), &b, &pc.b, opts.tol, opts.maxit)?;
        if kind == InnerKind::ExactPseudoinverse {
            out.push(CheckBlock::at_most(
                "pcg_iterations",
                "transported-preconditioner-iterations",
                report.iterations as f64,
                pcg_iteration_bound(1.0 + eps, opts.tol) as f64,
                0.0,
            ));
        }
        out.push(CheckBlock::at_most(
            &format!("pcg_energy_monotone_{tag}"),
            "pcg-energy-error-monotone",
            if report.energy_monotone() { 0.0 } else { 1.0 },
            0.0,
            0.0,
        ));
        solver.push(SolverBlock {
            inner: kind,
            eps,
            iterations: report.iterations,
            converged: report.converged,
            final_residual: report.residual_history.last().copied().unwrap_or(0.0),
            kappa_ba: kappa,
            kappa_inner,
            c1_squared: c1,
            energy_monotone: report.energy_monotone(),
        });
    }
    Ok((out, solver))
}
