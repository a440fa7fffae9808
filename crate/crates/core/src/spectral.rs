//! Spectra of `A` and `A_D` and the estimates that relate them.
//!
//! Everything here runs dense symmetric eigensolves; the routines are meant
//! for verification at desk scale, not for large graphs.
//!
//! The "characteristic value" of a split vertex is taken to be the entry of
//! the (unit) Fiedler vector of the graph being split at that vertex.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::disaggregate::{
    apply, apply_sequential, lift_eigvec, lift_eigvec_normalized, DisaggregatedSystem,
    DisaggregationPlan,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_degree_matrix, build_laplacian, is_connected, LaplacianMatrix, WeightedGraph,
};
use crate::linalg::symmetric_eigen;

/// Slack used by every "bound holds" flag in this module.
pub const BOUND_SLACK: f64 = 1e-9;

/// Largest graph accepted by [`cheeger_exact`].
pub const CHEEGER_MAX_VERTICES: usize = 16;

/// Sorted eigenpairs of a symmetric matrix plus its Fiedler pair.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: DMatrix<f64>,
    /// `lambda_2`.
    pub algebraic_connectivity: f64,
    pub fiedler: DVector<f64>,
    /// `lambda_2` is (numerically) repeated; `fiedler` is then the first
    /// vector the solver returned for it.
    pub fiedler_degenerate: bool,
}

impl SpectralSummary {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn eigenpair(&self, i: usize) -> (f64, DVector<f64>) {
        (
            self.eigenvalues[i],
            self.eigenvectors.column(i).clone_owned(),
        )
    }
}

pub fn eigs(m: &LaplacianMatrix) -> Result<SpectralSummary> {
    eigs_matrix(m.matrix())
}

/// [`eigs`] for any symmetric matrix, e.g. `Ã_D`.
pub fn eigs_matrix(m: &DMatrix<f64>) -> Result<SpectralSummary> {
    let eig = symmetric_eigen(m)?;
    let n = eig.values.len();
    let lmax = eig.values.last().copied().unwrap_or(0.0).abs();
    let (algebraic_connectivity, fiedler) = if n >= 2 {
        (eig.values[1], eig.vectors.column(1).clone_owned())
    } else {
        (0.0, DVector::zeros(n))
    };
    let fiedler_degenerate = n >= 3 && (eig.values[2] - eig.values[1]).abs() <= 1e-9 * lmax;
    Ok(SpectralSummary {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        algebraic_connectivity,
        fiedler,
        fiedler_degenerate,
    })
}

/// Eigenpairs of the normalized Laplacian `D^{-1} A`.
#[derive(Debug, Clone)]
pub struct NormalizedSummary {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors scaled so that `<D phi, phi> = 1`, as columns.
    pub eigenvectors: DMatrix<f64>,
    pub nu2: f64,
    pub fiedler: DVector<f64>,
}

/// Solves `A phi = nu D phi` through `D^{-1/2} A D^{-1/2}`.
pub fn normalized_eigs(g: &WeightedGraph) -> Result<NormalizedSummary> {
    let deg = build_degree_matrix(g);
    if let Some(v) = deg.diagonal().iter().position(|&d| d <= 0.0) {
        return Err(Error::Domain(format!("vertex {v} has zero degree")));
    }
    let inv_sqrt = deg.diagonal().map(|d| 1.0 / d.sqrt());
    let mut m = build_laplacian(g).into_matrix();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = symmetric_eigen(&crate::linalg::symmetrize(&m))?;
    let mut vectors = eig.vectors;
    for mut col in vectors.column_iter_mut() {
        col.component_mul_assign(&inv_sqrt);
    }
    let n = eig.values.len();
    let (nu2, fiedler) = if n >= 2 {
        (eig.values[1], vectors.column(1).clone_owned())
    } else {
        (0.0, DVector::zeros(n))
    };
    Ok(NormalizedSummary {
        eigenvalues: eig.values,
        eigenvectors: vectors,
        nu2,
        fiedler,
    })
}

/// Closed-form Rayleigh quotient of a lifted unit eigenvector after splitting
/// one vertex of an `n`-vertex graph into `d`: `lambda / (1 + (d-1) n / N phi_n^2)`.
pub fn rq_shrink_single(lambda: f64, phi_n: f64, d: usize, n: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::Domain(format!(
            "multiplicity {d} must be at least 1"
        )));
    }
    let big_n = (n + d - 1) as f64;
    Ok(lambda / (1.0 + (d as f64 - 1.0) * n as f64 / big_n * phi_n * phi_n))
}

/// `a(G) / a(G_D)` against a lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct RatioCheck {
    pub a_g: f64,
    pub a_gd: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
    /// Fiedler-vector entries of `G` at the split vertices.
    pub characteristic: Vec<f64>,
    pub fiedler_degenerate: bool,
    /// `n + n_d - m * max d_k > 0`; when true the multi-split estimate is strict.
    pub positivity_condition: bool,
}

fn connectivity_of(sys: &DisaggregatedSystem) -> Result<f64> {
    let s = eigs(sys.ad())?;
    if s.algebraic_connectivity <= 1e-12 * s.lambda_max() {
        return Err(Error::Disconnected);
    }
    Ok(s.algebraic_connectivity)
}

/// One split: `a(G)/a(G_D) >= 1 + (d-1) n / N phi_n^2`.
pub fn connectivity_ratio_bound_single(
    sys: &DisaggregatedSystem,
    summary: &SpectralSummary,
) -> Result<RatioCheck> {
    if sys.split_count() != 1 {
        return Err(Error::Domain(format!(
            "single-split estimate needs exactly one split, got {}",
            sys.split_count()
        )));
    }
    let group = &sys.groups()[0];
    let phi_n = summary.fiedler[group.vertex];
    let a_gd = connectivity_of(sys)?;
    let a_g = summary.algebraic_connectivity;
    let bound = a_g / rq_shrink_single(a_g, phi_n, group.d, sys.original_size())?;
    let ratio = a_g / a_gd;
    Ok(RatioCheck {
        a_g,
        a_gd,
        ratio,
        bound,
        holds: ratio >= bound - BOUND_SLACK,
        characteristic: vec![phi_n],
        fiedler_degenerate: summary.fiedler_degenerate,
        positivity_condition: true,
    })
}

/// `1 + (1/N) sum_k (d_k - 1)(n + n_d - m d_k) phi_k^2` and the positivity flag.
pub fn multi_split_factor(sys: &DisaggregatedSystem, phi: &DVector<f64>) -> (f64, bool) {
    let n = sys.original_size() as f64;
    let m = sys.split_count() as f64;
    let n_d = sys.plan().disaggregate_count() as f64;
    let big_n = sys.size() as f64;
    let sum: f64 = sys
        .groups()
        .iter()
        .map(|g| {
            let d = g.d as f64;
            (d - 1.0) * (n + n_d - m * d) * phi[g.vertex].powi(2)
        })
        .sum();
    let d_max = sys.groups().iter().map(|g| g.d).max().unwrap_or(0) as f64;
    (1.0 + sum / big_n, n + n_d - m * d_max > 0.0)
}

/// Several splits at once, with the estimate built from the Fiedler vector of `G`.
pub fn connectivity_ratio_bound_multi(
    sys: &DisaggregatedSystem,
    summary: &SpectralSummary,
) -> Result<RatioCheck> {
    let a_gd = connectivity_of(sys)?;
    let a_g = summary.algebraic_connectivity;
    let (bound, positivity_condition) = multi_split_factor(sys, &summary.fiedler);
    let ratio = a_g / a_gd;
    Ok(RatioCheck {
        a_g,
        a_gd,
        ratio,
        bound,
        holds: ratio >= bound - BOUND_SLACK,
        characteristic: sys
            .groups()
            .iter()
            .map(|g| summary.fiedler[g.vertex])
            .collect(),
        fiedler_degenerate: summary.fiedler_degenerate,
        positivity_condition,
    })
}

/// The product estimate from splitting one vertex at a time.
#[derive(Debug, Clone, Serialize)]
pub struct ProductCheck {
    pub a_g: f64,
    pub a_gd: f64,
    pub ratio: f64,
    /// One factor `1 + (d_i - 1) n_{i-1} / n_i phi_i^2` per step.
    pub factors: Vec<f64>,
    pub bound: f64,
    pub holds: bool,
    /// Entry of the intermediate graph's Fiedler vector at each split vertex.
    pub characteristic: Vec<f64>,
    /// Whether each intermediate `lambda_2` was repeated.
    pub degenerate: Vec<bool>,
    /// `a(G_D) <= a(G)`.
    pub monotone: bool,
}

/// Splits in plan order; `phi_i` is read from the Fiedler vector of the
/// graph produced by the first `i - 1` splits.
pub fn connectivity_ratio_bound_product(
    g: &WeightedGraph,
    plan: &DisaggregationPlan,
) -> Result<ProductCheck> {
    let steps = apply_sequential(g, plan)?;
    let base = eigs(&build_laplacian(g))?;
    let a_g = base.algebraic_connectivity;
    let mut factors = Vec::with_capacity(steps.len());
    let mut characteristic = Vec::with_capacity(steps.len());
    let mut degenerate = Vec::with_capacity(steps.len());
    let mut a_gd = a_g;
    let mut current = base;
    for step in &steps {
        let phi = current.fiedler[step.target];
        let n_prev = step.before.n() as f64;
        let n_next = step.system.size() as f64;
        let d = step.system.groups()[0].d as f64;
        factors.push(1.0 + (d - 1.0) * n_prev / n_next * phi * phi);
        characteristic.push(phi);
        degenerate.push(current.fiedler_degenerate);
        current = eigs(step.system.ad())?;
        if current.algebraic_connectivity <= 1e-12 * current.lambda_max() {
            return Err(Error::Disconnected);
        }
        a_gd = current.algebraic_connectivity;
    }
    let bound: f64 = factors.iter().product();
    let ratio = a_g / a_gd;
    Ok(ProductCheck {
        a_g,
        a_gd,
        ratio,
        factors,
        bound,
        holds: ratio >= bound - BOUND_SLACK,
        characteristic,
        degenerate,
        monotone: a_gd <= a_g + BOUND_SLACK,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Eigen-residual of the lifted vector, `|A_D phi~ - RQ(phi~) phi~|`, against
///
/// `|A_0n^T (phi_n 1 - phi_0)| + sqrt(d n (d+n))/N lambda |phi_n| + d n / N lambda phi_n^2`.
///
/// `phi` is rescaled to unit length first.
pub fn residual_bound_single(
    sys: &DisaggregatedSystem,
    lambda: f64,
    phi: &DVector<f64>,
) -> Result<ResidualCheck> {
    if sys.split_count() != 1 {
        return Err(Error::Domain(
            "residual estimate needs exactly one split".into(),
        ));
    }
    let phi = phi.normalize();
    let lifted = lift_eigvec(sys, &phi)?;
    let ad = sys.ad().matrix();
    let image = ad * &lifted;
    let rq = lifted.dot(&image) / lifted.norm_squared();
    let lhs = (image - &lifted * rq).norm();

    let group = &sys.groups()[0];
    let phi_n = phi[group.vertex];
    let outside: Vec<usize> = (0..sys.original_size())
        .filter(|&v| v != group.vertex)
        .collect();
    let gap = DVector::from_iterator(outside.len(), outside.iter().map(|&v| phi_n - phi[v]));
    let coupling = sys.block_coupling().transpose() * gap;

    let (d, n, big_n) = (
        group.d as f64,
        sys.original_size() as f64,
        sys.size() as f64,
    );
    let rhs = coupling.norm()
        + (d * n * (d + n)).sqrt() / big_n * lambda * phi_n.abs()
        + d * n / big_n * lambda * phi_n * phi_n;
    Ok(ResidualCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_SLACK,
    })
}

/// `<A_D phi~, phi~> / <D_D phi~, phi~>` computed directly and from
/// `nu / (1 + 2 w(G) w(G_a) / w(G_D) phi_n^2)`, for one split.
/// `phi` is rescaled so that `<D phi, phi> = 1`.
/// The constant vector lifts to zero, so only nonconstant `phi` are meaningful.
pub fn normalized_rq(sys: &DisaggregatedSystem, nu: f64, phi: &DVector<f64>) -> Result<(f64, f64)> {
    if sys.split_count() != 1 {
        return Err(Error::Domain(
            "normalized estimate needs exactly one split".into(),
        ));
    }
    let deg = build_degree_matrix(sys.original());
    let phi = phi / deg.inner(phi, phi).sqrt();
    let lifted = lift_eigvec_normalized(sys, &phi)?;
    let dd = sys.ad().matrix().diagonal();
    let value = sys.ad().quadratic_form(&lifted) / lifted.dot(&lifted.component_mul(&dd));
    let phi_n = phi[sys.groups()[0].vertex];
    Ok((value, nu / normalized_factor(sys, 0, phi_n)))
}

fn normalized_factor(sys: &DisaggregatedSystem, group: usize, phi: f64) -> f64 {
    1.0 + 2.0 * sys.original().total_weight() * sys.local_total_weight(group)
        / sys.gd().total_weight()
        * phi
        * phi
}

/// `min |E(U, U')| / min(vol U, vol U')` over all nonempty proper `U`, by enumeration.
pub fn cheeger_exact(g: &WeightedGraph) -> Result<f64> {
    let n = g.n();
    if n > CHEEGER_MAX_VERTICES {
        return Err(Error::TooLarge {
            n,
            max: CHEEGER_MAX_VERTICES,
        });
    }
    if n < 2 {
        return Err(Error::Domain(
            "Cheeger constant needs at least two vertices".into(),
        ));
    }
    if !is_connected(g) {
        return Ok(0.0);
    }
    let deg = g.degrees();
    let total: f64 = deg.iter().sum();
    let mut best = f64::INFINITY;
    // The last vertex always stays outside U, so each cut is visited once.
    for mask in 1u32..(1u32 << (n - 1)) {
        let vol: f64 = (0..n - 1)
            .filter(|&v| mask >> v & 1 == 1)
            .map(|v| deg[v])
            .sum();
        let cut: f64 = g
            .edges()
            .iter()
            .filter(|e| side(mask, e.i) != side(mask, e.j))
            .map(|e| e.w)
            .sum();
        best = best.min(cut / vol.min(total - vol));
    }
    Ok(best)
}

fn side(mask: u32, v: usize) -> bool {
    v < 31 && mask >> v & 1 == 1
}

/// The Cheeger inequality `1 - sqrt(1 - h^2) <= nu_2 <= 2h` for one graph.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheegerReport {
    pub h: f64,
    pub nu2: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

pub fn cheeger_report(g: &WeightedGraph) -> Result<CheegerReport> {
    let h = cheeger_exact(g)?;
    let nu2 = normalized_eigs(g)?.nu2;
    let lower = 1.0 - (1.0 - h * h).max(0.0).sqrt();
    let upper = 2.0 * h;
    Ok(CheegerReport {
        h,
        nu2,
        lower,
        upper,
        holds: lower <= nu2 + 1e-12 && nu2 <= upper + 1e-12,
    })
}

/// Shrink factor `alpha <= 1` with `nu_2(G_D) <= alpha nu_2(G)`, built one
/// split at a time from the normalized Fiedler vectors of the intermediate graphs.
pub fn shrink_factor(g: &WeightedGraph, plan: &DisaggregationPlan) -> Result<f64> {
    let mut alpha = 1.0;
    for step in apply_sequential(g, plan)? {
        let phi = normalized_eigs(&step.before)?.fiedler[step.target];
        alpha /= normalized_factor(&step.system, 0, phi);
    }
    Ok(alpha)
}

/// `h(G_D) <= sqrt(1 - (1 - 2 alpha h(G))^2)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheegerDisaggBound {
    pub h_g: f64,
    /// Exact `h(G_D)` when `G_D` is small enough to enumerate.
    pub h_gd: Option<f64>,
    pub alpha: f64,
    pub nu2_g: f64,
    pub nu2_gd: f64,
    /// `nu_2(G_D) <= alpha nu_2(G)`.
    pub shrink_holds: bool,
    pub bound: f64,
    pub holds: Option<bool>,
    /// `h(G) >= 4 alpha / (4 alpha^2 + 1)`.
    pub monotone_precondition: bool,
    /// The precondition together with `2 alpha h(G) <= 1`, the range where
    /// `h(G_D) <= h(G)` follows from the bound.
    pub monotone_applies: bool,
    pub monotone_holds: Option<bool>,
}

/// Evaluates the bound with `2 alpha h` capped at one: beyond that the only
/// information is `h(G_D) <= 1`.
pub fn cheeger_bound(alpha: f64, h: f64) -> f64 {
    let t = (2.0 * alpha * h).clamp(0.0, 1.0);
    (1.0 - (1.0 - t).powi(2)).max(0.0).sqrt()
}

pub fn cheeger_disagg_bound(
    g: &WeightedGraph,
    sys: &DisaggregatedSystem,
) -> Result<CheegerDisaggBound> {
    let h_g = cheeger_exact(g)?;
    let h_gd = match cheeger_exact(sys.gd()) {
        Ok(h) => Some(h),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let alpha = shrink_factor(g, sys.plan())?;
    let nu2_g = normalized_eigs(g)?.nu2;
    let nu2_gd = normalized_eigs(sys.gd())?.nu2;
    let bound = cheeger_bound(alpha, h_g);
    let monotone_precondition = h_g >= 4.0 * alpha / (4.0 * alpha * alpha + 1.0);
    let monotone_applies = monotone_precondition && 2.0 * alpha * h_g <= 1.0;
    Ok(CheegerDisaggBound {
        h_g,
        h_gd,
        alpha,
        nu2_g,
        nu2_gd,
        shrink_holds: nu2_gd <= alpha * nu2_g + BOUND_SLACK,
        bound,
        holds: h_gd.map(|h| h <= bound + 1e-12),
        monotone_precondition,
        monotone_applies,
        monotone_holds: h_gd.filter(|_| monotone_applies).map(|h| h <= h_g + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterlacingReport {
    pub holds: bool,
    /// Smallest slack over all `2n` inequalities (negative means violated).
    pub min_slack: f64,
    pub tolerance: f64,
}

/// `lambda_i(Ã_D) <= lambda_i(A) <= lambda_{N-n+i}(Ã_D)` for every `i`.
pub fn interlacing_check(
    a: &SpectralSummary,
    scaled: &SpectralSummary,
) -> Result<InterlacingReport> {
    let (n, big_n) = (a.dim(), scaled.dim());
    if n > big_n {
        return Err(Error::DimensionMismatch {
            expected: big_n,
            found: n,
        });
    }
    let tolerance = BOUND_SLACK * a.lambda_max().max(scaled.lambda_max()).max(1.0);
    let min_slack = (0..n)
        .map(|i| {
            let below = a.eigenvalues[i] - scaled.eigenvalues[i];
            let above = scaled.eigenvalues[big_n - n + i] - a.eigenvalues[i];
            below.min(above)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(InterlacingReport {
        holds: min_slack >= -tolerance,
        min_slack,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow {
    pub w: f64,
    pub a_gd: f64,
    pub bound: f64,
    pub a_g: f64,
}

/// `a(G_D)` as every internal weight sweeps a range, against the
/// weight-independent ceiling `a(G) / (1 + ...)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    pub characteristic: Vec<f64>,
    /// All characteristic values vanish, so the ceiling is `a(G)` itself and
    /// the sweep cannot show a persistent gap.
    pub inconclusive: bool,
    /// `min_w (a(G) - a(G_D(w)))`.
    pub min_gap: Option<f64>,
    /// `a(G) - ceiling`: the gap no internal weight can close.
    pub guaranteed_gap: f64,
    pub holds: bool,
}

pub fn conjecture_probe(
    g: &WeightedGraph,
    plan: &DisaggregationPlan,
    sweep: &[f64],
) -> Result<ProbeTable> {
    if let Some(w) = sweep.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::Domain(format!("sweep weight {w} must be positive")));
    }
    let base = eigs(&build_laplacian(g))?;
    let a_g = base.algebraic_connectivity;
    let reference = apply(g, plan)?;
    let (factor, _) = multi_split_factor(&reference, &base.fiedler);
    let bound = a_g / factor;
    let characteristic: Vec<f64> = reference
        .groups()
        .iter()
        .map(|s| base.fiedler[s.vertex])
        .collect();

    let rows = sweep
        .par_iter()
        .map(|&w| {
            let sys = apply(g, &plan.with_uniform_internal_weight(w))?;
            Ok(ProbeRow {
                w,
                a_gd: eigs(sys.ad())?.algebraic_connectivity,
                bound,
                a_g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_gap = rows.iter().map(|r| r.a_g - r.a_gd).reduce(f64::min);
    Ok(ProbeTable {
        holds: rows.iter().all(|r| r.a_gd <= r.bound + BOUND_SLACK),
        inconclusive: characteristic.iter().all(|p| p.abs() <= 1e-10),
        guaranteed_gap: a_g - bound,
        rows,
        characteristic,
        min_gap,
    })
}

/// `count` weights `start, start * factor, ...`.
pub fn geometric_sweep(start: f64, factor: f64, count: usize) -> Vec<f64> {
    std::iter::successors(Some(start), |w| Some(w * factor))
        .take(count)
        .collect()
}
