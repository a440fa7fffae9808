//! Preconditioning `A` through the disaggregated graph.
//!
//! With `P~ = D_s P` and `Ã_D = D_s^{-1} A_D D_s^{-1}` we have
//! `A = P~^T Ã_D P~` and `P~^T P~ = I`. A preconditioner `B_D` for `A_D` is
//! carried back to `A` as `B = P~^T (D_s B_D D_s) P~`. If every internal
//! edge of a local graph carries at least the weight `W_e'` computed by
//! [`edge_thresholds`], then `|P~^T v|_A^2 <= (1 + eps) |v|_{Ã_D}^2` and
//! `kappa(BA) <= (1 + eps) kappa(B_D A_D)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::disaggregate::{scaled_prolongation, DisaggregatedSystem, EdgeClass};
use crate::error::{Error, Result};
use crate::graph::{is_connected, LaplacianMatrix, WeightedGraph};
use crate::linalg::{
    effective_condition, max_generalized_on_complement, pseudo_inverse, symmetrize,
};

pub const DEFAULT_EPS: f64 = 0.1;

fn grounded_solve(l: &LaplacianMatrix, j: usize) -> Result<DVector<f64>> {
    let d = l.dim();
    if j >= d {
        return Err(Error::Domain(format!("local vertex {j} outside [0, {d})")));
    }
    if !is_connected(&WeightedGraph::from_laplacian(l)?) {
        return Err(Error::Singular("local graph is disconnected".into()));
    }
    let mut m = l.matrix().clone();
    m[(j, j)] += 1.0;
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::Singular("L + e_j e_j^T is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_element(d, 1.0)))
}

/// `W^j = |x|_L^2 / d^2` where `(L + e_j e_j^T) x = 1`.
pub fn local_weight(l: &LaplacianMatrix, j: usize) -> Result<f64> {
    let x = grounded_solve(l, j)?;
    let d = l.dim() as f64;
    Ok(l.quadratic_form(&x) / (d * d))
}

/// Both sides of `(1/d) <u, 1> - u_j = (1/d) <x, L u>`, `x` as in [`local_weight`].
pub fn local_identity(l: &LaplacianMatrix, j: usize, u: &DVector<f64>) -> Result<(f64, f64)> {
    let x = grounded_solve(l, j)?;
    let d = l.dim() as f64;
    Ok((u.sum() / d - u[j], x.dot(&l.apply(u)) / d))
}

/// Local weights and internal-edge thresholds for one tolerance `eps`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightLedger {
    pub eps: f64,
    /// `W_k^j` for each split group `k` and local vertex `j`.
    pub local: Vec<Vec<f64>>,
    /// `W_e'` for each internal edge, grouped like the template edges.
    pub thresholds: Vec<Vec<f64>>,
    /// Edge ids of `G_D` by class.
    pub kept_edges: Vec<usize>,
    pub attached_edges: Vec<usize>,
    pub bridge_edges: Vec<usize>,
    pub internal_edges: Vec<Vec<usize>>,
}

pub fn edge_thresholds(sys: &DisaggregatedSystem, eps: f64) -> Result<WeightLedger> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let local = sys
        .plan()
        .splits
        .iter()
        .map(|s| {
            let l = s.template.unit_laplacian(s.d)?;
            (0..s.d)
                .map(|j| local_weight(&l, j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let slot = |v: usize| match sys.origin()[v] {
        crate::disaggregate::VertexOrigin::Disaggregate { group, slot } => Some((group, slot)),
        crate::disaggregate::VertexOrigin::Kept { .. } => None,
    };
    let mut load = vec![0.0; sys.split_count()];
    let (mut kept_edges, mut attached_edges, mut bridge_edges) =
        (Vec::new(), Vec::new(), Vec::new());
    let mut internal_edges = vec![Vec::new(); sys.split_count()];
    for (id, (e, class)) in sys.gd().edges().iter().zip(sys.edge_classes()).enumerate() {
        match *class {
            EdgeClass::Kept => kept_edges.push(id),
            EdgeClass::Attached { .. } => {
                let (k, j) = slot(e.i)
                    .or_else(|| slot(e.j))
                    .expect("attached edge touches a group");
                load[k] += e.w * local[k][j];
                attached_edges.push(id);
            }
            EdgeClass::Bridge { .. } => {
                for (k, j) in [slot(e.i), slot(e.j)].into_iter().flatten() {
                    load[k] += 2.0 * e.w * local[k][j];
                }
                bridge_edges.push(id);
            }
            EdgeClass::Internal { group } => internal_edges[group].push(id),
        }
    }
    let scale = 1.0 + 1.0 / eps;
    let thresholds = internal_edges
        .iter()
        .zip(&load)
        .map(|(edges, l)| vec![scale * l; edges.len()])
        .collect();
    Ok(WeightLedger {
        eps,
        local,
        thresholds,
        kept_edges,
        attached_edges,
        bridge_edges,
        internal_edges,
    })
}

/// Raises every internal weight to at least its threshold.
pub fn apply_weight_rule(
    sys: &DisaggregatedSystem,
    ledger: &WeightLedger,
) -> Result<DisaggregatedSystem> {
    let current = sys.internal_weights();
    if current.len() != ledger.thresholds.len() {
        return Err(Error::DimensionMismatch {
            expected: current.len(),
            found: ledger.thresholds.len(),
        });
    }
    let weights: Vec<Vec<f64>> = current
        .iter()
        .zip(&ledger.thresholds)
        .map(|(w, t)| w.iter().zip(t).map(|(a, b)| a.max(*b)).collect())
        .collect();
    sys.with_internal_weights(&weights)
}

/// Thresholds for `eps` followed by [`apply_weight_rule`].
pub fn weight_rule_system(
    sys: &DisaggregatedSystem,
    eps: f64,
) -> Result<(DisaggregatedSystem, WeightLedger)> {
    let ledger = edge_thresholds(sys, eps)?;
    Ok((apply_weight_rule(sys, &ledger)?, ledger))
}

/// `D_s 1_N`, the null vector of `Ã_D`.
pub fn scaled_null_vector(sys: &DisaggregatedSystem) -> DVector<f64> {
    sys.ds().clone()
}

/// `c_1^2 = sup |P~^T v|_A^2 / |v|_{Ã_D}^2`, as the top generalized eigenvalue
/// of `(P~ A P~^T, Ã_D)` on the complement of `D_s 1_N`.
pub fn transfer_constant(sys: &DisaggregatedSystem) -> Result<f64> {
    let pt = scaled_prolongation(sys);
    let lifted = symmetrize(&(&pt * sys.a().matrix() * pt.transpose()));
    max_generalized_on_complement(&lifted, &sys.scaled_laplacian(), &scaled_null_vector(sys))
}

/// The inner preconditioner `B_D` for `A_D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    ExactPseudoinverse,
    Jacobi,
    SymGaussSeidel,
}

impl FromStr for InnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinv" | "exact" => Ok(InnerKind::ExactPseudoinverse),
            "jacobi" => Ok(InnerKind::Jacobi),
            "sgs" => Ok(InnerKind::SymGaussSeidel),
            other => Err(Error::Domain(format!(
                "unsupported inner preconditioner `{other}`"
            ))),
        }
    }
}

impl fmt::Display for InnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerKind::ExactPseudoinverse => "pinv",
            InnerKind::Jacobi => "jacobi",
            InnerKind::SymGaussSeidel => "sgs",
        })
    }
}

/// Dense `B_D` for a connected Laplacian.
pub fn inner_operator(ad: &LaplacianMatrix, kind: InnerKind) -> Result<DMatrix<f64>> {
    let m = ad.matrix();
    let n = m.nrows();
    let diag = m.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Singular("Laplacian has an isolated vertex".into()));
    }
    match kind {
        InnerKind::ExactPseudoinverse => pseudo_inverse(m, &DVector::from_element(n, 1.0)),
        InnerKind::Jacobi => Ok(DMatrix::from_diagonal(&diag.map(|d| 1.0 / d))),
        InnerKind::SymGaussSeidel => {
            // B = (D + U)^{-1} D (D + L)^{-1}, with (D + U)^{-1} = ((D + L)^{-1})^T.
            let lower = m.lower_triangle();
            let inv = lower
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .ok_or_else(|| Error::Singular("zero pivot in Gauss-Seidel sweep".into()))?;
            Ok(symmetrize(
                &(inv.transpose() * DMatrix::from_diagonal(&diag) * inv),
            ))
        }
    }
}

/// `B = P~^T B~_D P~` with `B~_D = D_s B_D D_s`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    pub kind: InnerKind,
    pub inner: DMatrix<f64>,
    pub scaled_inner: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Preconditioner {
    pub fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.b * r
    }
}

pub fn build_preconditioner(sys: &DisaggregatedSystem, kind: InnerKind) -> Result<Preconditioner> {
    let inner = inner_operator(sys.ad(), kind)?;
    let ds = DMatrix::from_diagonal(sys.ds());
    let scaled_inner = &ds * &inner * &ds;
    let pt = scaled_prolongation(sys);
    let b = symmetrize(&(pt.transpose() * &scaled_inner * &pt));
    Ok(Preconditioner {
        kind,
        inner,
        scaled_inner,
        b,
    })
}

/// Effective condition number of `B A` on the complement of `1` (the null
/// space of a connected Laplacian `A`).
pub fn condition_estimate(b: &DMatrix<f64>, a: &LaplacianMatrix) -> Result<f64> {
    if b.shape() != a.matrix().shape() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.nrows(),
        });
    }
    effective_condition(b, a.matrix(), &DVector::from_element(a.dim(), 1.0))
}

/// `kappa(B~_D Ã_D)`, on the complement of `D_s 1_N`.
pub fn scaled_inner_condition(sys: &DisaggregatedSystem, pc: &Preconditioner) -> Result<f64> {
    effective_condition(
        &pc.scaled_inner,
        &sys.scaled_laplacian(),
        &scaled_null_vector(sys),
    )
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `|r_k| / |b|`, starting with `k = 0`.
    pub residual_history: Vec<f64>,
    /// `sqrt(<r_k, B r_k>)`.
    pub preconditioned_residual_history: Vec<f64>,
    /// `|x_k - x|_A` estimated from the recurrence; exact up to the final error.
    pub energy_error_history: Vec<f64>,
    pub kappa_ba: Option<f64>,
    pub kappa_inner: Option<f64>,
    pub c1_squared: Option<f64>,
}

impl SolveReport {
    pub fn energy_monotone(&self) -> bool {
        self.energy_error_history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Preconditioned conjugate gradients for a consistent singular system
/// `A x = b` with `null(A) = span{1}`.
///
/// Iterates and preconditioned residuals are projected onto the complement
/// of `1`, so the returned `x` has zero mean.
pub fn pcg_solve(
    a: &LaplacianMatrix,
    b: &DVector<f64>,
    precond: &DMatrix<f64>,
    tol: f64,
    maxit: usize,
) -> Result<(DVector<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n || precond.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if b.len() != n {
                b.len()
            } else {
                precond.nrows()
            },
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let b_norm = b.norm();
    let mut report = SolveReport::default();
    if b_norm == 0.0 {
        report.converged = true;
        report.residual_history.push(0.0);
        report.energy_error_history.push(0.0);
        return Ok((DVector::zeros(n), report));
    }
    let drift = b.sum() / b_norm;
    if drift.abs() > 1e-10 {
        return Err(Error::Inconsistent(drift));
    }
    let project = |v: &mut DVector<f64>| {
        let mean = v.mean();
        v.add_scalar_mut(-mean);
    };

    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    project(&mut r);
    let mut z = precond * &r;
    project(&mut z);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut decrements = Vec::new();
    report.residual_history.push(r.norm() / b_norm);
    report
        .preconditioned_residual_history
        .push(rz.max(0.0).sqrt());

    while report.iterations < maxit {
        let ap = a.apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 || rz <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        decrements.push(alpha * rz);
        report.iterations += 1;
        let rel = r.norm() / b_norm;
        report.residual_history.push(rel);
        z = precond * &r;
        project(&mut z);
        let rz_next = r.dot(&z);
        report
            .preconditioned_residual_history
            .push(rz_next.max(0.0).sqrt());
        if rel <= tol {
            report.converged = true;
            break;
        }
        let beta = rz_next / rz;
        rz = rz_next;
        p = &z + &p * beta;
    }
    project(&mut x);

    // |e_k|_A^2 - |e_{k+1}|_A^2 = alpha_k <r_k, z_k>.
    let mut tail = 0.0;
    let mut energy = vec![0.0; decrements.len() + 1];
    for (k, dec) in decrements.iter().enumerate().rev() {
        tail += dec;
        energy[k] = tail.sqrt();
    }
    report.energy_error_history = energy;
    Ok((x, report))
}
