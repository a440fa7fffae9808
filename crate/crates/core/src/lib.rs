//! Vertex disaggregation of weighted graph Laplacians.
//!
//! A high-degree vertex of a graph `G` is replaced by `d` vertices joined by
//! a small local graph, giving the disaggregated graph `G_D`. The crate
//! builds `G_D` together with the prolongation `P` (so that `A = P^T A_D P`),
//! measures how the spectrum moves, and transports preconditioners for
//! `A_D` back to `A` through the scaled prolongation `D_s P`.
//!
//! Modules:
//!
//! - [`graph`]: weighted graphs, Laplacians, degree matrices.
//! - [`disaggregate`]: plans, `G_D`, `A_D`, `P`, `D_s`, lifted vectors.
//! - [`spectral`]: eigensolves and the spectral / Cheeger estimates.
//! - [`precond`]: the internal-edge weight rule, the transported
//!   preconditioner and a null-space aware PCG.
//! - [`io`], [`generate`], [`report`]: file formats, synthetic graphs, and
//!   the full check suite with its JSON report.

pub mod disaggregate;
pub mod error;
pub mod generate;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod precond;
pub mod report;
pub mod spectral;

pub use disaggregate::{
    apply, apply_sequential, lift_eigvec, lift_eigvec_normalized, plan_from_threshold,
    prolongation, scaled_prolongation, DisaggregatedSystem, DisaggregationPlan, LocalTemplate,
    MultiplicityRule, Split,
};
pub use error::{Error, Result};
pub use graph::{
    build_degree_matrix, build_laplacian, is_connected, rayleigh_quotient, DegreeMatrix,
    LaplacianMatrix, WeightedGraph,
};
