//! Space-time virtual element solver for the time-dependent advection-diffusion
//! equation on 2D polygonal meshes.
//!
//! The spatial discretization uses the enhanced virtual element space of degree
//! `k` with dofi-dofi stabilization; time is discretized with an upwind
//! discontinuous Galerkin method of degree `r` per slab. A space-time SUPG term
//! keeps the scheme robust when advection dominates.
//!
//! Typical flow:
//!
//! 1. build a [`mesh::PolyMesh`] (generator or JSON file),
//! 2. wrap it in an [`assembly::Discretization`] of degree `k`,
//! 3. call [`assembly::solve`] with [`assembly::ProblemData`] and
//!    [`assembly::SupgParams`],
//! 4. measure with [`analysis::error_metrics`] / [`analysis::energy_norm`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cases;
pub mod error;
pub mod mesh;
pub mod quadrature;
pub mod time_slab;
pub mod vem;

pub use analysis::{energy_norm, error_metrics, rates, EnergyNorm, ErrorReport, ExactSolution, Metric, Order, RateTable};
pub use assembly::{
    assemble_slab, compute_lambda, solve, Discretization, DofMap, GlobalSolution, ProblemData, ResolvedSupg,
    SlabSystem, SolverKind, StabMode, SupgParams,
};
pub use basis::MonomialBasis;
pub use error::{Error, Result};
pub use mesh::{BBox, MeshQualityReport, PolyMesh};
pub use quadrature::QuadratureRule;
pub use time_slab::{TimeBasis, TimePartition};
pub use vem::{LocalDofLayout, VemElement};

/// A point in the plane.
pub type Point = [f64; 2];
