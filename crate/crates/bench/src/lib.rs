//! Fixtures shared by the criterion benchmarks in `benches/`.

use stdg_core::cases::{manufactured, Case, MANUFACTURED_T};
use stdg_core::mesh::{generate_cartesian, generate_voronoi, BBox};
use stdg_core::{Discretization, TimePartition};

/// Manufactured convection problem on an `nx` by `nx` grid or an `nx^2`-seed
/// Voronoi mesh, with `tau = h`.
pub fn fixture(nx: usize, k: usize, voronoi: bool) -> (Discretization, TimePartition, Case) {
    let mesh = if voronoi {
        generate_voronoi(nx * nx, BBox::unit(), 5, 1).expect("valid seeds")
    } else {
        generate_cartesian(nx, nx, BBox::unit()).expect("valid grid")
    };
    let n = ((MANUFACTURED_T / mesh.h()).round() as usize).max(1);
    let disc = Discretization::new(mesh, k).expect("valid mesh");
    let part = TimePartition::uniform(MANUFACTURED_T, n).expect("positive slabs");
    (disc, part, manufactured(1e-10))
}
