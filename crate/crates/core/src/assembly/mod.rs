//! Global DoF numbering, problem data, and the slab-by-slab space-time solver.

mod slab;
mod solver;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::quadrature::polygon_quadrature;
use crate::time_slab::TimePartition;
use crate::vem::{StabScaling, VemElement};
use crate::Point;

pub use slab::{advection_matrix, assemble_slab, SlabSystem};
pub use solver::{solve, GlobalSolution, SlabDiagnostics, SolverKind};

pub type ScalarField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type InitialField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Data of `u_t - nu lap u + beta . grad u = f` on `Omega x (0, T)`.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: f64,
    /// Must be divergence free.
    pub beta: VectorField,
    pub f: ScalarField,
    pub u0: InitialField,
    /// Boundary values; homogeneous when `None`.
    pub dirichlet: Option<ScalarField>,
    pub t_final: f64,
}

impl ProblemData {
    /// Zero data with the given diffusion and final time.
    pub fn new(nu: f64, t_final: f64) -> Self {
        Self {
            nu,
            beta: Arc::new(|_, _| [0.0, 0.0]),
            f: Arc::new(|_, _| 0.0),
            u0: Arc::new(|_| 0.0),
            dirichlet: None,
            t_final,
        }
    }

    pub fn with_beta(mut self, beta: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.beta = Arc::new(beta);
        self
    }

    pub fn with_source(mut self, f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_initial(mut self, u0: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.u0 = Arc::new(u0);
        self
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dirichlet = Some(Arc::new(g));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be finite and >= 0, got {}", self.nu)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.t_final)));
        }
        Ok(())
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("t_final", &self.t_final)
            .field("dirichlet", &self.dirichlet.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabMode {
    #[default]
    Supg,
    /// No streamline term: `lambda_Kn = 0`. The VEM stabilizations stay.
    None,
}

/// SUPG parameters. `None` fields take their defaults when resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupgParams {
    pub zeta: f64,
    /// Inverse-inequality constant, `10 k^2` by default.
    pub c_inv: Option<f64>,
    /// Safeguard in `beta_Kn`, `1e-8 * bar_beta` by default.
    pub beta_eps: Option<f64>,
    /// Estimate of `max |beta|` over the space-time cylinder; sampled when `None`.
    pub bar_beta: Option<f64>,
    pub mode: StabMode,
    /// Adds `lambda_Kn s_m(u_t, v_t)`.
    pub extra_time_stab: bool,
    /// Warn when `tau > c_star sqrt(h_min)`.
    pub c_star_check: f64,
}

impl Default for SupgParams {
    fn default() -> Self {
        Self {
            zeta: 0.1,
            c_inv: None,
            beta_eps: None,
            bar_beta: None,
            mode: StabMode::Supg,
            extra_time_stab: false,
            c_star_check: 1.0,
        }
    }
}

impl SupgParams {
    pub fn none() -> Self {
        Self {
            mode: StabMode::None,
            ..Self::default()
        }
    }

    /// Fills defaults. `bar_beta` is sampled on every element rule at the
    /// Gauss points of every slab, times 1.05.
    pub fn resolve(
        &self,
        disc: &Discretization,
        partition: &TimePartition,
        problem: &ProblemData,
    ) -> Result<ResolvedSupg> {
        if !(self.zeta > 0.0) {
            return Err(Error::InvalidParameter(format!("zeta must be > 0, got {}", self.zeta)));
        }
        let k = disc.k as f64;
        let c_inv = self.c_inv.unwrap_or(10.0 * k * k);
        if !(c_inv > 0.0) {
            return Err(Error::InvalidParameter(format!("c_inv must be > 0, got {c_inv}")));
        }
        let bar_beta = match self.bar_beta {
            Some(b) if b > 0.0 => b,
            Some(b) => return Err(Error::InvalidParameter(format!("bar_beta must be > 0, got {b}"))),
            None => {
                let sampled = sample_max_beta(disc, partition, problem);
                if sampled > 0.0 {
                    1.05 * sampled
                } else {
                    1.0
                }
            }
        };
        let beta_eps = self.beta_eps.unwrap_or(1e-8 * bar_beta);
        if !(beta_eps > 0.0) {
            return Err(Error::InvalidParameter(format!("beta_eps must be > 0, got {beta_eps}")));
        }
        Ok(ResolvedSupg {
            zeta: self.zeta,
            c_inv,
            beta_eps,
            bar_beta,
            mode: self.mode,
            extra_time_stab: self.extra_time_stab,
            c_star_check: self.c_star_check,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolvedSupg {
    pub zeta: f64,
    pub c_inv: f64,
    pub beta_eps: f64,
    pub bar_beta: f64,
    pub mode: StabMode,
    pub extra_time_stab: bool,
    pub c_star_check: f64,
}

impl ResolvedSupg {
    /// `lambda_Kn`, zero in [`StabMode::None`].
    pub fn lambda(&self, h_k: f64, nu: f64) -> Result<f64> {
        match self.mode {
            StabMode::None => Ok(0.0),
            StabMode::Supg => compute_lambda(h_k, nu, self.zeta, self.c_inv, self.bar_beta),
        }
    }
}

/// `zeta * min(h_K^2 / (nu c_inv^2), h_K / bar_beta)`; a zero `nu` or `bar_beta`
/// drops the corresponding branch.
pub fn compute_lambda(h_k: f64, nu: f64, zeta: f64, c_inv: f64, bar_beta: f64) -> Result<f64> {
    let diff = if nu > 0.0 { h_k * h_k / (nu * c_inv * c_inv) } else { f64::INFINITY };
    let adv = if bar_beta > 0.0 { h_k / bar_beta } else { f64::INFINITY };
    let lambda = zeta * diff.min(adv);
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::NonFinite(format!(
            "lambda for h_K = {h_k}, nu = {nu}, bar_beta = {bar_beta}"
        )));
    }
    Ok(lambda)
}

fn sample_max_beta(disc: &Discretization, partition: &TimePartition, problem: &ProblemData) -> f64 {
    let mut times = Vec::new();
    for n in 0..partition.num_slabs() {
        let (t0, t1) = partition.interval(n);
        let basis = crate::time_slab::TimeBasis::new(t0, t1, 0).expect("non-empty slab");
        times.extend(basis.quadrature(6).0);
        times.push(t0);
        times.push(t1);
    }
    disc.elements
        .par_iter()
        .map(|el| {
            let mut m: f64 = 0.0;
            for &t in &times {
                for &p in &el.rule.points {
                    let b = (problem.beta)(p, t);
                    m = m.max(b[0].hypot(b[1]));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Global numbering: vertices, then `k - 1` nodes per edge, then
/// `dim P_{k-2}` moments per cell.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_cells: usize,
    cell_dofs: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    free: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    positions: Vec<Option<Point>>,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, k: usize) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let nc = mesh.num_cells();
        let per_edge = k - 1;
        let per_cell = crate::basis::dim_poly(k as isize - 2);
        let n_total = nv + ne * per_edge + nc * per_cell;
        let nodes = crate::vem::edge_nodes(k);
        let mut positions = vec![None; n_total];
        let mut boundary = vec![false; n_total];
        for v in 0..nv {
            positions[v] = Some(mesh.vertices()[v]);
            boundary[v] = mesh.is_boundary_vertex(v);
        }
        for (e, edge) in mesh.edges().iter().enumerate() {
            let a = mesh.vertices()[edge.vertices[0]];
            let b = mesh.vertices()[edge.vertices[1]];
            for m in 0..per_edge {
                let s = nodes[m + 1];
                let g = nv + e * per_edge + m;
                positions[g] = Some([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                boundary[g] = edge.is_boundary();
            }
        }
        let mut cell_dofs = Vec::with_capacity(nc);
        for c in 0..nc {
            let verts = &mesh.cells()[c];
            let n = verts.len();
            let mut dofs = verts.clone();
            for (e, &ge) in mesh.cell_edges(c).iter().enumerate() {
                let forward = mesh.edges()[ge].vertices[0] == verts[e];
                debug_assert!(forward || mesh.edges()[ge].vertices[0] == verts[(e + 1) % n]);
                for m in 0..per_edge {
                    let mm = if forward { m } else { per_edge - 1 - m };
                    dofs.push(nv + ge * per_edge + mm);
                }
            }
            dofs.extend((0..per_cell).map(|a| nv + ne * per_edge + c * per_cell + a));
            cell_dofs.push(dofs);
        }
        let mut free = vec![None; n_total];
        let mut free_dofs = Vec::new();
        for g in 0..n_total {
            if !boundary[g] {
                free[g] = Some(free_dofs.len());
                free_dofs.push(g);
            }
        }
        Self {
            k,
            n_vertices: nv,
            n_edges: ne,
            n_cells: nc,
            cell_dofs,
            boundary,
            free,
            free_dofs,
            positions,
        }
    }

    pub fn n_total(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Global DoFs of a cell in local order.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Position of a vertex or edge-node DoF; `None` for moments.
    pub fn position(&self, dof: usize) -> Option<Point> {
        self.positions[dof]
    }
}

/// A mesh with its degree-`k` elements and DoF numbering.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: PolyMesh,
    pub k: usize,
    pub elements: Vec<VemElement>,
    pub dofs: DofMap,
}

impl Discretization {
    pub fn new(mesh: PolyMesh, k: usize) -> Result<Self> {
        Self::with_scaling(mesh, k, StabScaling::default())
    }

    pub fn with_scaling(mesh: PolyMesh, k: usize, scaling: StabScaling) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("VEM degree k must be >= 1".into()));
        }
        let elements = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| VemElement::new(c, &mesh.cell_vertices(c), mesh.geometry(c), k, scaling))
            .collect::<Result<Vec<_>>>()?;
        let dofs = DofMap::new(&mesh, k);
        Ok(Self {
            mesh,
            k,
            elements,
            dofs,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_total()
    }

    /// Global DoF vector of a smooth function: point values at vertices and
    /// edge nodes, moments by a degree `2k + 6` rule.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (g, slot) in out.iter_mut().enumerate() {
            if let Some(p) = self.dofs.position(g) {
                *slot = f(p);
            }
        }
        if self.dofs.n_total() == self.dofs.n_vertices + self.dofs.n_edges * (self.k - 1) {
            return out;
        }
        let moments: Vec<Vec<f64>> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let el = &self.elements[c];
                let poly = self.mesh.cell_vertices(c);
                let rule = polygon_quadrature(&poly, el.centroid, 2 * self.k + 6).expect("valid cell");
                let local = el.interpolate(&f, &rule);
                local[el.layout.boundary_dofs()..].to_vec()
            })
            .collect();
        for (c, m) in moments.into_iter().enumerate() {
            let dofs = &self.dofs.cell_dofs(c)[self.elements[c].layout.boundary_dofs()..];
            for (&g, v) in dofs.iter().zip(m) {
                out[g] = v;
            }
        }
        out
    }

    /// Gathers the local DoF vector of `cell` from a global vector.
    pub fn local(&self, cell: usize, global: &[f64]) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.dofs.cell_dofs(cell).len(),
            self.dofs.cell_dofs(cell).iter().map(|&g| global[g]),
        )
    }
}
