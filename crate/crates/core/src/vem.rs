//! Enhanced virtual element space of degree `k` on one polygon.
//!
//! Local DoFs are ordered: vertex values, then `k - 1` values per edge at the
//! interior Gauss-Lobatto nodes (edges in counterclockwise order, nodes along
//! the counterclockwise direction), then the scaled moments
//! `1/|K| \int_K v m_a` for `|a| <= k - 2`.
//!
//! All projector matrices map a local DoF vector to monomial coefficients in the
//! cell's [`MonomialBasis`]. Virtual functions are never evaluated pointwise in
//! the interior; everything downstream goes through these projections.

use nalgebra::DMatrix;

use crate::basis::{dim_poly, monomial_mass_matrix, MonomialBasis};
use crate::error::{Error, Result};
use crate::mesh::CellGeometry;
use crate::quadrature::{edge_quadrature, gauss_lobatto, polygon_quadrature, QuadratureRule};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDofLayout {
    pub n_vertices: usize,
    pub k: usize,
}

impl LocalDofLayout {
    pub fn new(n_vertices: usize, k: usize) -> Self {
        Self { n_vertices, k }
    }

    pub fn vertex_dofs(&self) -> usize {
        self.n_vertices
    }

    pub fn edge_dofs(&self) -> usize {
        self.n_vertices * (self.k - 1)
    }

    pub fn moment_dofs(&self) -> usize {
        dim_poly(self.k as isize - 2)
    }

    /// `N_K = n_v + n_v (k - 1) + k (k - 1) / 2`.
    pub fn total(&self) -> usize {
        self.vertex_dofs() + self.edge_dofs() + self.moment_dofs()
    }

    /// Number of DoFs living on the boundary (vertex and edge values).
    pub fn boundary_dofs(&self) -> usize {
        self.n_vertices * self.k
    }

    pub fn edge_node(&self, edge: usize, node: usize) -> usize {
        self.n_vertices + edge * (self.k - 1) + node
    }

    pub fn moment(&self, alpha: usize) -> usize {
        self.boundary_dofs() + alpha
    }

    /// Local DoFs on edge `e` ordered from its first to its second vertex.
    pub fn edge_trace(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k + 1);
        out.push(e);
        out.extend((0..self.k - 1).map(|m| self.edge_node(e, m)));
        out.push((e + 1) % self.n_vertices);
        out
    }
}

/// Multipliers of the dofi-dofi stabilizations: `s_m = mass |K| (I - P)^T (I - P)`
/// and `s_a = stiffness (I - P)^T (I - P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabScaling {
    pub mass: f64,
    pub stiffness: f64,
}

impl Default for StabScaling {
    fn default() -> Self {
        Self {
            mass: 1.0,
            stiffness: 1.0,
        }
    }
}

/// Gauss-Lobatto nodes on `[0, 1]` with `k + 1` points.
pub fn edge_nodes(k: usize) -> Vec<f64> {
    let (x, _) = gauss_lobatto(k + 1);
    x.iter().map(|xi| 0.5 * (xi + 1.0)).collect()
}

fn lagrange_values(nodes: &[f64], s: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|m| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != m)
                .map(|(_, &sj)| (s - sj) / (nodes[m] - sj))
                .product()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct VemElement {
    pub layout: LocalDofLayout,
    pub basis: MonomialBasis,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
    /// Positions of the vertex and edge-node DoFs, in local order.
    pub dof_points: Vec<Point>,
    /// `D[i][a] = dof_i(m_a)`.
    pub dof_of_monomial: DMatrix<f64>,
    /// Monomial mass matrix up to degree `k`.
    pub mass_monomial: DMatrix<f64>,
    pub pi_nabla: DMatrix<f64>,
    pub pi0: DMatrix<f64>,
    /// Components of the degree `k - 1` projection of the gradient.
    pub pi0_grad: [DMatrix<f64>; 2],
    /// Components of the degree `k` projection of the gradient.
    pub pi0k_grad: [DMatrix<f64>; 2],
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// `s_m` part of `mass`.
    pub stab_mass: DMatrix<f64>,
    /// `s_a` part of `stiffness`.
    pub stab_stiffness: DMatrix<f64>,
    /// Volume rule of exactness `2k + 2`.
    pub rule: QuadratureRule,
    /// `Pi0 phi_j` at the rule points, `(n_points x N_K)`.
    pub values: DMatrix<f64>,
    /// Components of `Pi0_{k-1} grad phi_j` at the rule points.
    pub grad: [DMatrix<f64>; 2],
    /// Components of `Pi0_k grad phi_j` at the rule points.
    pub grad_k: [DMatrix<f64>; 2],
    /// `div Pi0_{k-1} grad phi_j` at the rule points.
    pub div_grad: DMatrix<f64>,
}

impl VemElement {
    /// Builds every projector and local matrix of the degree-`k` element on the
    /// counterclockwise polygon `poly`. `cell` only labels errors.
    pub fn new(cell: usize, poly: &[Point], geo: &CellGeometry, k: usize, stab: StabScaling) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("VEM degree k must be >= 1".into()));
        }
        let nv = poly.len();
        let layout = LocalDofLayout::new(nv, k);
        let ndof = layout.total();
        let nk = dim_poly(k as isize);
        let nk1 = dim_poly(k as isize - 1);
        let nk2 = dim_poly(k as isize - 2);
        let area = geo.area;
        let basis = MonomialBasis::new(geo.centroid, geo.diameter, k);
        let rule = polygon_quadrature(poly, geo.centroid, 2 * k + 2)?;
        let h = monomial_mass_matrix(&basis, &rule);
        let h_chol = h.clone().cholesky().ok_or(Error::SingularElement {
            cell,
            what: "monomial mass matrix",
        })?;
        let h1 = h.view((0, 0), (nk1, nk1)).into_owned();
        let h1_chol = h1.clone().cholesky().ok_or(Error::SingularElement {
            cell,
            what: "degree k-1 mass matrix",
        })?;

        // DoF positions and D
        let nodes = edge_nodes(k);
        let mut dof_points = Vec::with_capacity(layout.boundary_dofs());
        dof_points.extend_from_slice(poly);
        for e in 0..nv {
            let a = poly[e];
            let b = poly[(e + 1) % nv];
            for &s in &nodes[1..k] {
                dof_points.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        let mut d = DMatrix::zeros(ndof, nk);
        for (i, &p) in dof_points.iter().enumerate() {
            let v = basis.eval(p);
            for a in 0..nk {
                d[(i, a)] = v[a];
            }
        }
        for g in 0..nk2 {
            for a in 0..nk {
                d[(layout.moment(g), a)] = h[(g, a)] / area;
            }
        }

        // boundary integrals against the piecewise polynomial trace
        let perimeter: f64 = (0..nv)
            .map(|e| {
                let a = poly[e];
                let b = poly[(e + 1) % nv];
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum();
        let mut b_nabla = DMatrix::zeros(nk, ndof);
        let mut e_grad = [DMatrix::zeros(nk1, ndof), DMatrix::zeros(nk1, ndof)];
        let mut e_grad_k = [DMatrix::zeros(nk, ndof), DMatrix::zeros(nk, ndof)];
        for e in 0..nv {
            let a = poly[e];
            let b = poly[(e + 1) % nv];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            let trace = layout.edge_trace(e);
            let (pts, wts, params) = edge_quadrature(a, b, 2 * k + 1);
            for q in 0..pts.len() {
                let lag = lagrange_values(&nodes, params[q]);
                let m = basis.eval(pts[q]);
                let gm = basis.eval_grad(pts[q]);
                for (node, &dof) in trace.iter().enumerate() {
                    let wl = wts[q] * lag[node];
                    b_nabla[(0, dof)] += wl / perimeter;
                    for al in 1..nk {
                        b_nabla[(al, dof)] += wl * (gm[al][0] * normal[0] + gm[al][1] * normal[1]);
                    }
                    for dir in 0..2 {
                        for be in 0..nk {
                            let contrib = wl * m[be] * normal[dir];
                            e_grad_k[dir][(be, dof)] += contrib;
                            if be < nk1 {
                                e_grad[dir][(be, dof)] += contrib;
                            }
                        }
                    }
                }
            }
        }

        // -\int_K lap(m_a) v from the moments
        let lap = basis.laplacian_matrix(k);
        for al in 1..nk {
            for g in 0..nk2 {
                b_nabla[(al, layout.moment(g))] -= lap[(g, al)] * area;
            }
        }
        let g_mat = &b_nabla * &d;
        let pi_nabla = g_mat.lu().solve(&b_nabla).ok_or(Error::SingularElement {
            cell,
            what: "H1 projection system",
        })?;

        // enhanced L2 projection
        let mut c = DMatrix::zeros(nk, ndof);
        for g in 0..nk2 {
            c[(g, layout.moment(g))] = area;
        }
        let h_pin = &h * &pi_nabla;
        for al in nk2..nk {
            c.row_mut(al).copy_from(&h_pin.row(al));
        }
        let pi0 = h_chol.solve(&c);

        // gradients by integration by parts
        let h_pi0 = &h * &pi0;
        let mut pi0_grad = [DMatrix::zeros(nk1, ndof), DMatrix::zeros(nk1, ndof)];
        let mut pi0k_grad = [DMatrix::zeros(nk, ndof), DMatrix::zeros(nk, ndof)];
        for dir in 0..2 {
            let dk1 = basis.derivative_matrix(k - 1, dir);
            for be in 0..nk1 {
                for g in 0..nk2 {
                    e_grad[dir][(be, layout.moment(g))] -= dk1[(g, be)] * area;
                }
            }
            pi0_grad[dir] = h1_chol.solve(&e_grad[dir]);
            let dk = basis.derivative_matrix(k, dir);
            let interior = dk.transpose() * h_pi0.rows(0, nk1);
            e_grad_k[dir] -= interior;
            pi0k_grad[dir] = h_chol.solve(&e_grad_k[dir]);
        }

        let eye = DMatrix::<f64>::identity(ndof, ndof);
        let res0 = &eye - &d * &pi0;
        let resn = &eye - &d * &pi_nabla;
        let stab_mass = (res0.transpose() * &res0) * (stab.mass * area);
        let stab_stiffness = (resn.transpose() * &resn) * stab.stiffness;
        let mut mass = pi0.transpose() * &h * &pi0 + &stab_mass;
        let mut stiffness = &stab_stiffness
            + pi0_grad[0].transpose() * &h1 * &pi0_grad[0]
            + pi0_grad[1].transpose() * &h1 * &pi0_grad[1];
        for (name, m) in [("mass", &mut mass), ("stiffness", &mut stiffness)] {
            let asym = (&*m - m.transpose()).amax();
            if asym > 1e-12 * m.amax().max(1e-300) || !asym.is_finite() {
                return Err(Error::NonFinite(format!(
                    "cell {cell}: local {name} matrix asymmetric by {asym:e}"
                )));
            }
            *m = (&*m + m.transpose()) * 0.5;
        }

        let mq = basis.value_matrix(&rule.points, k);
        let values = &mq * &pi0;
        let mq1 = mq.columns(0, nk1);
        let grad = [mq1 * &pi0_grad[0], mq1 * &pi0_grad[1]];
        let grad_k = [&mq * &pi0k_grad[0], &mq * &pi0k_grad[1]];
        let div_coef = basis.derivative_matrix(k - 1, 0) * &pi0_grad[0]
            + basis.derivative_matrix(k - 1, 1) * &pi0_grad[1];
        let div_grad = mq.columns(0, nk2) * div_coef;

        Ok(Self {
            layout,
            basis,
            area,
            centroid: geo.centroid,
            diameter: geo.diameter,
            dof_points,
            dof_of_monomial: d,
            mass_monomial: h,
            pi_nabla,
            pi0,
            pi0_grad,
            pi0k_grad,
            mass,
            stiffness,
            stab_mass,
            stab_stiffness,
            rule,
            values,
            grad,
            grad_k,
            div_grad,
        })
    }

    pub fn k(&self) -> usize {
        self.layout.k
    }

    pub fn ndof(&self) -> usize {
        self.layout.total()
    }

    /// Coefficients of `div Pi0_{k-1} grad v` in the degree `k - 2` monomials.
    pub fn div_grad_coefficients(&self) -> DMatrix<f64> {
        let k = self.k();
        self.basis.derivative_matrix(k - 1, 0) * &self.pi0_grad[0]
            + self.basis.derivative_matrix(k - 1, 1) * &self.pi0_grad[1]
    }

    /// Local DoFs of a smooth function: point values on the boundary and
    /// scaled moments computed with `rule`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64, rule: &QuadratureRule) -> Vec<f64> {
        let mut out: Vec<f64> = self.dof_points.iter().map(|&p| f(p)).collect();
        let nk2 = self.layout.moment_dofs();
        let mut moments = vec![0.0; nk2];
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let fv = w * f(p);
            let m = self.basis.eval(p);
            for g in 0..nk2 {
                moments[g] += fv * m[g];
            }
        }
        out.extend(moments.iter().map(|m| m / self.area));
        out
    }

    /// `beta . Pi0_{k-1} grad phi_j` at the rule points for velocity samples `beta`.
    pub fn advective_values(&self, beta: &[[f64; 2]]) -> DMatrix<f64> {
        advect(&self.grad, beta)
    }

    /// `beta . Pi0_k grad phi_j` at the rule points.
    pub fn advective_values_k(&self, beta: &[[f64; 2]]) -> DMatrix<f64> {
        advect(&self.grad_k, beta)
    }
}

fn advect(grad: &[DMatrix<f64>; 2], beta: &[[f64; 2]]) -> DMatrix<f64> {
    let (np, nd) = grad[0].shape();
    assert_eq!(beta.len(), np, "one velocity sample per quadrature point");
    DMatrix::from_fn(np, nd, |p, j| beta[p][0] * grad[0][(p, j)] + beta[p][1] * grad[1][(p, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::polygon_geometry;

    fn unit_square() -> Vec<Point> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    fn element(poly: &[Point], k: usize) -> VemElement {
        let geo = polygon_geometry(poly).unwrap();
        VemElement::new(0, poly, &geo, k, StabScaling::default()).unwrap()
    }

    #[test]
    fn layout_counts() {
        let l = LocalDofLayout::new(5, 3);
        assert_eq!(l.total(), 5 + 10 + 3);
        assert_eq!(l.edge_trace(4), vec![4, 5 + 8, 5 + 9, 0]);
        assert_eq!(LocalDofLayout::new(4, 1).total(), 4);
    }

    #[test]
    fn edge_nodes_are_lobatto() {
        let n = edge_nodes(2);
        assert_eq!(n, vec![0.0, 0.5, 1.0]);
        let n = edge_nodes(3);
        assert!((n[1] - 0.5 * (1.0 - 1.0 / 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn constants_are_reproduced() {
        for k in 1..=3 {
            let el = element(&unit_square(), k);
            let ones = DMatrix::from_element(el.ndof(), 1, 1.0);
            // the DoF vector of v = 1 has unit moments only against m_0
            let mut dofs = ones.clone();
            for g in 0..el.layout.moment_dofs() {
                dofs[el.layout.moment(g)] = el.mass_monomial[(g, 0)] / el.area;
            }
            let pn = &el.pi_nabla * &dofs;
            let p0 = &el.pi0 * &dofs;
            assert!((pn[0] - 1.0).abs() < 1e-13 && pn.rows(1, pn.nrows() - 1).amax() < 1e-13);
            assert!((p0[0] - 1.0).abs() < 1e-13 && p0.rows(1, p0.nrows() - 1).amax() < 1e-13);
            assert!((&el.pi0_grad[0] * &dofs).amax() < 1e-12);
            let row_sums = &el.stiffness * &dofs;
            assert!(row_sums.amax() < 1e-11, "k={k}");
            let m1 = (dofs.transpose() * &el.mass * &dofs)[0];
            assert!((m1 - el.area).abs() < 1e-11);
        }
    }

    #[test]
    fn hat_function_gradient_matches_boundary_integral() {
        // k = 1: grad Pi_nabla phi_0 = 1/|K| \oint phi_0 n ds
        let el = element(&unit_square(), 1);
        let mut e0 = DMatrix::zeros(4, 1);
        e0[0] = 1.0;
        let c = &el.pi_nabla * &e0;
        let grad = [c[1] / el.diameter, c[2] / el.diameter];
        // phi_0 is the hat of (0,0): edge (0,0)-(1,0) with n = (0,-1) and
        // edge (0,1)-(0,0) with n = (-1,0), each contributing 1/2
        assert!((grad[0] + 0.5).abs() < 1e-13 && (grad[1] + 0.5).abs() < 1e-13);
    }

    #[test]
    fn gradient_of_linear_monomial() {
        let el = element(&unit_square(), 2);
        let dofs = el.dof_of_monomial.column(1).into_owned();
        let gx = &el.pi0_grad[0] * &dofs;
        let gy = &el.pi0_grad[1] * &dofs;
        assert!((gx[0] - 1.0 / el.diameter).abs() < 1e-13);
        assert!(gx.rows(1, gx.nrows() - 1).amax() < 1e-13 && gy.amax() < 1e-13);
    }
}
