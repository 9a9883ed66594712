//! Error norms, the space-time energy norm and observed convergence orders.
//!
//! Discrete functions are only ever seen through their projections: `Pi0` for
//! values, `Pi0_{k-1} grad` for gradients in the energy norm, and the gradient of
//! `Pi_nabla` for the final-time H1 error.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::assembly::{Discretization, GlobalSolution, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::quadrature::polygon_quadrature;
use crate::time_slab::TimeBasis;
use crate::Point;

/// Errors below this are reported as exact when computing orders.
pub const EXACT_FLOOR: f64 = 1e-11;

pub type GradientField = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub grad: GradientField,
}

impl ExactSolution {
    pub fn new(
        u: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            u: Arc::new(u),
            grad: Arc::new(grad),
        }
    }
}

/// Squared components of the energy norm and their root-sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct EnergyNorm {
    pub l2: f64,
    pub jump: f64,
    pub grad: f64,
    pub supg: f64,
    /// Part of `supg` coming from the `s_a` residual surrogate.
    pub supg_residual: f64,
}

impl EnergyNorm {
    pub fn total(&self) -> f64 {
        (self.l2 + self.jump + self.grad + self.supg).sqrt()
    }
}

fn local_slab(disc: &Discretization, cell: usize, coeffs: &[Vec<f64>]) -> Vec<DVector<f64>> {
    coeffs.iter().map(|c| disc.local(cell, c)).collect()
}

fn combine(w: &[DVector<f64>], psi: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(w[0].len());
    for (a, wa) in w.iter().enumerate() {
        out.axpy(psi[a], wa, 1.0);
    }
    out
}

/// `|Pi0 w|^2` over the mesh for a global DoF vector.
fn l2_sq(disc: &Discretization, global: &[f64]) -> f64 {
    (0..disc.mesh.num_cells())
        .map(|c| {
            let el = &disc.elements[c];
            let p = &el.pi0 * disc.local(c, global);
            (p.transpose() * &el.mass_monomial * &p)[0]
        })
        .sum()
}

/// Energy norm of `w` with `nu`, `lambda_Kn` and `beta_Kn` taken from `w`.
pub fn energy_norm(disc: &Discretization, w: &GlobalSolution, beta: &VectorField) -> EnergyNorm {
    let nslab = w.num_slabs();
    let per_cell: Vec<EnergyNorm> = (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let el = &disc.elements[c];
            let nk1 = el.pi0_grad[0].nrows();
            let h1 = el.mass_monomial.view((0, 0), (nk1, nk1));
            let pm = el.pi0.transpose() * &el.mass_monomial * &el.pi0;
            let gm = el.pi0_grad[0].transpose() * h1 * &el.pi0_grad[0]
                + el.pi0_grad[1].transpose() * h1 * &el.pi0_grad[1];
            let mut acc = EnergyNorm::default();
            for n in 0..nslab {
                let basis = &w.bases[n];
                let wl = local_slab(disc, c, &w.coeffs[n]);
                let lambda = w.lambda[n][c];
                let bk = w.beta_k[n][c];
                let pw: Vec<DVector<f64>> = wl.iter().map(|x| &pm * x).collect();
                let gw: Vec<DVector<f64>> = wl.iter().map(|x| &gm * x).collect();
                for a in 0..basis.len() {
                    for b in 0..basis.len() {
                        let mt = basis.mass[(a, b)];
                        acc.l2 += mt * wl[a].dot(&pw[b]);
                        acc.grad += mt * w.nu * wl[a].dot(&gw[b]);
                    }
                }
                if lambda == 0.0 {
                    continue;
                }
                let (tq, wq) = basis.quadrature(2 * basis.degree + 6);
                for (q, &t) in tq.iter().enumerate() {
                    let psi = basis.eval(t);
                    let u = combine(&wl, &psi);
                    let dpsi = basis.eval_deriv(t);
                    let du = combine(&wl, &dpsi);
                    let vals = &el.values * &du;
                    let gx = &el.grad[0] * &u;
                    let gy = &el.grad[1] * &u;
                    let mut s = 0.0;
                    for (p, &pt) in el.rule.points.iter().enumerate() {
                        let b = beta(pt, t);
                        let lt = vals[p] + b[0] * gx[p] + b[1] * gy[p];
                        s += el.rule.weights[p] * lt * lt;
                    }
                    let res = lambda * bk * bk * (u.transpose() * &el.stab_stiffness * &u)[0];
                    acc.supg += wq[q] * (lambda * s + res);
                    acc.supg_residual += wq[q] * res;
                }
            }
            acc
        })
        .collect();
    let mut out = EnergyNorm::default();
    for e in per_cell {
        out.l2 += e.l2;
        out.grad += e.grad;
        out.supg += e.supg;
        out.supg_residual += e.supg_residual;
    }
    // jump functional: 1/2 (|w(T^-)|^2 + sum |[w]_n|^2 + |w(0^+)|^2)
    let start = w.at(0, w.bases[0].t0);
    let mut jump = l2_sq(disc, &start) + l2_sq(disc, &w.final_trace());
    for n in 1..nslab {
        let minus = w.end_trace(n - 1);
        let plus = w.at(n, w.bases[n].t0);
        let diff: Vec<f64> = minus.iter().zip(&plus).map(|(a, b)| a - b).collect();
        jump += l2_sq(disc, &diff);
    }
    out.jump = 0.5 * jump;
    out
}

/// DoF interpolant at the time nodes of every slab.
pub fn dof_interpolant(
    disc: &Discretization,
    bases: &[TimeBasis],
    u: impl Fn(Point, f64) -> f64 + Sync,
) -> Vec<Vec<Vec<f64>>> {
    bases
        .iter()
        .map(|b| b.nodes.iter().map(|&t| disc.interpolate(|p| u(p, t))).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorReport {
    pub h: f64,
    pub tau: f64,
    pub n_dofs: usize,
    pub e_h1_t: f64,
    pub e_l2_t: f64,
    pub e_h1_qt: f64,
    pub e_energy_interp: f64,
    pub wall_time: f64,
}

impl ErrorReport {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::H1T => self.e_h1_t,
            Metric::L2T => self.e_l2_t,
            Metric::H1QT => self.e_h1_qt,
            Metric::Energy => self.e_energy_interp,
        }
    }
}

/// Errors of `sol` against `exact`. `wall_time` is left at zero.
pub fn error_metrics(
    disc: &Discretization,
    sol: &GlobalSolution,
    exact: &ExactSolution,
    beta: &VectorField,
) -> ErrorReport {
    let k = disc.k;
    let t_final = sol.partition.t_final();
    let final_trace = sol.final_trace();
    let parts: Vec<[f64; 3]> = (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let el = &disc.elements[c];
            let poly = disc.mesh.cell_vertices(c);
            let rule = polygon_quadrature(&poly, el.centroid, 2 * k + 6).expect("valid cell");
            let mut acc = [0.0; 3];
            let nk1 = el.pi0_grad[0].nrows();
            let mq = el.basis.value_matrix(&rule.points, k);
            let mq1 = mq.columns(0, nk1);
            let val = &mq * &el.pi0;
            let gx = mq1 * el.basis.derivative_matrix(k, 0) * &el.pi_nabla;
            let gy = mq1 * el.basis.derivative_matrix(k, 1) * &el.pi_nabla;
            let eval = |dofs: &DVector<f64>, t: f64| -> (f64, f64) {
                let v = &val * dofs;
                let ghx = &gx * dofs;
                let ghy = &gy * dofs;
                let mut l2 = 0.0;
                let mut h1 = 0.0;
                for (q, (&x, &wx)) in rule.points.iter().zip(&rule.weights).enumerate() {
                    let e = (exact.u)(x, t) - v[q];
                    let g = (exact.grad)(x, t);
                    l2 += wx * e * e;
                    h1 += wx * ((g[0] - ghx[q]).powi(2) + (g[1] - ghy[q]).powi(2));
                }
                (l2, h1)
            };
            let (l2t, h1t) = eval(&disc.local(c, &final_trace), t_final);
            acc[0] = h1t;
            acc[1] = l2t;
            for n in 0..sol.num_slabs() {
                let basis = &sol.bases[n];
                let wl = local_slab(disc, c, &sol.coeffs[n]);
                let (tq, wq) = basis.quadrature(2 * basis.degree + 6);
                for (q, &t) in tq.iter().enumerate() {
                    let (l2, h1) = eval(&combine(&wl, &basis.eval(t)), t);
                    acc[2] += wq[q] * (l2 + h1);
                }
            }
            acc
        })
        .collect();
    let mut sums = [0.0; 3];
    for p in parts {
        for i in 0..3 {
            sums[i] += p[i];
        }
    }
    let interp = sol.with_coeffs(dof_interpolant(disc, &sol.bases, |p, t| (exact.u)(p, t)));
    let diff = sol.with_coeffs(
        sol.coeffs
            .iter()
            .zip(&interp.coeffs)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
                    .collect()
            })
            .collect(),
    );
    ErrorReport {
        h: disc.mesh.h(),
        tau: sol.partition.tau(),
        n_dofs: disc.n_dofs(),
        e_h1_t: sums[0].sqrt(),
        e_l2_t: sums[1].sqrt(),
        e_h1_qt: sums[2].sqrt(),
        e_energy_interp: energy_norm(disc, &diff, beta).total(),
        wall_time: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Metric {
    H1T,
    L2T,
    H1QT,
    Energy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::H1T, Metric::L2T, Metric::H1QT, Metric::Energy];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Observed(f64),
    /// Both errors are below [`EXACT_FLOOR`].
    Exact,
    /// First row, or an error vanished on one level only.
    NotAvailable,
}

impl Order {
    pub fn value(&self) -> Option<f64> {
        match self {
            Order::Observed(p) => Some(*p),
            _ => None,
        }
    }

    /// True when the order is exact or at least `p`.
    pub fn at_least(&self, p: f64) -> bool {
        match self {
            Order::Observed(q) => *q >= p,
            Order::Exact => true,
            Order::NotAvailable => false,
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Observed(p) => write!(f, "{p:.4}"),
            Order::Exact => f.write_str("exact"),
            Order::NotAvailable => Ok(()),
        }
    }
}

/// `p = log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn observed_order(h0: f64, e0: f64, h1: f64, e1: f64) -> Order {
    if e0 < EXACT_FLOOR && e1 < EXACT_FLOOR {
        Order::Exact
    } else if e0 <= 0.0 || e1 <= 0.0 {
        Order::NotAvailable
    } else {
        Order::Observed((e0 / e1).ln() / (h0 / h1).ln())
    }
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub rows: Vec<ErrorReport>,
    /// `orders[i]` compares rows `i - 1` and `i`; `orders[0]` is unavailable.
    pub orders: Vec<[Order; 4]>,
}

impl RateTable {
    pub fn order(&self, row: usize, m: Metric) -> Order {
        let i = Metric::ALL.iter().position(|x| *x == m).unwrap();
        self.orders[row][i]
    }

    /// Order between the two finest levels.
    pub fn last(&self, m: Metric) -> Order {
        self.order(self.rows.len() - 1, m)
    }
}

/// Observed orders between consecutive reports, which must have strictly
/// decreasing `h`.
pub fn rates(reports: &[ErrorReport]) -> Result<RateTable> {
    if reports.len() < 2 {
        return Err(Error::InvalidParameter("rates need at least two levels".into()));
    }
    if let Some(w) = reports.windows(2).find(|w| !(w[1].h < w[0].h)) {
        return Err(Error::InvalidParameter(format!(
            "mesh sizes must decrease: h = {} then {}",
            w[0].h, w[1].h
        )));
    }
    let mut orders = vec![[Order::NotAvailable; 4]];
    for w in reports.windows(2) {
        orders.push(Metric::ALL.map(|m| observed_order(w[0].h, w[0].metric(m), w[1].h, w[1].metric(m))));
    }
    Ok(RateTable {
        rows: reports.to_vec(),
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(h: f64, e: f64) -> ErrorReport {
        ErrorReport {
            h,
            tau: h,
            n_dofs: 0,
            e_h1_t: e,
            e_l2_t: e,
            e_h1_qt: e,
            e_energy_interp: e,
            wall_time: 0.0,
        }
    }

    #[test]
    fn order_from_log_ratio() {
        let t = rates(&[report(0.2, 1.0), report(0.1, 0.25)]).unwrap();
        assert!((t.last(Metric::L2T).value().unwrap() - 2.0).abs() < 1e-14);
        let t = rates(&[report(0.2, 3.0), report(0.1, 3.0)]).unwrap();
        assert_eq!(t.last(Metric::H1T), Order::Observed(0.0));
        let t = rates(&[report(0.2, 1e-13), report(0.1, 2e-13)]).unwrap();
        assert_eq!(t.last(Metric::Energy), Order::Exact);
        assert_eq!(t.order(0, Metric::Energy), Order::NotAvailable);
    }

    #[test]
    fn non_monotone_h_rejected() {
        assert!(rates(&[report(0.1, 1.0), report(0.2, 0.5)]).is_err());
        assert!(rates(&[report(0.1, 1.0)]).is_err());
    }
}
