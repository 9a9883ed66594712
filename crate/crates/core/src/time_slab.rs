//! Time partition and per-slab Lagrange bases for the upwind DG-in-time scheme.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_lobatto};

/// `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

impl TimePartition {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("time partition needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("time partition must start at 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time nodes must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(t_final: f64, n: usize) -> Result<Self> {
        if n == 0 || !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "uniform partition needs T > 0 and N >= 1 (T = {t_final}, N = {n})"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| t_final * i as f64 / n as f64).collect();
        nodes[n] = t_final;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_slabs(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Slab `n` (0-based) is `(t_n, t_{n+1})`.
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.nodes[n], self.nodes[n + 1])
    }

    pub fn tau_n(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    /// Largest slab length.
    pub fn tau(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Lagrange basis of degree `r` on one slab, interpolatory at Gauss-Lobatto
/// nodes (the midpoint when `r = 0`).
#[derive(Debug, Clone)]
pub struct TimeBasis {
    pub degree: usize,
    pub t0: f64,
    pub t1: f64,
    pub nodes: Vec<f64>,
    /// `M_t[a][b] = \int psi_a psi_b`.
    pub mass: DMatrix<f64>,
    /// `K_t[a][b] = \int psi_a' psi_b`.
    pub deriv: DMatrix<f64>,
    /// `\int psi_a' psi_b'`.
    pub stiff: DMatrix<f64>,
    /// Values at `t_0^+`.
    pub e_left: DVector<f64>,
    /// Values at `t_1^-`.
    pub e_right: DVector<f64>,
}

impl TimeBasis {
    pub fn new(t0: f64, t1: f64, r: usize) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidParameter(format!("empty slab ({t0}, {t1})")));
        }
        let nodes: Vec<f64> = if r == 0 {
            vec![0.5 * (t0 + t1)]
        } else {
            let (x, _) = gauss_lobatto(r + 1);
            x.iter().map(|xi| t0 + 0.5 * (xi + 1.0) * (t1 - t0)).collect()
        };
        let mut basis = Self {
            degree: r,
            t0,
            t1,
            nodes,
            mass: DMatrix::zeros(r + 1, r + 1),
            deriv: DMatrix::zeros(r + 1, r + 1),
            stiff: DMatrix::zeros(r + 1, r + 1),
            e_left: DVector::zeros(r + 1),
            e_right: DVector::zeros(r + 1),
        };
        let (pts, wts) = basis.quadrature(2 * r + 2);
        for (&t, &w) in pts.iter().zip(&wts) {
            let v = basis.eval(t);
            let d = basis.eval_deriv(t);
            for a in 0..=r {
                for b in 0..=r {
                    basis.mass[(a, b)] += w * v[a] * v[b];
                    basis.deriv[(a, b)] += w * d[a] * v[b];
                    basis.stiff[(a, b)] += w * d[a] * d[b];
                }
            }
        }
        basis.e_left = DVector::from_vec(basis.eval(t0));
        basis.e_right = DVector::from_vec(basis.eval(t1));
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = &self.nodes;
        (0..n.len())
            .map(|a| {
                n.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != a)
                    .map(|(_, &tj)| (t - tj) / (n[a] - tj))
                    .product()
            })
            .collect()
    }

    pub fn eval_deriv(&self, t: f64) -> Vec<f64> {
        let n = &self.nodes;
        (0..n.len())
            .map(|a| {
                let mut s = 0.0;
                for j in (0..n.len()).filter(|&j| j != a) {
                    let mut p = 1.0 / (n[a] - n[j]);
                    for m in (0..n.len()).filter(|&m| m != a && m != j) {
                        p *= (t - n[m]) / (n[a] - n[m]);
                    }
                    s += p;
                }
                s
            })
            .collect()
    }

    /// Gauss-Legendre points and weights on the slab, exact to `degree`.
    pub fn quadrature(&self, degree: usize) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(degree / 2 + 1);
        let half = 0.5 * (self.t1 - self.t0);
        let pts = x.iter().map(|xi| self.t0 + half * (xi + 1.0)).collect();
        let wts = w.iter().map(|wi| wi * half).collect();
        (pts, wts)
    }

    /// Value of `sum_a c_a psi_a` at `t`.
    pub fn evaluate(&self, coeffs: &[f64], t: f64) -> f64 {
        self.eval(t).iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }
}

/// End values of the previous slab and start values of the next one; the jump
/// at the shared node is `e_prev . w_prev - e_next . w_next`.
pub fn time_jump_coupling(prev: &TimeBasis, next: &TimeBasis) -> (DVector<f64>, DVector<f64>) {
    (prev.e_right.clone(), next.e_left.clone())
}

/// `w(t_n^-) - w(t_n^+)` for coefficients on two adjacent slabs.
pub fn time_jump(prev: &TimeBasis, w_prev: &[f64], next: &TimeBasis, w_next: &[f64]) -> f64 {
    let (er, el) = time_jump_coupling(prev, next);
    let a: f64 = er.iter().zip(w_prev).map(|(e, w)| e * w).sum();
    let b: f64 = el.iter().zip(w_next).map(|(e, w)| e * w).sum();
    a - b
}

/// Coefficients of the L2 projection of `f` onto the slab's polynomials.
pub fn project_time(f: impl Fn(f64) -> f64, basis: &TimeBasis) -> Vec<f64> {
    let (pts, wts) = basis.quadrature(2 * basis.degree + 6);
    let mut load = DVector::zeros(basis.len());
    for (&t, &w) in pts.iter().zip(&wts) {
        let fv = f(t);
        for (a, v) in basis.eval(t).into_iter().enumerate() {
            load[a] += w * fv * v;
        }
    }
    let c = basis.mass.clone().cholesky().expect("time mass matrix is SPD").solve(&load);
    c.iter().copied().collect()
}

/// `phi(t) = T exp((T - t) / T)`.
pub fn weight_phi(t: f64, t_final: f64) -> f64 {
    t_final * ((t_final - t) / t_final).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn partition_checks() {
        assert!(TimePartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimePartition::new(vec![0.1, 1.0]).is_err());
        let p = TimePartition::uniform(1.5, 3).unwrap();
        assert_eq!(p.num_slabs(), 3);
        assert_eq!(p.t_final(), 1.5);
        assert_relative_eq!(p.tau(), 0.5, epsilon = 1e-15);
        assert_eq!(p.interval(1), (0.5, 1.0));
    }

    #[test]
    fn piecewise_constant_basis() {
        let b = TimeBasis::new(0.0, 0.5, 0).unwrap();
        assert_relative_eq!(b.mass[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(b.deriv[(0, 0)], 0.0);
        assert_eq!(b.e_left[0], 1.0);
        assert_eq!(b.e_right[0], 1.0);
    }

    #[test]
    fn integration_by_parts() {
        for r in 0..=4 {
            let b = TimeBasis::new(0.3, 1.1, r).unwrap();
            let lhs = &b.deriv + b.deriv.transpose();
            let rhs = &b.e_right * b.e_right.transpose() - &b.e_left * b.e_left.transpose();
            assert!((lhs - rhs).amax() < 1e-13, "r={r}");
        }
    }

    #[test]
    fn quadratic_mass_oracle() {
        // Lagrange at 0, 1/2, 1 on (0,1): [[2,1,-1/2],[1,8,1],[-1/2,1,2]]/15
        let b = TimeBasis::new(0.0, 1.0, 2).unwrap();
        let oracle = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -0.5, 1.0, 8.0, 1.0, -0.5, 1.0, 2.0]) / 15.0;
        assert!((&b.mass - oracle).amax() < 1e-14);
        assert!(b.mass.clone().cholesky().is_some());
    }

    #[test]
    fn jumps() {
        let b1 = TimeBasis::new(0.0, 1.0, 0).unwrap();
        let b2 = TimeBasis::new(1.0, 2.0, 0).unwrap();
        assert_eq!(time_jump(&b1, &[1.0], &b2, &[2.0]), -1.0);
        let l1 = TimeBasis::new(0.0, 1.0, 1).unwrap();
        let l2 = TimeBasis::new(1.0, 2.0, 1).unwrap();
        // ramps 0 -> 1 then 1 -> 3 meet at t = 1
        assert_eq!(time_jump(&l1, &[0.0, 1.0], &l2, &[1.0, 3.0]), 0.0);
    }

    #[test]
    fn projections() {
        let b0 = TimeBasis::new(0.0, 1.0, 0).unwrap();
        assert_relative_eq!(project_time(|t| t, &b0)[0], 0.5, epsilon = 1e-14);
        let b2 = TimeBasis::new(0.0, 2.0, 2).unwrap();
        let c = project_time(|t| 1.0 - t + 3.0 * t * t, &b2);
        for (a, &t) in b2.nodes.iter().enumerate() {
            assert_relative_eq!(c[a], 1.0 - t + 3.0 * t * t, epsilon = 1e-12);
        }
        // exp on (0,1) onto P1: Legendre coefficients a0 = e - 1, a1 = 3(3 - e)
        let b1 = TimeBasis::new(0.0, 1.0, 1).unwrap();
        let c = project_time(f64::exp, &b1);
        let e = std::f64::consts::E;
        let a0 = e - 1.0;
        let a1 = 3.0 * (3.0 - e);
        assert_relative_eq!(c[0], a0 - a1, epsilon = 1e-10);
        assert_relative_eq!(c[1], a0 + a1, epsilon = 1e-10);
    }

    #[test]
    fn weight_function() {
        let t = 2.0;
        assert_eq!(weight_phi(t, t), t);
        assert_relative_eq!(weight_phi(0.0, t), std::f64::consts::E * t, epsilon = 1e-14);
        for i in 0..=10 {
            let s = t * i as f64 / 10.0;
            let h = 1e-6;
            let d = (weight_phi((s + h).min(t), t) - weight_phi((s - h).max(0.0), t))
                / ((s + h).min(t) - (s - h).max(0.0));
            // phi' = -exp((T - t) / T) lies in [-e, -1]
            assert!((-std::f64::consts::E - 1e-6..=-1.0 + 1e-6).contains(&d), "{d}");
        }
    }
}
