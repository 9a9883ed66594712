//! Scaled and shifted monomials `m_a(x) = ((x - x_K) / h_K)^a` on a cell.
//!
//! Multi-indices are ordered by total degree, then by decreasing power of `x`:
//! `1, x, y, x^2, xy, y^2, x^3, ...`. This ordering is part of the file and CSV
//! contracts and every projector matrix is expressed against it.

use nalgebra::DMatrix;

use crate::quadrature::QuadratureRule;
use crate::Point;

/// Number of monomials of total degree `<= k`; zero for negative `k`.
pub fn dim_poly(k: isize) -> usize {
    if k < 0 {
        0
    } else {
        let k = k as usize;
        (k + 1) * (k + 2) / 2
    }
}

/// Position of the multi-index `(a, b)` in the graded ordering.
pub fn index_of(a: usize, b: usize) -> usize {
    let l = a + b;
    l * (l + 1) / 2 + b
}

/// All multi-indices of degree `<= k` in graded order.
pub fn exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_poly(k as isize));
    for l in 0..=k {
        for b in 0..=l {
            out.push((l - b, b));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
    pub index_map: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn new(center: Point, scale: f64, degree: usize) -> Self {
        Self {
            center,
            scale,
            degree,
            index_map: exponents(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.index_map.len()
    }

    fn scaled(&self, p: Point) -> (f64, f64) {
        (
            (p[0] - self.center[0]) / self.scale,
            (p[1] - self.center[1]) / self.scale,
        )
    }

    /// Powers `xi^0..xi^degree` of a scaled coordinate.
    fn powers(&self, xi: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.degree + 1);
        let mut acc = 1.0;
        for _ in 0..=self.degree {
            out.push(acc);
            acc *= xi;
        }
        out
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let (xi, eta) = self.scaled(p);
        let px = self.powers(xi);
        let py = self.powers(eta);
        self.index_map.iter().map(|&(a, b)| px[a] * py[b]).collect()
    }

    pub fn eval_grad(&self, p: Point) -> Vec<[f64; 2]> {
        let (xi, eta) = self.scaled(p);
        let px = self.powers(xi);
        let py = self.powers(eta);
        let inv = 1.0 / self.scale;
        self.index_map
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 { a as f64 * px[a - 1] * py[b] * inv } else { 0.0 };
                let dy = if b > 0 { b as f64 * px[a] * py[b - 1] * inv } else { 0.0 };
                [dx, dy]
            })
            .collect()
    }

    /// Value of the polynomial with coefficients `coef` (first `coef.len()` monomials).
    pub fn eval_poly(&self, coef: &[f64], p: Point) -> f64 {
        let v = self.eval(p);
        coef.iter().zip(&v).map(|(c, m)| c * m).sum()
    }

    /// Matrix of monomial values at the rule points: `(n_points x dim(k))`.
    pub fn value_matrix(&self, points: &[Point], k: usize) -> DMatrix<f64> {
        let n = dim_poly(k as isize);
        let mut out = DMatrix::zeros(points.len(), n);
        for (q, &p) in points.iter().enumerate() {
            let v = self.eval(p);
            for a in 0..n {
                out[(q, a)] = v[a];
            }
        }
        out
    }

    /// Coefficient map of `d/dx` (`dir = 0`) or `d/dy` (`dir = 1`) from degree `k`
    /// to degree `k - 1` polynomials: `(dim(k-1) x dim(k))`.
    pub fn derivative_matrix(&self, k: usize, dir: usize) -> DMatrix<f64> {
        let rows = dim_poly(k as isize - 1);
        let ex = exponents(k);
        let mut out = DMatrix::zeros(rows, ex.len());
        for (col, &(a, b)) in ex.iter().enumerate() {
            match dir {
                0 if a > 0 => out[(index_of(a - 1, b), col)] = a as f64 / self.scale,
                1 if b > 0 => out[(index_of(a, b - 1), col)] = b as f64 / self.scale,
                _ => {}
            }
        }
        out
    }

    /// Coefficient map of the Laplacian from degree `k` to degree `k - 2`.
    pub fn laplacian_matrix(&self, k: usize) -> DMatrix<f64> {
        let rows = dim_poly(k as isize - 2);
        let ex = exponents(k);
        let h2 = self.scale * self.scale;
        let mut out = DMatrix::zeros(rows, ex.len());
        for (col, &(a, b)) in ex.iter().enumerate() {
            if a >= 2 {
                out[(index_of(a - 2, b), col)] += (a * (a - 1)) as f64 / h2;
            }
            if b >= 2 {
                out[(index_of(a, b - 2), col)] += (b * (b - 1)) as f64 / h2;
            }
        }
        out
    }
}

/// `H[a][b] = \int_K m_a m_b` for all monomials of the basis degree.
pub fn monomial_mass_matrix(basis: &MonomialBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut h = DMatrix::zeros(n, n);
    for (&p, &w) in rule.points.iter().zip(&rule.weights) {
        let v = basis.eval(p);
        for a in 0..n {
            let wa = w * v[a];
            for b in a..n {
                h[(a, b)] += wa * v[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    h
}
