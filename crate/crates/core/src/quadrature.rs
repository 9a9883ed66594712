//! Gauss rules on intervals, triangles, polygons and edges.

use crate::error::{Error, Result};
use crate::Point;

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit of P_n'
        let s = if x > 0.0 { 1.0 } else if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `n`-point Gauss-Lobatto rule on `[-1, 1]` (`n >= 2`), exact to degree `2n - 3`.
///
/// Interior nodes are the roots of `P_{n-1}'`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Gauss-Lobatto rule needs at least two points");
    let m = n - 1;
    let mf = m as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    x[0] = -1.0;
    x[m] = 1.0;
    for i in 1..=(m / 2) {
        // Chebyshev-Gauss-Lobatto initial guess, Newton on P_m'
        let mut z = -(std::f64::consts::PI * i as f64 / mf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, z);
            // P_m'' from the Legendre ODE
            let d2p = (2.0 * z * dp - mf * (mf + 1.0) * p) / (1.0 - z * z);
            let dz = dp / d2p;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[m - i] = -z;
    }
    if m.is_multiple_of(2) {
        x[m / 2] = 0.0;
    }
    for i in 0..n {
        let (p, _) = legendre(m, x[i]);
        w[i] = 2.0 / (mf * (mf + 1.0) * p * p);
    }
    (x, w)
}

/// Gauss-Legendre rule on `[a, b]` exact to polynomial degree `degree`.
pub fn interval_rule(a: f64, b: f64, degree: usize) -> (Vec<f64>, Vec<f64>) {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&xi| mid + half * xi).collect(),
        w.iter().map(|&wi| half * wi).collect(),
    )
}

/// A set of weighted points in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Collapsed (Duffy) tensor Gauss rule on the triangle `(a, b, c)`.
///
/// Weights carry the signed area, so a clockwise triangle yields negative weights.
pub fn triangle_rule(a: Point, b: Point, c: Point, degree: usize) -> QuadratureRule {
    // the Duffy Jacobian adds one degree in the collapsed direction
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (i, &xi) in x.iter().enumerate() {
        let s = 0.5 * (xi + 1.0);
        for (j, &eta) in x.iter().enumerate() {
            let t = 0.5 * (eta + 1.0);
            let u = s * (1.0 - t);
            let v = t;
            points.push([
                a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
                a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
            ]);
            weights.push(0.25 * w[i] * w[j] * (1.0 - t) * det);
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree: degree,
    }
}

/// Fan sub-triangulation from `center` with a Gauss rule of exactness `degree`
/// on every sub-triangle. Degenerate fan triangles are skipped.
pub fn polygon_quadrature(vertices: &[Point], center: Point, degree: usize) -> Result<QuadratureRule> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidMesh(format!("polygon with {n} vertices")));
    }
    let scale: f64 = vertices
        .iter()
        .map(|p| (p[0] - center[0]).abs().max((p[1] - center[1]).abs()))
        .fold(0.0, f64::max);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut area = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let det = (a[0] - center[0]) * (b[1] - center[1]) - (b[0] - center[0]) * (a[1] - center[1]);
        if det.abs() <= 1e-14 * scale * scale {
            continue;
        }
        area += 0.5 * det;
        let tri = triangle_rule(center, a, b, degree);
        points.extend(tri.points);
        weights.extend(tri.weights);
    }
    if points.is_empty() || area.abs() <= 1e-14 * scale * scale {
        return Err(Error::InvalidMesh("fully degenerate polygon".into()));
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree: degree,
    })
}

/// Gauss-Legendre rule on the segment `a -> b`, exact to `degree`.
///
/// Returns points, weights (length units) and the arclength parameter in `[0, 1]`
/// of every point.
pub fn edge_quadrature(a: Point, b: Point, degree: usize) -> (Vec<Point>, Vec<f64>, Vec<f64>) {
    let (s, w) = interval_rule(0.0, 1.0, degree);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let pts = s
        .iter()
        .map(|&si| [a[0] + si * (b[0] - a[0]), a[1] + si * (b[1] - a[1])])
        .collect();
    (pts, w.iter().map(|wi| wi * len).collect(), s)
}
