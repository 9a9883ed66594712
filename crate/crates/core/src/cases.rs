//! Reference problems on the unit square.

use std::f64::consts::PI;

use crate::analysis::ExactSolution;
use crate::assembly::ProblemData;
use crate::basis::exponents;
use crate::Point;

/// Problem data plus, when known, the exact solution.
#[derive(Clone)]
pub struct Case {
    pub name: String,
    pub problem: ProblemData,
    pub exact: Option<ExactSolution>,
}

pub const MANUFACTURED_T: f64 = 1.5;

fn manufactured_beta(p: Point, t: f64) -> [f64; 2] {
    let s = (PI * (p[0] + p[1])).sin() * (0.5 * t).exp();
    [s, -s]
}

fn manufactured_u(p: Point, t: f64) -> f64 {
    (0.3 * t).exp() * (PI * p[0]).sin() * (PI * p[1]).sin()
}

fn manufactured_grad(p: Point, t: f64) -> [f64; 2] {
    let e = (0.3 * t).exp();
    [
        e * PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
        e * PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
    ]
}

/// `u = exp(0.3 t) sin(pi x) sin(pi y)` with the divergence-free
/// `beta = exp(t/2) (sin pi(x+y), -sin pi(x+y))` on `(0, 1.5)`.
pub fn manufactured(nu: f64) -> Case {
    let problem = ProblemData::new(nu, MANUFACTURED_T)
        .with_beta(manufactured_beta)
        .with_source(move |p, t| {
            let b = manufactured_beta(p, t);
            let g = manufactured_grad(p, t);
            let u = manufactured_u(p, t);
            (0.3 + 2.0 * PI * PI * nu) * u + b[0] * g[0] + b[1] * g[1]
        })
        .with_initial(|p| manufactured_u(p, 0.0));
    Case {
        name: format!("manufactured-nu{nu:e}"),
        problem,
        exact: Some(ExactSolution::new(manufactured_u, manufactured_grad)),
    }
}

/// Manufactured velocity and initial datum with the source held fixed at its
/// `nu = 0` form, so only the diffusion changes with `nu`.
pub fn fixed_data(nu: f64) -> Case {
    let problem = ProblemData::new(nu, MANUFACTURED_T)
        .with_beta(manufactured_beta)
        .with_source(|p, t| {
            let b = manufactured_beta(p, t);
            let g = manufactured_grad(p, t);
            0.3 * manufactured_u(p, t) + b[0] * g[0] + b[1] * g[1]
        })
        .with_initial(|p| manufactured_u(p, 0.0));
    Case {
        name: format!("fixed-data-nu{nu:e}"),
        problem,
        exact: None,
    }
}

/// Full polynomial of degree `k` in space with all coefficients nonzero.
#[derive(Debug, Clone)]
pub struct SpacePoly {
    terms: Vec<(usize, usize, f64)>,
}

impl SpacePoly {
    pub fn full(k: usize) -> Self {
        let terms = exponents(k)
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                (a, b, sign / (1.0 + a as f64 + 2.0 * b as f64))
            })
            .collect();
        Self { terms }
    }

    pub fn value(&self, p: Point) -> f64 {
        self.terms.iter().map(|&(a, b, c)| c * p[0].powi(a as i32) * p[1].powi(b as i32)).sum()
    }

    pub fn grad(&self, p: Point) -> [f64; 2] {
        let mut g = [0.0; 2];
        for &(a, b, c) in &self.terms {
            if a > 0 {
                g[0] += c * a as f64 * p[0].powi(a as i32 - 1) * p[1].powi(b as i32);
            }
            if b > 0 {
                g[1] += c * b as f64 * p[0].powi(a as i32) * p[1].powi(b as i32 - 1);
            }
        }
        g
    }

    pub fn laplacian(&self, p: Point) -> f64 {
        let mut l = 0.0;
        for &(a, b, c) in &self.terms {
            if a > 1 {
                l += c * (a * (a - 1)) as f64 * p[0].powi(a as i32 - 2) * p[1].powi(b as i32);
            }
            if b > 1 {
                l += c * (b * (b - 1)) as f64 * p[0].powi(a as i32) * p[1].powi(b as i32 - 2);
            }
        }
        l
    }
}

/// `1 + t/2 + t^2/3 + ...` up to degree `r`, and its derivative.
fn time_poly(r: usize, t: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for j in 0..=r {
        v += t.powi(j as i32) / (j + 1) as f64;
        if j > 0 {
            d += j as f64 * t.powi(j as i32 - 1) / (j + 1) as f64;
        }
    }
    (v, d)
}

/// `u = q(x, y) s(t)` with `q` of degree `k` and `s` of degree `r`, constant
/// `beta`, and `u` as Dirichlet data. The scheme reproduces it up to round-off.
pub fn patch(k: usize, r: usize, nu: f64, beta: [f64; 2], t_final: f64) -> Case {
    let q = SpacePoly::full(k);
    let (qu, qg, qf) = (q.clone(), q.clone(), q);
    let u = move |p: Point, t: f64| qu.value(p) * time_poly(r, t).0;
    let grad = move |p: Point, t: f64| {
        let g = qg.grad(p);
        let s = time_poly(r, t).0;
        [g[0] * s, g[1] * s]
    };
    let u0 = u.clone();
    let ug = u.clone();
    let problem = ProblemData::new(nu, t_final)
        .with_beta(move |_, _| beta)
        .with_source(move |p, t| {
            let (s, ds) = time_poly(r, t);
            let g = qf.grad(p);
            qf.value(p) * ds + s * (-nu * qf.laplacian(p) + beta[0] * g[0] + beta[1] * g[1])
        })
        .with_initial(move |p| u0(p, 0.0))
        .with_dirichlet(ug);
    Case {
        name: format!("patch-k{k}-r{r}"),
        problem,
        exact: Some(ExactSolution::new(u, grad)),
    }
}

pub const ROTATING_RADIUS: f64 = 0.2;
pub const ROTATING_T: f64 = 6.0;
pub const ROTATING_NU: f64 = 1e-20;
/// Vertices farther than this from the rotated disc centre count as exterior.
pub const EXTERIOR_RADIUS: f64 = 0.3;

/// Centre of the rotating disc at time `t`, starting at `(0.25, 0.5)` and
/// turning counterclockwise about `(0.5, 0.5)`.
pub fn rotating_center(t: f64) -> Point {
    [0.5 - 0.25 * t.cos(), 0.5 - 0.25 * t.sin()]
}

/// Indicator of a disc carried by the rigid rotation `beta = (0.5 - y, x - 0.5)`.
pub fn rotating_body() -> Case {
    let c0 = rotating_center(0.0);
    let problem = ProblemData::new(ROTATING_NU, ROTATING_T)
        .with_beta(|p, _| [0.5 - p[1], p[0] - 0.5])
        .with_initial(move |p| {
            if (p[0] - c0[0]).hypot(p[1] - c0[1]) <= ROTATING_RADIUS {
                1.0
            } else {
                0.0
            }
        });
    Case {
        name: "rotating-body".into(),
        problem,
        exact: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_beta_is_solenoidal() {
        let h = 1e-5;
        for &(x, y, t) in &[(0.1, 0.2, 0.0), (0.7, 0.3, 1.0), (0.5, 0.9, 1.5)] {
            let dx = (manufactured_beta([x + h, y], t)[0] - manufactured_beta([x - h, y], t)[0]) / (2.0 * h);
            let dy = (manufactured_beta([x, y + h], t)[1] - manufactured_beta([x, y - h], t)[1]) / (2.0 * h);
            assert!((dx + dy).abs() < 1e-8);
        }
    }

    #[test]
    fn manufactured_source_closes_the_equation() {
        let nu = 0.7;
        let case = manufactured(nu);
        let h = 1e-4;
        for &(x, y, t) in &[(0.3, 0.4, 0.2), (0.8, 0.1, 1.2)] {
            let u = |x: f64, y: f64, t: f64| manufactured_u([x, y], t);
            let ut = (u(x, y, t + h) - u(x, y, t - h)) / (2.0 * h);
            let lap = (u(x + h, y, t) + u(x - h, y, t) + u(x, y + h, t) + u(x, y - h, t) - 4.0 * u(x, y, t)) / (h * h);
            let b = manufactured_beta([x, y], t);
            let g = manufactured_grad([x, y], t);
            let lhs = ut - nu * lap + b[0] * g[0] + b[1] * g[1];
            assert!((lhs - (case.problem.f)([x, y], t)).abs() < 1e-5);
        }
    }

    #[test]
    fn rotating_beta_is_solenoidal_and_carries_centre() {
        let case = rotating_body();
        let b = &case.problem.beta;
        for &(x, y) in &[(0.1, 0.3), (0.9, 0.6)] {
            let h = 1e-3;
            let div = (b([x + h, y], 0.0)[0] - b([x - h, y], 0.0)[0] + b([x, y + h], 0.0)[1] - b([x, y - h], 0.0)[1]) / (2.0 * h);
            assert!(div.abs() <= 1e-13);
        }
        let t = 0.7;
        let c = rotating_center(t);
        let dc = [0.25 * t.sin(), -0.25 * t.cos()];
        let v = b(c, t);
        assert!((v[0] - dc[0]).abs() < 1e-14 && (v[1] - dc[1]).abs() < 1e-14);
        assert_eq!((case.problem.u0)([0.25, 0.5]), 1.0);
        assert_eq!((case.problem.u0)([0.75, 0.5]), 0.0);
    }

    #[test]
    fn patch_source_closes_the_equation() {
        let case = patch(2, 2, 0.3, [1.0, -0.5], 1.0);
        let ex = case.exact.unwrap();
        let h = 1e-4;
        let (x, y, t) = (0.3, 0.6, 0.4);
        let u = |x: f64, y: f64, t: f64| (ex.u)([x, y], t);
        let ut = (u(x, y, t + h) - u(x, y, t - h)) / (2.0 * h);
        let lap = (u(x + h, y, t) + u(x - h, y, t) + u(x, y + h, t) + u(x, y - h, t) - 4.0 * u(x, y, t)) / (h * h);
        let g = (ex.grad)([x, y], t);
        let lhs = ut - 0.3 * lap + g[0] - 0.5 * g[1];
        assert!((lhs - (case.problem.f)([x, y], t)).abs() < 1e-6);
    }
}
