use faer::linalg::solvers::Solve;
use faer::Mat;

use super::{assemble_slab, Discretization, ProblemData, ResolvedSupg, SlabSystem, SupgParams};
use crate::error::{Error, Result};
use crate::time_slab::{TimeBasis, TimePartition};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolverKind {
    /// Sparse LU.
    #[default]
    Direct,
    /// Jacobi-preconditioned BiCGSTAB.
    BiCgStab { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SlabDiagnostics {
    pub unknowns: usize,
    pub nnz: usize,
    /// `|A x - b| / |b|` after the solve.
    pub relative_residual: f64,
    pub iterations: Option<usize>,
}

/// Space-time discrete solution: per slab, per time node, a global DoF vector
/// (Dirichlet values included).
#[derive(Debug, Clone)]
pub struct GlobalSolution {
    pub k: usize,
    pub r: usize,
    pub partition: TimePartition,
    pub bases: Vec<TimeBasis>,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub params: ResolvedSupg,
    pub nu: f64,
    /// `lambda_Kn` per slab and cell.
    pub lambda: Vec<Vec<f64>>,
    /// `beta_Kn` per slab and cell.
    pub beta_k: Vec<Vec<f64>>,
    pub diagnostics: Vec<SlabDiagnostics>,
}

impl GlobalSolution {
    pub fn num_slabs(&self) -> usize {
        self.coeffs.len()
    }

    /// Global DoF vector at `t` within slab `n` (one-sided at slab ends).
    pub fn at(&self, n: usize, t: f64) -> Vec<f64> {
        let psi = self.bases[n].eval(t);
        let mut out = vec![0.0; self.coeffs[n][0].len()];
        for (a, c) in self.coeffs[n].iter().enumerate() {
            for (o, v) in out.iter_mut().zip(c) {
                *o += psi[a] * v;
            }
        }
        out
    }

    /// Trace at `t_n^-` of slab `n`.
    pub fn end_trace(&self, n: usize) -> Vec<f64> {
        self.at(n, self.bases[n].t1)
    }

    /// Trace at the final time.
    pub fn final_trace(&self) -> Vec<f64> {
        self.end_trace(self.num_slabs() - 1)
    }

    /// Same structure with all coefficients replaced.
    pub fn with_coeffs(&self, coeffs: Vec<Vec<Vec<f64>>>) -> Self {
        Self {
            coeffs,
            ..self.clone()
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_direct(sys: &SlabSystem) -> Result<Vec<f64>> {
    let lu = sys.matrix.sp_lu().map_err(|e| Error::SingularSlab {
        slab: sys.slab,
        reason: format!("LU factorization failed: {e:?}"),
    })?;
    let mut b = Mat::<f64>::from_fn(sys.size(), 1, |i, _| sys.rhs[i]);
    lu.solve_in_place(b.as_mut());
    let x: Vec<f64> = (0..sys.size()).map(|i| b[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSlab {
            slab: sys.slab,
            reason: "LU solve produced non-finite values".into(),
        });
    }
    Ok(x)
}

fn solve_bicgstab(sys: &SlabSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = sys.size();
    let diag = sys.diagonal();
    if let Some(i) = diag.iter().position(|d| *d == 0.0 || !d.is_finite()) {
        return Err(Error::SingularSlab {
            slab: sys.slab,
            reason: format!("zero diagonal at unknown {i}"),
        });
    }
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = v[i] / diag[i];
        }
    };
    let b = &sys.rhs;
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.clone();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        sys.matvec(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            history.push(norm(&s) / bnorm);
            return Ok((x, it));
        }
        precond(&s, &mut z);
        sys.matvec(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel < tol {
            return Ok((x, it));
        }
    }
    Err(Error::KrylovNotConverged {
        slab: sys.slab,
        iterations: history.len(),
        residuals: history,
    })
}

/// Solves slab after slab. Slab `n` only sees the data and the end trace of
/// slab `n - 1`.
pub fn solve(
    disc: &Discretization,
    partition: &TimePartition,
    problem: &ProblemData,
    params: &SupgParams,
    r: usize,
    solver: SolverKind,
) -> Result<GlobalSolution> {
    problem.validate()?;
    if (partition.t_final() - problem.t_final).abs() > 1e-12 * problem.t_final {
        return Err(Error::InvalidParameter(format!(
            "partition ends at {} but T = {}",
            partition.t_final(),
            problem.t_final
        )));
    }
    let resolved = params.resolve(disc, partition, problem)?;
    let tau = partition.tau();
    let bound = resolved.c_star_check * disc.mesh.h_min().sqrt();
    if tau > bound {
        log::warn!("tau = {tau:.4e} exceeds c* sqrt(h_min) = {bound:.4e}");
    }
    let ndof = disc.n_dofs();
    let mut out = GlobalSolution {
        k: disc.k,
        r,
        partition: partition.clone(),
        bases: Vec::with_capacity(partition.num_slabs()),
        coeffs: Vec::with_capacity(partition.num_slabs()),
        params: resolved,
        nu: problem.nu,
        lambda: Vec::new(),
        beta_k: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut prev: Option<Vec<f64>> = None;
    for n in 0..partition.num_slabs() {
        let (t0, t1) = partition.interval(n);
        let basis = TimeBasis::new(t0, t1, r)?;
        let sys = assemble_slab(disc, &basis, n, problem, &resolved, prev.as_deref())?;
        let (x, iterations) = if sys.size() == 0 {
            (Vec::new(), None)
        } else {
            match solver {
                SolverKind::Direct => (solve_direct(&sys)?, None),
                SolverKind::BiCgStab { tol, max_iter } => {
                    let (x, it) = solve_bicgstab(&sys, tol, max_iter)?;
                    (x, Some(it))
                }
            }
        };
        let mut ax = vec![0.0; sys.size()];
        sys.matvec(&x, &mut ax);
        let res: Vec<f64> = ax.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
        let bn = norm(&sys.rhs);
        let relative_residual = if bn > 0.0 { norm(&res) / bn } else { norm(&res) };
        if !relative_residual.is_finite() {
            return Err(Error::SingularSlab {
                slab: n,
                reason: "non-finite residual".into(),
            });
        }
        let nf = sys.n_free;
        let mut slab_coeffs = sys.boundary_values.clone();
        for (a, c) in slab_coeffs.iter_mut().enumerate() {
            for (f, &g) in disc.dofs.free_dofs().iter().enumerate() {
                c[g] = x[a * nf + f];
            }
            debug_assert_eq!(c.len(), ndof);
        }
        let end: Vec<f64> = {
            let er = &basis.e_right;
            let mut e = vec![0.0; ndof];
            for (a, c) in slab_coeffs.iter().enumerate() {
                for (o, v) in e.iter_mut().zip(c) {
                    *o += er[a] * v;
                }
            }
            e
        };
        out.diagnostics.push(SlabDiagnostics {
            unknowns: sys.size(),
            nnz: sys.matrix.compute_nnz(),
            relative_residual,
            iterations,
        });
        out.lambda.push(sys.lambda);
        out.beta_k.push(sys.beta_k);
        out.coeffs.push(slab_coeffs);
        out.bases.push(basis);
        prev = Some(end);
    }
    Ok(out)
}
