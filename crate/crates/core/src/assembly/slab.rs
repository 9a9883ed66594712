use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Discretization, ProblemData, ResolvedSupg, VectorField};
use crate::error::{Error, Result};
use crate::time_slab::TimeBasis;
use crate::vem::VemElement;

/// Linear system of one slab. Unknown `a * n_free + f` is the coefficient of
/// time basis function `a` at free spatial DoF `f`.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub slab: usize,
    pub n_free: usize,
    pub n_time: usize,
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
    /// Global DoF vectors holding the Dirichlet values at each time node.
    pub boundary_values: Vec<Vec<f64>>,
    /// `lambda_Kn` per cell.
    pub lambda: Vec<f64>,
    /// `beta_Kn` per cell.
    pub beta_k: Vec<f64>,
}

impl SlabSystem {
    pub fn size(&self) -> usize {
        self.n_free * self.n_time
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let sym = self.matrix.symbolic();
        let col_ptr = sym.col_ptr();
        let row_idx = sym.row_idx();
        let val = self.matrix.val();
        for j in 0..self.size() {
            let xj = x[j];
            for p in col_ptr[j]..col_ptr[j + 1] {
                y[row_idx[p]] += val[p] * xj;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let sym = self.matrix.symbolic();
        let col_ptr = sym.col_ptr();
        let row_idx = sym.row_idx();
        let val = self.matrix.val();
        let mut d = vec![0.0; self.size()];
        for (j, dj) in d.iter_mut().enumerate() {
            for p in col_ptr[j]..col_ptr[j + 1] {
                if row_idx[p] == j {
                    *dj += val[p];
                }
            }
        }
        d
    }
}

struct CellSystem {
    lhs: DMatrix<f64>,
    rhs: DVector<f64>,
    lambda: f64,
    beta_k: f64,
}

/// Quadrature-weighted rows: `diag(w) V`.
fn weighted(w: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = v.clone();
    for (p, &wp) in w.iter().enumerate() {
        out.row_mut(p).scale_mut(wp);
    }
    out
}

fn add_block(lhs: &mut DMatrix<f64>, nk: usize, b: usize, a: usize, c: f64, s: &DMatrix<f64>) {
    if c == 0.0 {
        return;
    }
    let mut blk = lhs.view_mut((b * nk, a * nk), (nk, nk));
    blk.zip_apply(s, |x, y| *x += c * y);
}

#[allow(clippy::too_many_arguments)]
fn cell_system(
    el: &VemElement,
    basis: &TimeBasis,
    problem: &ProblemData,
    params: &ResolvedSupg,
    initial: bool,
    prev_local: Option<&DVector<f64>>,
) -> Result<CellSystem> {
    let nk = el.ndof();
    let nt = basis.len();
    let nu = problem.nu;
    let (tq, wq) = basis.quadrature(2 * basis.degree + 6);
    let psi: Vec<Vec<f64>> = tq.iter().map(|&t| basis.eval(t)).collect();
    let dpsi: Vec<Vec<f64>> = tq.iter().map(|&t| basis.eval_deriv(t)).collect();
    let pts = &el.rule.points;
    let w = &el.rule.weights;

    let betas: Vec<Vec<[f64; 2]>> = tq
        .iter()
        .map(|&t| pts.iter().map(|&p| (problem.beta)(p, t)).collect())
        .collect();
    let beta_max = betas
        .iter()
        .flatten()
        .map(|b| b[0].hypot(b[1]))
        .fold(0.0, f64::max);
    let beta_k = beta_max.max(params.beta_eps);
    let lambda = params.lambda(el.diameter, nu)?;

    let mut lhs = DMatrix::zeros(nt * nk, nt * nk);
    let mut rhs = DVector::zeros(nt * nk);
    let sa_coef = beta_k * beta_k * lambda;
    for a in 0..nt {
        for b in 0..nt {
            let kt = basis.deriv[(a, b)] + basis.e_left[a] * basis.e_left[b];
            add_block(&mut lhs, nk, b, a, kt, &el.mass);
            add_block(&mut lhs, nk, b, a, nu * basis.mass[(a, b)], &el.stiffness);
            add_block(&mut lhs, nk, b, a, sa_coef * basis.mass[(a, b)], &el.stab_stiffness);
            if params.extra_time_stab {
                add_block(&mut lhs, nk, b, a, lambda * basis.stiff[(a, b)], &el.stab_mass);
            }
        }
    }

    let v = &el.values;
    let wv = weighted(w, v);
    let vv = v.transpose() * &wv;
    for q in 0..tq.len() {
        let qk = el.advective_values_k(&betas[q]);
        let bmat = wv.transpose() * &qk;
        let skew = (&bmat - bmat.transpose()) * 0.5;
        let fvals: Vec<f64> = pts.iter().zip(w).map(|(&p, &wp)| wp * (problem.f)(p, tq[q])).collect();
        let fvec = DVector::from_vec(fvals);
        let load_v = v.transpose() * &fvec;
        let mut load_q = DVector::zeros(nk);
        let mut supg = None;
        if lambda > 0.0 {
            let qm = el.advective_values(&betas[q]);
            let resid = &qm - &el.div_grad * nu;
            let wr = weighted(w, &resid);
            let vr = v.transpose() * &wr;
            let qv = qm.transpose() * &wv;
            let qr = qm.transpose() * &wr;
            load_q = qm.transpose() * &fvec;
            supg = Some((vr, qv, qr));
        }
        for b in 0..nt {
            for a in 0..nt {
                add_block(&mut lhs, nk, b, a, wq[q] * psi[q][a] * psi[q][b], &skew);
                if let Some((vr, qv, qr)) = &supg {
                    let c = lambda * wq[q];
                    add_block(&mut lhs, nk, b, a, c * dpsi[q][b] * dpsi[q][a], &vv);
                    add_block(&mut lhs, nk, b, a, c * dpsi[q][b] * psi[q][a], vr);
                    add_block(&mut lhs, nk, b, a, c * psi[q][b] * dpsi[q][a], qv);
                    add_block(&mut lhs, nk, b, a, c * psi[q][b] * psi[q][a], qr);
                }
            }
            let mut seg = rhs.rows_mut(b * nk, nk);
            seg.axpy(wq[q] * (psi[q][b] + lambda * dpsi[q][b]), &load_v, 1.0);
            if lambda > 0.0 {
                seg.axpy(wq[q] * lambda * psi[q][b], &load_q, 1.0);
            }
        }
    }

    // upwind data at t_{n-1}^+
    let start = if initial {
        let u0 = DVector::from_iterator(pts.len(), pts.iter().zip(w).map(|(&p, &wp)| wp * (problem.u0)(p)));
        Some(v.transpose() * u0)
    } else {
        prev_local.map(|u| &el.mass * u)
    };
    if let Some(s) = start {
        for b in 0..nt {
            rhs.rows_mut(b * nk, nk).axpy(basis.e_left[b], &s, 1.0);
        }
    }
    Ok(CellSystem {
        lhs,
        rhs,
        lambda,
        beta_k,
    })
}

/// Assembles slab `slab` (0-based). `prev_trace` is the global DoF vector of the
/// discrete solution at the end of the previous slab; `None` on the first slab,
/// where the initial datum enters instead.
pub fn assemble_slab(
    disc: &Discretization,
    basis: &TimeBasis,
    slab: usize,
    problem: &ProblemData,
    params: &ResolvedSupg,
    prev_trace: Option<&[f64]>,
) -> Result<SlabSystem> {
    let ndof = disc.n_dofs();
    if let Some(p) = prev_trace {
        if p.len() != ndof {
            return Err(Error::DimensionMismatch(format!(
                "previous trace has {} entries, expected {ndof}",
                p.len()
            )));
        }
    }
    let dofs = &disc.dofs;
    let nf = dofs.n_free();
    let nt = basis.len();
    let boundary_values: Vec<Vec<f64>> = basis
        .nodes
        .iter()
        .map(|&t| {
            let mut g = vec![0.0; ndof];
            if let Some(gfun) = &problem.dirichlet {
                for (dof, slot) in g.iter_mut().enumerate() {
                    if dofs.is_boundary(dof) {
                        *slot = gfun(dofs.position(dof).expect("boundary DoFs have positions"), t);
                    }
                }
            }
            g
        })
        .collect();

    let initial = prev_trace.is_none();
    let cells: Vec<CellSystem> = (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let prev_local = prev_trace.map(|p| disc.local(c, p));
            cell_system(&disc.elements[c], basis, problem, params, initial, prev_local.as_ref())
        })
        .collect::<Result<_>>()?;

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; nt * nf];
    let mut lambda = Vec::with_capacity(cells.len());
    let mut beta_k = Vec::with_capacity(cells.len());
    for (c, cs) in cells.iter().enumerate() {
        let ldofs = dofs.cell_dofs(c);
        let nk = ldofs.len();
        for b in 0..nt {
            for (i, &gi) in ldofs.iter().enumerate() {
                let Some(fi) = dofs.free_index(gi) else { continue };
                let row = b * nf + fi;
                let li = b * nk + i;
                rhs[row] += cs.rhs[li];
                for a in 0..nt {
                    for (j, &gj) in ldofs.iter().enumerate() {
                        let val = cs.lhs[(li, a * nk + j)];
                        match dofs.free_index(gj) {
                            Some(fj) => triplets.push(Triplet::new(row, a * nf + fj, val)),
                            None => rhs[row] -= val * boundary_values[a][gj],
                        }
                    }
                }
            }
        }
        lambda.push(cs.lambda);
        beta_k.push(cs.beta_k);
    }
    if let Some(bad) = rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("slab {slab} right-hand side entry {bad}")));
    }
    if triplets.iter().any(|t| !t.val.is_finite()) {
        return Err(Error::NonFinite(format!("slab {slab} matrix")));
    }
    let matrix = SparseColMat::try_new_from_triplets(nt * nf, nt * nf, &triplets)
        .map_err(|e| Error::SingularSlab {
            slab,
            reason: format!("sparse matrix construction failed: {e:?}"),
        })?;
    Ok(SlabSystem {
        slab,
        n_free: nf,
        n_time: nt,
        matrix,
        rhs,
        boundary_values,
        lambda,
        beta_k,
    })
}

/// Global skew advection matrix `1/2 (b_h(phi_j, phi_i) - b_h(phi_i, phi_j))`
/// at time `t`, over all DoFs, as a dense matrix (rows are test functions).
pub fn advection_matrix(disc: &Discretization, beta: &VectorField, t: f64) -> DMatrix<f64> {
    let n = disc.n_dofs();
    let mut out = DMatrix::zeros(n, n);
    for (c, el) in disc.elements.iter().enumerate() {
        let b: Vec<[f64; 2]> = el.rule.points.iter().map(|&p| beta(p, t)).collect();
        let qk = el.advective_values_k(&b);
        let bmat = weighted(&el.rule.weights, &el.values).transpose() * qk;
        let skew = (&bmat - bmat.transpose()) * 0.5;
        let ldofs = disc.dofs.cell_dofs(c);
        for (i, &gi) in ldofs.iter().enumerate() {
            for (j, &gj) in ldofs.iter().enumerate() {
                out[(gi, gj)] += skew[(i, j)];
            }
        }
    }
    out
}
