use std::f64::consts::PI;

use nalgebra::DMatrix;
use stdg_core::analysis::{energy_norm, error_metrics, ExactSolution};
use stdg_core::assembly::{assemble_slab, solve, ProblemData, SolverKind, SupgParams};
use stdg_core::mesh::{generate_cartesian, generate_voronoi, BBox};
use stdg_core::{Discretization, SlabSystem, TimeBasis, TimePartition};

fn dense(sys: &SlabSystem) -> DMatrix<f64> {
    let n = sys.size();
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        sys.matvec(&e, &mut col);
        out.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    out
}

/// Global dense assembly of a per-element matrix.
fn global(disc: &Discretization, pick: impl Fn(&stdg_core::VemElement) -> &DMatrix<f64>) -> DMatrix<f64> {
    let n = disc.n_dofs();
    let mut out = DMatrix::zeros(n, n);
    for (c, el) in disc.elements.iter().enumerate() {
        let d = disc.dofs.cell_dofs(c);
        let m = pick(el);
        for (i, &gi) in d.iter().enumerate() {
            for (j, &gj) in d.iter().enumerate() {
                out[(gi, gj)] += m[(i, j)];
            }
        }
    }
    out
}

#[test]
fn zero_data_gives_zero_solution() {
    let disc = Discretization::new(generate_voronoi(10, BBox::unit(), 2, 1).unwrap(), 2).unwrap();
    let part = TimePartition::uniform(1.0, 3).unwrap();
    let problem = ProblemData::new(0.0, 1.0);
    let sol = solve(&disc, &part, &problem, &SupgParams::default(), 1, SolverKind::Direct).unwrap();
    let basis = TimeBasis::new(0.0, 1.0 / 3.0, 1).unwrap();
    let sys = assemble_slab(&disc, &basis, 0, &problem, &sol.params, None).unwrap();
    assert!(sys.rhs.iter().all(|v| *v == 0.0));
    assert!(sol.coeffs.iter().flatten().flatten().all(|v| *v == 0.0));
}

#[test]
fn dg0_heat_step_matches_hand_assembly() {
    // every vertex of a single cell is on the boundary, so use 2x2 cells
    let disc = Discretization::new(generate_cartesian(2, 2, BBox::unit()).unwrap(), 1).unwrap();
    let tau = 0.25;
    let problem = ProblemData::new(1.0, tau).with_initial(|p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]));
    let part = TimePartition::uniform(tau, 1).unwrap();
    for params in [SupgParams::none(), SupgParams::default()] {
        let resolved = params.resolve(&disc, &part, &problem).unwrap();
        let basis = TimeBasis::new(0.0, tau, 0).unwrap();
        let sys = assemble_slab(&disc, &basis, 0, &problem, &resolved, None).unwrap();
        let m = global(&disc, |e| &e.mass);
        let a = global(&disc, |e| &e.stiffness);
        let oracle = &m + &a * tau;
        let free = disc.dofs.free_dofs();
        assert_eq!(sys.size(), free.len());
        let got = dense(&sys);
        for (i, &gi) in free.iter().enumerate() {
            for (j, &gj) in free.iter().enumerate() {
                assert!((got[(i, j)] - oracle[(gi, gj)]).abs() <= 1e-12 * oracle.amax());
            }
        }
    }
}

#[test]
fn krylov_matches_direct_and_repeats_are_identical() {
    let case = stdg_core::cases::manufactured(1e-2);
    let disc = Discretization::new(generate_voronoi(30, BBox::unit(), 3, 5).unwrap(), 2).unwrap();
    let part = TimePartition::uniform(case.problem.t_final, 4).unwrap();
    let p = SupgParams::default();
    let direct = solve(&disc, &part, &case.problem, &p, 1, SolverKind::Direct).unwrap();
    let again = solve(&disc, &part, &case.problem, &p, 1, SolverKind::Direct).unwrap();
    assert_eq!(direct.coeffs, again.coeffs);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = single.install(|| solve(&disc, &part, &case.problem, &p, 1, SolverKind::Direct).unwrap());
    assert_eq!(direct.coeffs, serial.coeffs);
    let kry = solve(
        &disc,
        &part,
        &case.problem,
        &p,
        1,
        SolverKind::BiCgStab { tol: 1e-13, max_iter: 5000 },
    )
    .unwrap();
    let a = direct.final_trace();
    let b = kry.final_trace();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-9 * scale, "{diff:e}");
    assert!(kry.diagnostics.iter().all(|d| d.iterations.is_some()));
}

#[test]
fn slabs_only_see_the_past() {
    let disc = Discretization::new(generate_cartesian(5, 5, BBox::unit()).unwrap(), 1).unwrap();
    let part = TimePartition::uniform(1.0, 4).unwrap();
    let base = ProblemData::new(1e-3, 1.0)
        .with_beta(|p, _| [p[1] - 0.5, 0.5 - p[0]])
        .with_source(|p, t| p[0] * t);
    let changed = base.clone().with_source(|p, t| if t > 0.5 { 10.0 + p[1] } else { p[0] * t });
    let p = SupgParams::default();
    let s0 = solve(&disc, &part, &base, &p, 1, SolverKind::Direct).unwrap();
    let s1 = solve(&disc, &part, &changed, &p, 1, SolverKind::Direct).unwrap();
    assert_eq!(s0.coeffs[0], s1.coeffs[0]);
    assert_eq!(s0.coeffs[1], s1.coeffs[1]);
    assert_ne!(s0.coeffs[2], s1.coeffs[2]);
}

/// `(1 - z/3) / (1 + 2z/3 + z^2/6)`: amplification of upwind DG(1) for `y' = -z y / tau`.
fn dg1_amplification(z: f64) -> f64 {
    (1.0 - z / 3.0) / (1.0 + 2.0 * z / 3.0 + z * z / 6.0)
}

#[test]
fn heat_step_matches_separable_oracle() {
    let nx = 8;
    let t_final = 0.1;
    let n_slabs = 10;
    let disc = Discretization::new(generate_cartesian(nx, nx, BBox::unit()).unwrap(), 1).unwrap();
    let part = TimePartition::uniform(t_final, n_slabs).unwrap();
    let u0 = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
    let problem = ProblemData::new(1.0, t_final).with_initial(u0);
    let sol = solve(&disc, &part, &problem, &SupgParams::default(), 1, SolverKind::Direct).unwrap();
    let exact = ExactSolution::new(
        move |p, t| (-2.0 * PI * PI * t).exp() * u0(p),
        move |p, t| {
            let e = (-2.0 * PI * PI * t).exp() * PI;
            [e * (PI * p[0]).cos() * (PI * p[1]).sin(), e * (PI * p[0]).sin() * (PI * p[1]).cos()]
        },
    );
    let got = error_metrics(&disc, &sol, &exact, &problem.beta).e_l2_t;

    // 1D linear elements: the grid sine is a discrete eigenvector with
    // eigenvalue 6 (1 - cos pi h) / (h^2 (2 + cos pi h)), and the L2 projection
    // of sin(pi x) is the nodal sine times 12 (1 - cos pi h) / (pi h)^2 / (4 + 2 cos pi h).
    let h = 1.0 / nx as f64;
    let c = (PI * h).cos();
    let lam = 2.0 * 6.0 * (1.0 - c) / (h * h * (2.0 + c));
    let proj = 12.0 * (1.0 - c) / ((PI * h).powi(2) * (4.0 + 2.0 * c));
    let amp = proj * proj * dg1_amplification(lam * part.tau()).powi(n_slabs as i32);
    let nodal = disc.interpolate(u0);
    let scaled: Vec<Vec<Vec<f64>>> = sol
        .coeffs
        .iter()
        .map(|s| s.iter().map(|_| nodal.iter().map(|v| v * amp).collect()).collect())
        .collect();
    let predicted = error_metrics(&disc, &sol.with_coeffs(scaled), &exact, &problem.beta).e_l2_t;
    let ratio = got / predicted;
    assert!((0.5..=2.0).contains(&ratio), "got {got:e}, predicted {predicted:e}");
}

#[test]
fn quartic_bubble_patch_is_reproduced() {
    // (x - x^2)(y - y^2)(1 + t) has space degree 4, so it needs k = 4
    let u = |p: [f64; 2], t: f64| (p[0] - p[0] * p[0]) * (p[1] - p[1] * p[1]) * (1.0 + t);
    let grad = |p: [f64; 2], t: f64| {
        let (x, y) = (p[0], p[1]);
        [(1.0 - 2.0 * x) * (y - y * y) * (1.0 + t), (x - x * x) * (1.0 - 2.0 * y) * (1.0 + t)]
    };
    let problem = ProblemData::new(1.0, 1.0)
        .with_beta(|_, _| [1.0, 1.0])
        .with_source(move |p, t| {
            let (x, y) = (p[0], p[1]);
            let q = (x - x * x) * (y - y * y);
            let lap = -2.0 * (y - y * y) - 2.0 * (x - x * x);
            let g = grad(p, t);
            q - (1.0 + t) * lap + g[0] + g[1]
        })
        .with_initial(move |p| u(p, 0.0));
    let disc = Discretization::new(generate_cartesian(3, 3, BBox::unit()).unwrap(), 4).unwrap();
    let part = TimePartition::uniform(1.0, 2).unwrap();
    let sol = solve(&disc, &part, &problem, &SupgParams::default(), 1, SolverKind::Direct).unwrap();
    let rep = error_metrics(&disc, &sol, &ExactSolution::new(u, grad), &problem.beta);
    assert!(rep.e_energy_interp <= 1e-9, "{rep:?}");
    assert!(rep.e_l2_t <= 1e-9 && rep.e_h1_t <= 1e-9 && rep.e_h1_qt <= 1e-9, "{rep:?}");
    let norm = energy_norm(&disc, &sol, &problem.beta);
    assert!(norm.total().is_finite() && norm.total() > 0.0);
}
