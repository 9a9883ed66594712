use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stdg_core::assembly::advection_matrix;
use stdg_core::mesh::{generate_cartesian, generate_triangulated, generate_voronoi, BBox, PolyMesh};
use stdg_core::quadrature::{edge_quadrature, polygon_quadrature};
use stdg_core::time_slab::{project_time, weight_phi, TimeBasis};
use stdg_core::{Discretization, Point};

/// Star-shaped polygon around the origin from sorted random angles.
fn star_polygon(angles: &[f64], radii: &[f64]) -> Vec<Point> {
    let mut a: Vec<(f64, f64)> = angles.iter().copied().zip(radii.iter().copied()).collect();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    a.into_iter().map(|(t, r)| [r * t.cos(), r * t.sin()]).collect()
}

/// Divergence theorem: integral of `x^a y^b` equals the boundary flux of
/// `(x^(a+1) y^b / (a+1), 0)`.
fn monomial_integral_by_boundary(poly: &[Point], a: i32, b: i32) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (pts, wts, _) = edge_quadrature(p, q, (a + b + 1) as usize);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let nx = (q[1] - p[1]) / len;
        for (x, w) in pts.iter().zip(&wts) {
            s += w * nx * x[0].powi(a + 1) * x[1].powi(b) / (a + 1) as f64;
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polygon_quadrature_is_exact(
        angles in prop::collection::btree_set(0u32..720, 3..9),
        radii in prop::collection::vec(0.4f64..1.2, 9),
        a in 0i32..6,
        b in 0i32..6,
    ) {
        let angles: Vec<f64> = angles.iter().map(|&t| t as f64 * std::f64::consts::PI / 360.0).collect();
        let poly = star_polygon(&angles, &radii[..angles.len()]);
        prop_assume!(stdg_core::mesh::signed_area(&poly) > 1e-3);
        let deg = (a + b) as usize;
        let rule = polygon_quadrature(&poly, [0.0, 0.0], deg).unwrap();
        let got = rule.integrate(|p| p[0].powi(a) * p[1].powi(b));
        let exact = monomial_integral_by_boundary(&poly, a, b);
        prop_assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{} vs {}", got, exact);
    }

    #[test]
    fn generated_meshes_tile_and_close(nx in 1usize..9, ny in 1usize..9, seed in 0u64..1000) {
        let bbox = BBox::new([0.0, 0.0], [1.5, 1.0]);
        let meshes = vec![
            generate_cartesian(nx, ny, bbox).unwrap(),
            generate_triangulated(nx, ny, bbox).unwrap(),
            generate_voronoi(nx * ny + 3, bbox, 2, seed).unwrap(),
        ];
        for m in meshes {
            check_manifold(&m, bbox.area());
        }
    }
}

fn check_manifold(m: &PolyMesh, area: f64) {
    assert!((m.total_area() - area).abs() <= 1e-10 * area);
    let mut uses = vec![0usize; m.num_edges()];
    for c in 0..m.num_cells() {
        assert!(stdg_core::mesh::signed_area(&m.cell_vertices(c)) > 0.0);
        for &e in m.cell_edges(c) {
            uses[e] += 1;
        }
    }
    for (e, edge) in m.edges().iter().enumerate() {
        let expect = if edge.is_boundary() { 1 } else { 2 };
        assert_eq!(uses[e], expect);
    }
    // Euler characteristic of a disc
    let chi = m.num_vertices() as isize - m.num_edges() as isize + m.num_cells() as isize;
    assert_eq!(chi, 1);
    assert!(m.h() >= m.h_min() && m.h_min() > 0.0);
}

#[test]
fn skew_advection_is_antisymmetric() {
    let beta: stdg_core::assembly::VectorField = std::sync::Arc::new(|p: Point, t: f64| {
        let s = (std::f64::consts::PI * (p[0] + p[1])).sin() * (0.5 * t).exp();
        [s, -s]
    });
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mesh in [
        generate_cartesian(4, 4, BBox::unit()).unwrap(),
        generate_voronoi(20, BBox::unit(), 3, 4).unwrap(),
    ] {
        for k in 1..=3 {
            let disc = Discretization::new(mesh.clone(), k).unwrap();
            let b = advection_matrix(&disc, &beta, 0.4);
            let x = DVector::from_fn(disc.n_dofs(), |_, _| rng.random_range(-1.0..1.0));
            let q = (x.transpose() * &b * &x)[0];
            let scale = b.norm() * x.norm_squared();
            assert!(q.abs() <= 1e-12 * scale, "k={k}: {q:e}");
            assert!((&b + b.transpose()).amax() <= 1e-12 * b.amax());
        }
    }
}

#[test]
fn lemma_orthogonality_of_time_projection() {
    // int_In s(u, (Id - P_r)(phi v)) dt = 0 for u in P_r and any fixed bilinear s
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mesh = generate_voronoi(12, BBox::unit(), 2, 9).unwrap();
    let disc = Discretization::new(mesh, 2).unwrap();
    let n = disc.elements[5].ndof();
    let t_final = 2.0;
    for r in 0..=3 {
        let basis = TimeBasis::new(0.6, 0.9, r).unwrap();
        let nt = basis.len();
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = &raw + raw.transpose();
        let u: Vec<DVector<f64>> = (0..nt).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
        let v: Vec<DVector<f64>> = (0..nt).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
        let at = |c: &[DVector<f64>], t: f64| {
            let psi = basis.eval(t);
            c.iter().zip(&psi).fold(DVector::zeros(n), |acc, (x, p)| acc + x * *p)
        };
        let proj: Vec<Vec<f64>> = (0..n)
            .map(|i| project_time(|t| weight_phi(t, t_final) * at(&v, t)[i], &basis))
            .collect();
        let (tq, wq) = basis.quadrature(2 * r + 8);
        let mut integral = 0.0;
        let mut scale = 0.0;
        for (&t, &w) in tq.iter().zip(&wq) {
            let psi = basis.eval(t);
            let phv = at(&v, t) * weight_phi(t, t_final);
            let pv = DVector::from_fn(n, |i, _| proj[i].iter().zip(&psi).map(|(c, p)| c * p).sum());
            let ut = at(&u, t);
            integral += w * (ut.transpose() * &s * (&phv - pv))[0];
            scale += w * s.norm() * ut.norm() * phv.norm();
        }
        assert!(integral.abs() <= 1e-10 * scale, "r={r}: {integral:e} vs {scale:e}");
    }
}

#[test]
fn time_integration_by_parts() {
    for r in 0..=5 {
        let b = TimeBasis::new(0.3, 1.1, r).unwrap();
        for a in 0..b.len() {
            for c in 0..b.len() {
                let lhs = b.deriv[(a, c)] + b.deriv[(c, a)];
                let rhs = b.e_right[a] * b.e_right[c] - b.e_left[a] * b.e_left[c];
                assert!((lhs - rhs).abs() <= 1e-13, "r={r}");
            }
        }
    }
}
