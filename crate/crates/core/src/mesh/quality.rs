use super::PolyMesh;
use crate::Point;

/// Per-cell shape-regularity measures.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeshQualityReport {
    /// Radius of the largest ball the cell is star-shaped with respect to, over `h_K`.
    pub rho_star_estimate: Vec<f64>,
    /// Shortest edge over `h_K`.
    pub min_edge_ratio: Vec<f64>,
    /// Cell attaining the smallest of all ratios.
    pub worst_cell: usize,
    pub threshold: f64,
    /// Cells where either ratio falls below `threshold`.
    pub violations: Vec<usize>,
}

impl MeshQualityReport {
    pub fn min_rho_star(&self) -> f64 {
        self.rho_star_estimate.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_edge(&self) -> f64 {
        self.min_edge_ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_regular(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Radius of the largest disc contained in the intersection of the inner
/// half-planes of all edges of a counterclockwise polygon.
///
/// That intersection is the kernel of the polygon, so the disc is the largest
/// one the polygon is star-shaped with respect to. For convex cells it is the
/// inscribed disc. Returns 0 when the kernel is empty.
pub fn chebyshev_radius(poly: &[Point]) -> f64 {
    let n = poly.len();
    // inward unit normal and offset: n_i . x - r >= c_i
    let lines: Vec<([f64; 2], f64)> = (0..n)
        .filter_map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = d[0].hypot(d[1]);
            (len > 0.0).then(|| {
                let nrm = [-d[1] / len, d[0] / len];
                (nrm, nrm[0] * a[0] + nrm[1] * a[1])
            })
        })
        .collect();
    let scale = poly.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1e-300, f64::max);
    let mut best: f64 = 0.0;
    let m = lines.len();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                let rows = [lines[i], lines[j], lines[k]];
                let mat = nalgebra::Matrix3::new(
                    rows[0].0[0], rows[0].0[1], -1.0,
                    rows[1].0[0], rows[1].0[1], -1.0,
                    rows[2].0[0], rows[2].0[1], -1.0,
                );
                let rhs = nalgebra::Vector3::new(rows[0].1, rows[1].1, rows[2].1);
                let Some(sol) = mat.lu().solve(&rhs) else { continue };
                let (x, y, r) = (sol[0], sol[1], sol[2]);
                if !(r > best) || !r.is_finite() {
                    continue;
                }
                let feasible = lines
                    .iter()
                    .all(|(nrm, c)| nrm[0] * x + nrm[1] * y - r >= c - 1e-12 * scale);
                if feasible {
                    best = r;
                }
            }
        }
    }
    best
}

/// Measures every cell against the star-shapedness and short-edge ratios;
/// cells below `rho` are listed as violations.
pub fn check_regularity(mesh: &PolyMesh, rho: f64) -> MeshQualityReport {
    let mut rho_star = Vec::with_capacity(mesh.num_cells());
    let mut edge_ratio = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let poly = mesh.cell_vertices(c);
        let hk = mesh.geometry(c).diameter;
        rho_star.push(chebyshev_radius(&poly) / hk);
        let n = poly.len();
        let emin = (0..n)
            .map(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(f64::INFINITY, f64::min);
        edge_ratio.push(emin / hk);
    }
    let mut worst_cell = 0;
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for c in 0..rho_star.len() {
        let v = rho_star[c].min(edge_ratio[c]);
        if v < worst {
            worst = v;
            worst_cell = c;
        }
        if v < rho {
            violations.push(c);
        }
    }
    MeshQualityReport {
        rho_star_estimate: rho_star,
        min_edge_ratio: edge_ratio,
        worst_cell,
        threshold: rho,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_voronoi, BBox};
    use approx::assert_relative_eq;

    #[test]
    fn square_and_triangle_ratios() {
        let sq = PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let rep = check_regularity(&sq, 0.01);
        assert_relative_eq!(rep.min_edge_ratio[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(rep.rho_star_estimate[0], 0.5 / 2f64.sqrt(), epsilon = 1e-14);

        let tri = PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.75f64.sqrt()]],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let rep = check_regularity(&tri, 0.01);
        assert_relative_eq!(rep.min_edge_ratio[0], 1.0, epsilon = 1e-15);
        // inradius of the unit equilateral triangle
        assert_relative_eq!(rep.rho_star_estimate[0], 3f64.sqrt() / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_of_non_convex_cell() {
        // L-shape: kernel is the unit square [0,1]^2 corner block
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert_relative_eq!(chebyshev_radius(&l), 0.5, epsilon = 1e-14);
        // a thin "comb" whose kernel is empty
        let comb = [
            [0.0, 0.0], [3.0, 0.0], [3.0, 2.0], [2.5, 2.0], [2.5, 0.2],
            [0.5, 0.2], [0.5, 2.0], [0.0, 2.0],
        ];
        assert_eq!(chebyshev_radius(&comb), 0.0);
    }

    #[test]
    fn voronoi_report() {
        let m = generate_voronoi(16, BBox::unit(), 3, 42).unwrap();
        let rep = check_regularity(&m, 0.01);
        assert_eq!(rep.rho_star_estimate.len(), 16);
        for c in 0..16 {
            assert!(rep.rho_star_estimate[c] > 0.0 && rep.rho_star_estimate[c] <= 1.0);
            assert!(rep.min_edge_ratio[c] > 0.0 && rep.min_edge_ratio[c] <= 1.0);
        }
        let strict = check_regularity(&m, 0.99);
        assert!(!strict.is_regular());
        assert!(strict.violations.contains(&strict.worst_cell));
    }
}
