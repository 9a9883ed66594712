use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{polygon_geometry, BBox, PolyMesh};
use crate::error::{Error, Result};
use crate::Point;

/// `nx` by `ny` rectangles on `bbox`, vertices numbered row by row.
pub fn generate_cartesian(nx: usize, ny: usize, bbox: BBox) -> Result<PolyMesh> {
    let vertices = grid_vertices(nx, ny, bbox)?;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v0 = j * (nx + 1) + i;
            cells.push(vec![v0, v0 + 1, v0 + nx + 2, v0 + nx + 1]);
        }
    }
    Ok(PolyMesh::new(vertices, cells)?.with_name(format!("cartesian-{nx}x{ny}")))
}

/// Cartesian grid with every rectangle split into two triangles.
pub fn generate_triangulated(nx: usize, ny: usize, bbox: BBox) -> Result<PolyMesh> {
    let vertices = grid_vertices(nx, ny, bbox)?;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v0 = j * (nx + 1) + i;
            cells.push(vec![v0, v0 + 1, v0 + nx + 2]);
            cells.push(vec![v0, v0 + nx + 2, v0 + nx + 1]);
        }
    }
    Ok(PolyMesh::new(vertices, cells)?.with_name(format!("triangles-{nx}x{ny}")))
}

fn grid_vertices(nx: usize, ny: usize, bbox: BBox) -> Result<Vec<Point>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be positive, got {nx}x{ny}"
        )));
    }
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::InvalidParameter("empty bounding box".into()));
    }
    let dx = bbox.width() / nx as f64;
    let dy = bbox.height() / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // pin the last row/column to the box to keep the tiling exact
            let x = if i == nx { bbox.max[0] } else { bbox.min[0] + i as f64 * dx };
            let y = if j == ny { bbox.max[1] } else { bbox.min[1] + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    Ok(vertices)
}

/// Clipped Voronoi diagram of `n_seeds` uniformly drawn seeds, after
/// `relax_iters` Lloyd steps. Deterministic for a fixed `rng_seed`.
pub fn generate_voronoi(n_seeds: usize, bbox: BBox, relax_iters: usize, rng_seed: u64) -> Result<PolyMesh> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("n_seeds must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Point> = (0..n_seeds)
        .map(|_| {
            [
                bbox.min[0] + rng.random::<f64>() * bbox.width(),
                bbox.min[1] + rng.random::<f64>() * bbox.height(),
            ]
        })
        .collect();
    Ok(voronoi_from_seeds(seeds, bbox, relax_iters)?.with_name(format!("voronoi-{n_seeds}-s{rng_seed}")))
}

/// Clipped Voronoi mesh of the given seeds (with optional Lloyd relaxation).
pub fn voronoi_from_seeds(mut seeds: Vec<Point>, bbox: BBox, relax_iters: usize) -> Result<PolyMesh> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds".into()));
    }
    if let Some(p) = seeds.iter().find(|p| !bbox.contains(**p)) {
        return Err(Error::DegenerateSeeds(format!("seed {p:?} lies outside the box")));
    }
    let mut grid = SeedGrid::new(&seeds, bbox);
    grid.check_duplicates(&seeds, 1e-12 * bbox.diagonal())?;
    let mut polys = voronoi_cells(&seeds, &grid, bbox);
    for _ in 0..relax_iters {
        seeds = polys
            .iter()
            .zip(&seeds)
            .map(|(poly, &s)| polygon_geometry(poly).map(|g| g.centroid).unwrap_or(s))
            .collect();
        grid = SeedGrid::new(&seeds, bbox);
        grid.check_duplicates(&seeds, 1e-12 * bbox.diagonal())?;
        polys = voronoi_cells(&seeds, &grid, bbox);
    }
    stitch(&polys, 1e-10 * bbox.diagonal())
}

struct SeedGrid {
    n: usize,
    min: Point,
    cell: [f64; 2],
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Point], bbox: BBox) -> Self {
        let n = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let cell = [bbox.width() / n as f64, bbox.height() / n as f64];
        let mut buckets = vec![Vec::new(); n * n];
        let mut grid = Self {
            n,
            min: bbox.min,
            cell,
            buckets: Vec::new(),
        };
        for (i, &s) in seeds.iter().enumerate() {
            let (ix, iy) = grid.locate(s);
            buckets[iy * n + ix].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn locate(&self, p: Point) -> (usize, usize) {
        let ix = (((p[0] - self.min[0]) / self.cell[0]) as usize).min(self.n - 1);
        let iy = (((p[1] - self.min[1]) / self.cell[1]) as usize).min(self.n - 1);
        (ix, iy)
    }

    /// Seed indices in the square ring at Chebyshev distance `r` of `(cx, cy)`.
    fn ring(&self, cx: usize, cy: usize, r: usize, out: &mut Vec<usize>) {
        let (cx, cy, r, n) = (cx as isize, cy as isize, r as isize, self.n as isize);
        for iy in (cy - r)..=(cy + r) {
            if iy < 0 || iy >= n {
                continue;
            }
            for ix in (cx - r)..=(cx + r) {
                if ix < 0 || ix >= n {
                    continue;
                }
                if (ix - cx).abs() != r && (iy - cy).abs() != r {
                    continue;
                }
                out.extend_from_slice(&self.buckets[(iy * n + ix) as usize]);
            }
        }
    }

    fn check_duplicates(&self, seeds: &[Point], tol: f64) -> Result<()> {
        let mut near = Vec::new();
        for (i, &s) in seeds.iter().enumerate() {
            let (cx, cy) = self.locate(s);
            near.clear();
            self.ring(cx, cy, 0, &mut near);
            self.ring(cx, cy, 1, &mut near);
            for &j in &near {
                if j != i && dist(s, seeds[j]) <= tol {
                    return Err(Error::DegenerateSeeds(format!(
                        "seeds {} and {} coincide at ({}, {})",
                        i.min(j),
                        i.max(j),
                        s[0],
                        s[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn voronoi_cells(seeds: &[Point], grid: &SeedGrid, bbox: BBox) -> Vec<Vec<Point>> {
    let rect = vec![
        bbox.min,
        [bbox.max[0], bbox.min[1]],
        bbox.max,
        [bbox.min[0], bbox.max[1]],
    ];
    let cmin = grid.cell[0].min(grid.cell[1]);
    let tol = 1e-12 * bbox.diagonal();
    let mut near = Vec::new();
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut poly = rect.clone();
            let (cx, cy) = grid.locate(s);
            for r in 0..=grid.n {
                let radius = poly.iter().map(|&p| dist(p, s)).fold(0.0, f64::max);
                if r >= 2 && (r - 1) as f64 * cmin > 2.0 * radius {
                    break;
                }
                near.clear();
                grid.ring(cx, cy, r, &mut near);
                // fixed processing order keeps the output bit-reproducible
                near.sort_unstable();
                for &j in &near {
                    if j != i {
                        poly = clip_bisector(&poly, s, seeds[j], tol);
                    }
                }
            }
            poly
        })
        .collect()
}

/// Keeps the part of the convex polygon closer to `s` than to `t`.
fn clip_bisector(poly: &[Point], s: Point, t: Point, tol: f64) -> Vec<Point> {
    let m = [0.5 * (s[0] + t[0]), 0.5 * (s[1] + t[1])];
    let d = [t[0] - s[0], t[1] - s[1]];
    let side = |p: Point| (p[0] - m[0]) * d[0] + (p[1] - m[1]) * d[1];
    let n = poly.len();
    let mut out: Vec<Point> = Vec::with_capacity(n + 1);
    let push = |p: Point, out: &mut Vec<Point>| {
        if out.last().is_none_or(|&q| dist(p, q) > tol) {
            out.push(p);
        }
    };
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let fa = side(a);
        let fb = side(b);
        if fa <= 0.0 {
            push(a, &mut out);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], &mut out);
        }
    }
    while out.len() > 1 && dist(out[0], *out.last().unwrap()) <= tol {
        out.pop();
    }
    out
}

/// Merges coincident polygon corners into shared vertices.
fn stitch(polys: &[Vec<Point>], tol: f64) -> Result<PolyMesh> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Point| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
    let mut cells = Vec::with_capacity(polys.len());
    for (c, poly) in polys.iter().enumerate() {
        let mut cell: Vec<usize> = Vec::with_capacity(poly.len());
        for &p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = lookup.get(&(kx + dx, ky + dy)) {
                        for &v in list {
                            if dist(vertices[v], p) <= tol {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if cell.last() != Some(&v) {
                cell.push(v);
            }
        }
        while cell.len() > 1 && cell.first() == cell.last() {
            cell.pop();
        }
        if cell.len() < 3 {
            return Err(Error::DegenerateSeeds(format!("Voronoi cell {c} collapsed")));
        }
        cells.push(cell);
    }
    PolyMesh::new(vertices, cells)
}
