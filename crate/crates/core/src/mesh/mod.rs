//! Polygonal meshes of a 2D domain.
//!
//! A [`PolyMesh`] is validated on construction (counterclockwise simple cells,
//! manifold edges, no unused vertices) and is immutable afterwards.

mod generate;
mod io;
mod quality;

use std::collections::HashMap;

pub use generate::{generate_cartesian, generate_triangulated, generate_voronoi};
pub use io::{load_mesh, load_mesh_with, save_mesh, LoadOptions, MeshFile};
pub use quality::{check_regularity, chebyshev_radius, MeshQualityReport};

use crate::error::{Error, Result};
use crate::Point;

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn unit() -> Self {
        Self::new([0.0, 0.0], [1.0, 1.0])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    fn from_points(points: &[Point]) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Self { min, max }
    }
}

/// Geometric data of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

/// Undirected edge; `vertices` are stored with the smaller index first.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub cells: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Signed area by the shoelace formula.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

/// Area, centroid and diameter of a counterclockwise polygon.
pub fn polygon_geometry(poly: &[Point]) -> Result<CellGeometry> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::InvalidMesh(format!("polygon with {n} vertices")));
    }
    // shift by the first vertex to limit cancellation
    let o = poly[0];
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let q = [poly[(i + 1) % n][0] - o[0], poly[(i + 1) % n][1] - o[1]];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    a *= 0.5;
    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max((poly[i][0] - poly[j][0]).hypot(poly[i][1] - poly[j][1]));
        }
    }
    if a.abs() <= 1e-14 * diameter * diameter || a == 0.0 {
        return Err(Error::InvalidMesh("zero-area polygon".into()));
    }
    Ok(CellGeometry {
        area: a,
        centroid: [o[0] + cx / (6.0 * a), o[1] + cy / (6.0 * a)],
        diameter,
    })
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    fn orient(a: Point, b: Point, c: Point) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    fn on_segment(a: Point, b: Point, c: Point) -> bool {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct PolyMesh {
    name: Option<String>,
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
    geometry: Vec<CellGeometry>,
    boundary_vertex: Vec<bool>,
    h: f64,
    h_min: f64,
    bbox: BBox,
}

impl PolyMesh {
    /// Builds and validates a mesh. Cells must be counterclockwise vertex cycles.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        let mut geometry = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: format!("only {} vertices", cell.len()),
                });
            }
            for &v in cell {
                if v >= nv {
                    return Err(Error::InvalidCell {
                        cell: c,
                        reason: format!("references missing vertex {v} (mesh has {nv} vertices)"),
                    });
                }
                used[v] = true;
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "repeated vertex".into(),
                });
            }
            let poly: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&poly);
            if area < 0.0 {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "clockwise orientation".into(),
                });
            }
            if !is_simple(&poly) {
                return Err(Error::InvalidCell {
                    cell: c,
                    reason: "self-intersecting polygon".into(),
                });
            }
            let geo = polygon_geometry(&poly).map_err(|_| Error::InvalidCell {
                cell: c,
                reason: "zero area".into(),
            })?;
            geometry.push(geo);
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any cell")));
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        // orientation of the first owner, to detect inconsistent neighbours
        let mut first_dir: Vec<bool> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ce = Vec::with_capacity(n);
            for i in 0..n {
                let a = cell[i];
                let b = cell[(i + 1) % n];
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                match edge_index.get(&key) {
                    None => {
                        edge_index.insert(key, edges.len());
                        ce.push(edges.len());
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            cells: [Some(c), None],
                        });
                        first_dir.push(forward);
                    }
                    Some(&e) => {
                        if edges[e].cells[1].is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if first_dir[e] == forward {
                            return Err(Error::InvalidMesh(format!(
                                "cells {} and {c} traverse edge ({}, {}) in the same direction",
                                edges[e].cells[0].unwrap(),
                                key.0,
                                key.1
                            )));
                        }
                        edges[e].cells[1] = Some(c);
                        ce.push(e);
                    }
                }
            }
            cell_edges.push(ce);
        }
        let mut boundary_vertex = vec![false; nv];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }
        let h = geometry.iter().map(|g| g.diameter).fold(0.0, f64::max);
        let h_min = geometry.iter().map(|g| g.diameter).fold(f64::INFINITY, f64::min);
        let bbox = BBox::from_points(&vertices);
        Ok(Self {
            name: None,
            vertices,
            cells,
            edges,
            cell_edges,
            geometry,
            boundary_vertex,
            h,
            h_min,
            bbox,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edge ids of a cell, local edge `i` joining local vertices `i` and `i + 1`.
    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn cell_vertices(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Smallest cell diameter.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Area, centroid and diameter of `cell`.
    pub fn cell_geometry(&self, cell: usize) -> Result<(f64, Point, f64)> {
        let g = self
            .geometry
            .get(cell)
            .ok_or_else(|| Error::InvalidParameter(format!("cell index {cell} out of range")))?;
        Ok((g.area, g.centroid, g.diameter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn triangle_geometry() {
        let g = polygon_geometry(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_relative_eq!(g.area, 0.5, epsilon = 1e-16);
        assert_relative_eq!(g.centroid[0], 1.0 / 3.0, epsilon = 1e-16);
        assert_relative_eq!(g.centroid[1], 1.0 / 3.0, epsilon = 1e-16);
        assert_relative_eq!(g.diameter, 2f64.sqrt(), epsilon = 1e-16);
    }

    #[test]
    fn square_geometry() {
        let g = polygon_geometry(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_relative_eq!(g.area, 1.0, epsilon = 1e-16);
        assert_relative_eq!(g.centroid[0], 0.5, epsilon = 1e-16);
        assert_relative_eq!(g.centroid[1], 0.5, epsilon = 1e-16);
        assert_relative_eq!(g.diameter, 2f64.sqrt(), epsilon = 1e-16);
    }

    #[test]
    fn hexagon_area() {
        let hex: Vec<Point> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let g = polygon_geometry(&hex).unwrap();
        assert!((g.area - 1.5 * 3f64.sqrt()).abs() < 1e-12);
        assert!(g.centroid[0].abs() < 1e-15 && g.centroid[1].abs() < 1e-15);
    }

    #[test]
    fn zero_area_cell_is_an_error() {
        assert!(polygon_geometry(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        let err = PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![vec![0, 1, 2]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("cell 0"), "{err}");
    }

    #[test]
    fn rejects_bad_connectivity() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let cw = PolyMesh::new(v.clone(), vec![vec![0, 3, 2, 1]]).unwrap_err();
        assert!(cw.to_string().contains("clockwise"));
        let missing = PolyMesh::new(v.clone(), vec![vec![0, 1, 7]]).unwrap_err();
        assert!(missing.to_string().contains("cell 0") && missing.to_string().contains('7'));
        let bowtie = PolyMesh::new(
            vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [1.0, 4.0], [3.0, -1.0]],
            vec![vec![0, 1, 2, 3, 4]],
        );
        assert!(bowtie.unwrap_err().to_string().contains("self-intersecting"));
        // three triangles on one edge
        let fan = PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]],
            vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]],
        );
        assert!(fan.is_err());
    }

    #[test]
    fn edges_and_boundary_flags() {
        let m = generate_cartesian(2, 2, BBox::unit()).unwrap();
        assert_eq!(m.num_edges(), 12);
        assert_eq!(m.edges().iter().filter(|e| e.is_boundary()).count(), 8);
        assert!(!m.is_boundary_vertex(4));
        assert!(m.is_boundary_vertex(0));
    }
}
