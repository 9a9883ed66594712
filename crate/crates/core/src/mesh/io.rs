use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{signed_area, PolyMesh};
use crate::error::{Error, Result};
use crate::Point;

/// JSON layout: `{"name": ..., "vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolyMesh> for MeshFile {
    fn from(mesh: &PolyMesh) -> Self {
        Self {
            name: mesh.name().map(str::to_owned),
            vertices: mesh.vertices().to_vec(),
            cells: mesh.cells().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self, options: LoadOptions) -> Result<PolyMesh> {
        let MeshFile { name, vertices, mut cells } = self;
        if options.reorient {
            for cell in cells.iter_mut() {
                if cell.iter().all(|&v| v < vertices.len()) {
                    let poly: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
                    if signed_area(&poly) < 0.0 {
                        cell.reverse();
                    }
                }
            }
        }
        let mesh = PolyMesh::new(vertices, cells)?;
        Ok(match name {
            Some(n) => mesh.with_name(n),
            None => mesh,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reverse clockwise cells instead of rejecting them.
    pub reorient: bool,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    load_mesh_with(path, LoadOptions::default())
}

pub fn load_mesh_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<PolyMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let file: MeshFile = serde_json::from_str(&text).map_err(|e| Error::MeshParse {
        path: path.to_owned(),
        reason: e.to_string(),
    })?;
    file.into_mesh(options).map_err(|e| Error::MeshParse {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

pub fn save_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&MeshFile::from(mesh)).expect("mesh serializes");
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, BBox};

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = generate_cartesian(2, 2, BBox::new([0.1, -0.3], [1.7, 0.9])).unwrap();
        save_mesh(&m, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.name(), m.name());
    }

    #[test]
    fn missing_vertex_names_the_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,1,2,3],[1,2,9]]}"#,
        )
        .unwrap();
        let err = load_mesh(&path).unwrap_err().to_string();
        assert!(err.contains("cell 1") && err.contains("missing vertex 9"), "{err}");
    }

    #[test]
    fn clockwise_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cw.json");
        std::fs::write(&path, r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,3,2,1]]}"#).unwrap();
        let err = load_mesh(&path).unwrap_err().to_string();
        assert!(err.contains("clockwise"), "{err}");
        let m = load_mesh_with(&path, LoadOptions { reorient: true }).unwrap();
        assert_eq!(m.cells()[0], vec![1, 2, 3, 0]);
    }

    #[test]
    fn malformed_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.json");
        std::fs::write(&path, r#"{"vertices": [[0,0]], "cels": []}"#).unwrap();
        assert!(matches!(load_mesh(&path), Err(Error::MeshParse { .. })));
    }
}
