//! JSON mesh format: `{"vertices": [[x, y], ...], "cells": [[v0, v1, ...], ...], "subdomains": [...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Point, PolygonalMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub subdomains: Option<Vec<u32>>,
}

impl From<&PolygonalMesh> for MeshFile {
    fn from(m: &PolygonalMesh) -> Self {
        Self {
            vertices: m.vertices.iter().map(|v| [v.position.x, v.position.y]).collect(),
            cells: m.raw_cells(),
            subdomains: Some(m.subdomains()),
        }
    }
}

impl TryFrom<MeshFile> for PolygonalMesh {
    type Error = Error;

    fn try_from(f: MeshFile) -> Result<Self> {
        let n = f.cells.len();
        let subdomains = f.subdomains.unwrap_or_else(|| vec![0; n]);
        PolygonalMesh::new(f.vertices.iter().map(|p| Point::new(p[0], p[1])).collect(), f.cells, subdomains)
    }
}

pub fn mesh_to_json(mesh: &PolygonalMesh) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeshFile::from(mesh))?)
}

pub fn mesh_from_json(text: &str) -> Result<PolygonalMesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        reason: e.to_string(),
    })?;
    file.try_into()
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_json(mesh)?)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    mesh_from_json(&text).map_err(|e| match e {
        Error::Parse { location, reason } => Error::Parse { location: format!("{}: {location}", path.display()), reason },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian, generate_polygonal, PolygonalKind, Rectangle};

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = generate_cartesian(2, Rectangle::unit()).unwrap();
        save_mesh(&m, &path).unwrap();
        assert_eq!(load_mesh(&path).unwrap(), m);
        let p = generate_polygonal(4, PolygonalKind::PerturbedQuad, 3).unwrap();
        assert_eq!(mesh_from_json(&mesh_to_json(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn dangling_vertex_names_face() {
        let mut f = MeshFile::from(&generate_cartesian(2, Rectangle::unit()).unwrap());
        f.cells[1][2] = 99;
        let text = serde_json::to_string(&f).unwrap();
        match mesh_from_json(&text) {
            Err(Error::Parse { location, reason }) => {
                assert!(location.contains("face"), "{location}");
                assert!(reason.contains("99"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_cells_rejected() {
        let text = r#"{"vertices": [[0,0],[1,0],[0,1]], "cells": []}"#;
        assert!(matches!(mesh_from_json(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn malformed_json_reports_location() {
        assert!(matches!(mesh_from_json("{\"vertices\": [[0,0],"), Err(Error::Parse { .. })));
    }
}
