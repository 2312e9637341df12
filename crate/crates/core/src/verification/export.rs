//! JSON and CSV dumps of a discrete solution.
//!
//! JSON: `{ k, faces: [[c..]], elements: [[c..]], pressure: [[c..]], multiplier,
//! vertex_velocity: [[[x, y] per vertex] per element] }`, coefficients in the
//! local component-major ordering (component 0 block, then component 1 block).
//!
//! CSV: one row per entity, `entity,id,c0,c1,...` with entity one of `face`,
//! `element`, `pressure`, `vertex-velocity` (the latter flattened x0,y0,x1,y1,...).

use std::fmt::Write as _;

use serde::Serialize;

use super::flux::potential_samples;
use crate::assembly::DiscreteSolution;
use crate::error::Result;
use crate::localops::{CoefficientField, DiscretisationConfig};
use crate::mesh::PolygonalMesh;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionExport {
    pub k: usize,
    pub faces: Vec<Vec<f64>>,
    pub elements: Vec<Vec<f64>>,
    pub pressure: Vec<Vec<f64>>,
    pub multiplier: f64,
    pub vertex_velocity: Vec<Vec<[f64; 2]>>,
}

impl SolutionExport {
    pub fn new(
        mesh: &PolygonalMesh,
        cfg: &DiscretisationConfig,
        coeffs: &CoefficientField,
        sol: &DiscreteSolution,
    ) -> Result<Self> {
        let samples = potential_samples(mesh, cfg, coeffs, &sol.velocity)?;
        let to_vec = |v: &nalgebra::DVector<f64>| v.iter().copied().collect::<Vec<_>>();
        Ok(Self {
            k: cfg.k,
            faces: sol.velocity.faces.iter().map(to_vec).collect(),
            elements: sol.velocity.elements.iter().map(to_vec).collect(),
            pressure: sol.pressure.iter().map(to_vec).collect(),
            multiplier: sol.multiplier,
            vertex_velocity: samples.into_iter().map(|s| s.into_iter().map(|p| [p.x, p.y]).collect()).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("entity,id,values\n");
        let mut rows = |name: &str, data: &[Vec<f64>]| {
            for (i, row) in data.iter().enumerate() {
                let _ = write!(s, "{name},{i}");
                for v in row {
                    let _ = write!(s, ",{v:e}");
                }
                s.push('\n');
            }
        };
        rows("face", &self.faces);
        rows("element", &self.elements);
        rows("pressure", &self.pressure);
        let flat: Vec<Vec<f64>> =
            self.vertex_velocity.iter().map(|r| r.iter().flat_map(|p| p.iter().copied()).collect()).collect();
        rows("vertex-velocity", &flat);
        s
    }
}
