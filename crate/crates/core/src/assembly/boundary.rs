//! Dirichlet data on boundary faces and the data compatibility check.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localops::context::face_basis;
use crate::localops::DiscretisationConfig;
use crate::mesh::{Point, PolygonalMesh};
use crate::polyspace::{element_quadrature, face_quadrature, l2_project, PolyBasis, QuadRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    Homogeneous,
    InterpolatedTrace,
}

/// Degree of the rules used for data integrals (traces and compatibility).
pub(crate) fn data_quad_degree(k: usize) -> usize {
    (2 * k + 5).max(20)
}

/// High-degree rule on face `f` for projecting non-polynomial traces.
pub(crate) fn trace_quadrature(mesh: &PolygonalMesh, f: usize, k: usize) -> QuadRule {
    face_quadrature(mesh, f, data_quad_degree(k))
}

/// Prescribed vP^k(F) values on every boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub mode: BoundaryMode,
    pub k: usize,
    /// When set, boundary faces of interpolates used for error measures carry
    /// these prescribed values (zero in homogeneous mode) instead of the trace.
    pub pure_darcy_convention: bool,
    values: BTreeMap<usize, DVector<f64>>,
}

impl BoundaryData {
    pub fn homogeneous(mesh: &PolygonalMesh, k: usize) -> Self {
        let values = mesh.faces.iter().filter(|f| f.boundary).map(|f| (f.id, DVector::zeros(2 * (k + 1)))).collect();
        Self { mode: BoundaryMode::Homogeneous, k, pure_darcy_convention: false, values }
    }

    /// Face L2 projections of the trace of `u`.
    pub fn interpolated_trace(
        mesh: &PolygonalMesh,
        cfg: &DiscretisationConfig,
        u: &(dyn Fn(&Point) -> Point + Sync),
    ) -> Result<Self> {
        let k = cfg.k;
        let mut values = BTreeMap::new();
        for face in mesh.faces.iter().filter(|f| f.boundary) {
            let (fb, _) = face_basis(mesh, face.id, cfg)?;
            let fq = trace_quadrature(mesh, face.id, k);
            let cx = l2_project(|p| u(p).x, &fb, k + 1, &fq)?;
            let cy = l2_project(|p| u(p).y, &fb, k + 1, &fq)?;
            let mut v = DVector::zeros(2 * (k + 1));
            v.rows_mut(0, k + 1).copy_from(&cx);
            v.rows_mut(k + 1, k + 1).copy_from(&cy);
            values.insert(face.id, v);
        }
        Ok(Self { mode: BoundaryMode::InterpolatedTrace, k, pure_darcy_convention: false, values })
    }

    pub fn with_pure_darcy_convention(mut self, on: bool) -> Self {
        self.pure_darcy_convention = on;
        self
    }

    pub fn face_values(&self, face: usize) -> Option<&DVector<f64>> {
        self.values.get(&face)
    }

    pub fn set_face_values(&mut self, face: usize, v: DVector<f64>) -> Result<()> {
        if v.len() != 2 * (self.k + 1) {
            return Err(Error::Config(format!("face {face}: expected {} coefficients, got {}", 2 * (self.k + 1), v.len())));
        }
        match self.values.get_mut(&face) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(Error::Config(format!("face {face} is not a boundary face"))),
        }
    }

    pub fn faces(&self) -> impl Iterator<Item = (usize, &DVector<f64>)> {
        self.values.iter().map(|(&f, v)| (f, v))
    }

    /// Net outward flux sum_F int_F u_F . n of the prescribed values.
    pub fn boundary_flux(&self, mesh: &PolygonalMesh, cfg: &DiscretisationConfig) -> Result<f64> {
        let nf = self.k + 1;
        let mut total = 0.0;
        for (&f, v) in &self.values {
            let face = &mesh.faces[f];
            let (fb, fq) = face_basis(mesh, f, cfg)?;
            for (p, w) in fq.iter() {
                let s = fb.eval(p);
                let val = Point::new(s.dot(&v.rows(0, nf)), s.dot(&v.rows(nf, nf)));
                total += w * val.dot(&face.normal);
            }
        }
        Ok(total)
    }
}

/// Checks int_Omega g = int_{boundary} u_D . n with a high-degree rule.
pub fn check_compatibility(
    mesh: &PolygonalMesh,
    g: &(dyn Fn(&Point) -> f64 + Sync),
    boundary: &BoundaryData,
    cfg: &DiscretisationConfig,
) -> Result<()> {
    let degree = data_quad_degree(cfg.k);
    let mut int_g = 0.0;
    let mut int_abs = 0.0;
    for e in 0..mesh.n_elements() {
        for (p, w) in element_quadrature(mesh, e, degree)?.iter() {
            let v = g(p);
            int_g += w * v;
            int_abs += w * v.abs();
        }
    }
    let flux = boundary.boundary_flux(mesh, cfg)?;
    let tol = 1e-10 * int_abs.max(1.0);
    if (int_g - flux).abs() > tol {
        return Err(Error::Compatibility(format!(
            "int g = {int_g:.6e} differs from boundary flux {flux:.6e} by more than {tol:.1e}"
        )));
    }
    Ok(())
}
