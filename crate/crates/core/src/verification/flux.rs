//! Interface flux and vertex samples of the velocity reconstructions.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::assembly::VelocityDofs;
use crate::error::{Error, Result};
use crate::localops::context::face_basis;
use crate::localops::{element_operators, CoefficientField, DiscretisationConfig};
use crate::mesh::{Point, PolygonalMesh};
use crate::polyspace::PolyBasis;

/// Straight interface segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    /// True when `p` lies on the segment up to `tol` (relative to its length).
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        let t = (p - self.a).dot(&d) / len2;
        let off = (p - self.a - d * t).norm();
        off <= tol * len2.sqrt() && (-tol..=1.0 + tol).contains(&t)
    }
}

/// sum_F int_F u_F . n_gamma over `faces`, all of which must lie on `gamma`.
pub fn interface_flux(
    mesh: &PolygonalMesh,
    cfg: &DiscretisationConfig,
    v: &VelocityDofs,
    faces: &[usize],
    gamma: Segment,
    n_gamma: Point,
) -> Result<f64> {
    let d = gamma.b - gamma.a;
    if (n_gamma.norm() - 1.0).abs() > 1e-12 || n_gamma.dot(&d).abs() > 1e-12 * d.norm() {
        return Err(Error::Config("interface normal must be a unit vector orthogonal to the interface".into()));
    }
    let nf = cfg.k + 1;
    let mut total = 0.0;
    for &f in faces {
        if f >= mesh.n_faces() {
            return Err(Error::Config(format!("face {f} does not exist")));
        }
        let [a, b] = mesh.faces[f].endpoints(mesh);
        if !(gamma.contains(&a, 1e-12) && gamma.contains(&b, 1e-12)) {
            return Err(Error::Config(format!("face {f} does not lie on the interface")));
        }
        let (fb, fq) = face_basis(mesh, f, cfg)?;
        let c = &v.faces[f];
        for (p, w) in fq.iter() {
            let s = fb.eval(p);
            total += w * (s.dot(&c.rows(0, nf)) * n_gamma.x + s.dot(&c.rows(nf, nf)) * n_gamma.y);
        }
    }
    Ok(total)
}

/// Per element, the velocity reconstruction evaluated at its vertices: P_S on
/// Stokes-dominated elements, P_D on Darcy-dominated ones.
pub fn potential_samples(
    mesh: &PolygonalMesh,
    cfg: &DiscretisationConfig,
    coeffs: &CoefficientField,
    v: &VelocityDofs,
) -> Result<Vec<Vec<Point>>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let (ctx, ops) = element_operators(mesh, e, coeffs, cfg)?;
            let x = v.local(mesh, e);
            let c: DVector<f64> =
                if ops.friction.stokes_dominated() { &ops.stokes_potential * &x } else { &ops.darcy_potential * &x };
            Ok(mesh.elements[e].vertices.iter().map(|&i| ctx.eval_vector(&c, &mesh.vertices[i].position)).collect())
        })
        .collect()
}

/// Average over adjacent elements of the per-element vertex samples.
pub fn vertex_averages(mesh: &PolygonalMesh, samples: &[Vec<Point>]) -> Vec<Point> {
    let mut sum = vec![Point::zeros(); mesh.vertices.len()];
    let mut count = vec![0usize; mesh.vertices.len()];
    for (el, vals) in mesh.elements.iter().zip(samples) {
        for (&i, val) in el.vertices.iter().zip(vals) {
            sum[i] += val;
            count[i] += 1;
        }
    }
    sum.into_iter().zip(count).map(|(s, c)| if c > 0 { s / c as f64 } else { s }).collect()
}
