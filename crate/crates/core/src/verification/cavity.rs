//! Lid-driven cavity embedded in a porous box.
//!
//! Domain (-1, 2) x (-2, 0). The cavity (0, 1) x (-1, 0) is pure Stokes with
//! mu = 1e-2; a wedge {1 < x < 2, (x - 1) / 4 - 3/4 < y < 0} on its right is pure
//! Darcy with nu = 1e2 and the rest of the box is pure Darcy with nu = 1e7. The
//! lid u = (x(1 - x), 0) drives the flow on {y = 0, 0 < x < 1}; f = (0, -0.98g).

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use super::errors::{mesh_size, RunOptions};
use super::flux::{interface_flux, potential_samples, vertex_averages, Segment};
use crate::assembly::{discretise, BoundaryData, DiscreteSolution, Discretisation, Sources};
use crate::error::{Error, Result};
use crate::localops::{CoefficientField, DiscretisationConfig, Medium};
use crate::mesh::{generate_cartesian_grid, Point, PolygonalMesh, Rectangle};

pub const CAVITY_DOMAIN: Rectangle = Rectangle { x0: -1.0, x1: 2.0, y0: -2.0, y1: 0.0 };
pub const LID_SPEED: f64 = 0.25;
pub const CAVITY: u32 = 0;
pub const WEDGE: u32 = 1;
pub const BOX: u32 = 2;

/// Interface between the cavity and the wedge.
pub fn interface() -> Segment {
    Segment::new(Point::new(1.0, -0.75), Point::new(1.0, 0.0))
}

pub fn media() -> BTreeMap<u32, Medium> {
    BTreeMap::from([
        (CAVITY, Medium { mu: 1e-2, nu: 0.0 }),
        (WEDGE, Medium { mu: 0.0, nu: 1e2 }),
        (BOX, Medium { mu: 0.0, nu: 1e7 }),
    ])
}

/// Region of a point; the wedge is resolved by element centroids.
pub fn region(c: &Point) -> u32 {
    if (0.0..1.0).contains(&c.x) && (-1.0..0.0).contains(&c.y) {
        CAVITY
    } else if c.x > 1.0 && c.y > 0.25 * (c.x - 1.0) - 0.75 {
        WEDGE
    } else {
        BOX
    }
}

/// Labelled `12m x 8m` Cartesian grid (cell size 0.25 / m).
pub fn cavity_mesh(m: usize) -> Result<PolygonalMesh> {
    if m == 0 {
        return Err(Error::InvalidParameter { name: "level", reason: "must be at least 1".into() });
    }
    let mut mesh = generate_cartesian_grid(12 * m, 8 * m, CAVITY_DOMAIN)?;
    mesh.relabel_subdomains(region);
    Ok(mesh)
}

/// Driving data; `zero()` switches both off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityData {
    /// Multiplier of the lid profile x(1 - x).
    pub lid: f64,
    /// Downward body force magnitude.
    pub gravity: f64,
}

impl Default for CavityData {
    fn default() -> Self {
        Self { lid: 1.0, gravity: 0.98 }
    }
}

impl CavityData {
    pub fn zero() -> Self {
        Self { lid: 0.0, gravity: 0.0 }
    }

    pub fn boundary_velocity(&self, p: &Point) -> Point {
        if p.y.abs() < 1e-12 && (0.0..=1.0).contains(&p.x) {
            Point::new(self.lid * p.x * (1.0 - p.x), 0.0)
        } else {
            Point::zeros()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityResult {
    pub level: usize,
    pub k: usize,
    pub mesh_size: f64,
    pub n_elements: usize,
    pub condensed_dofs: usize,
    /// Flux from the cavity into the wedge.
    pub flux: f64,
    /// Largest vertex-averaged reconstructed speed below y = -1 over the lid speed.
    pub far_field_ratio: f64,
    pub relative_residual: f64,
    pub time_assembly: f64,
    pub time_solve: f64,
}

/// Full output of one cavity solve.
#[derive(Debug, Clone)]
pub struct CavityRun {
    pub mesh: PolygonalMesh,
    pub coefficients: CoefficientField,
    pub discretisation: Discretisation,
    pub solution: DiscreteSolution,
    pub result: CavityResult,
}

pub fn run_cavity(level: usize, cfg: &DiscretisationConfig, data: CavityData, opts: RunOptions) -> Result<CavityRun> {
    let mesh = cavity_mesh(level)?;
    let coefficients = CoefficientField::from_subdomains(&mesh, &media(), cfg.epsilon)?;
    let lid = |p: &Point| data.boundary_velocity(p);
    let boundary = BoundaryData::interpolated_trace(&mesh, cfg, &lid)?;
    let f = |_: &Point| Point::new(0.0, -data.gravity);
    let g = |_: &Point| 0.0;
    let disc = discretise(&mesh, &coefficients, Sources { f: &f, g: &g }, boundary, cfg, opts.workers)?;
    let start = Instant::now();
    let (solution, solve) = disc.solve(&mesh, opts.condense)?;
    let time_solve = start.elapsed().as_secs_f64();
    let gamma = interface();
    let faces = mesh.faces_on_vertical_line(1.0, gamma.a.y, gamma.b.y);
    let flux = interface_flux(&mesh, cfg, &solution.velocity, &faces, gamma, Point::new(1.0, 0.0))?;
    let samples = potential_samples(&mesh, cfg, &coefficients, &solution.velocity)?;
    let averages = vertex_averages(&mesh, &samples);
    let far = mesh
        .vertices
        .iter()
        .zip(&averages)
        .filter(|(v, _)| v.position.y < -1.0 - 1e-12)
        .map(|(_, u)| u.norm())
        .fold(0.0, f64::max);
    let result = CavityResult {
        level,
        k: cfg.k,
        mesh_size: mesh_size(&mesh),
        n_elements: mesh.n_elements(),
        condensed_dofs: disc.dofs.condensed_total(),
        flux,
        far_field_ratio: far / LID_SPEED,
        relative_residual: solve.relative_residual,
        time_assembly: disc.time_assembly,
        time_solve,
    };
    Ok(CavityRun { mesh, coefficients, discretisation: disc, solution, result })
}
