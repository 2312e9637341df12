//! Energy norm, error measures and single manufactured-solution runs.

use nalgebra::DVector;
use serde::Serialize;

use super::cases::ManufacturedCase;
use crate::assembly::{
    condition_estimate, discretise, interpolate_velocity, project_pressure, BoundaryData, DiscreteSolution,
    Discretisation, SolveReport, Sources, VelocityDofs,
};
use crate::error::{Error, Result};
use crate::localops::{DiscretisationConfig, RegimeCensus};
use crate::mesh::PolygonalMesh;

/// Squared Stokes and Darcy parts: (sum mu_T a_S(v, v), sum nu_T a_D(v, v)).
pub fn energy_norm_parts(disc: &Discretisation, mesh: &PolygonalMesh, v: &VelocityDofs) -> Result<(f64, f64)> {
    let mut stokes = 0.0;
    let mut darcy = 0.0;
    for b in &disc.blocks {
        let x = v.local(mesh, b.element);
        let s = b.mu * x.dot(&(&b.stokes * &x));
        let d = b.nu * x.dot(&(&b.darcy * &x));
        let n2 = x.norm_squared();
        if s < -1e-10 * b.mu * b.stokes.norm() * n2 || d < -1e-10 * b.nu * b.darcy.norm() * n2 {
            return Err(Error::Numeric(format!("negative local energy on element {} ({s:e}, {d:e})", b.element)));
        }
        stokes += s;
        darcy += d;
    }
    Ok((stokes.max(0.0), darcy.max(0.0)))
}

/// sqrt(sum_T mu_T a_S,T(v, v) + nu_T a_D,T(v, v)).
pub fn energy_norm(disc: &Discretisation, mesh: &PolygonalMesh, v: &VelocityDofs) -> Result<f64> {
    let (s, d) = energy_norm_parts(disc, mesh, v)?;
    Ok((s + d).sqrt())
}

/// L2 norm of a broken P^k pressure.
pub fn pressure_norm(disc: &Discretisation, p: &[DVector<f64>]) -> f64 {
    disc.blocks.iter().map(|b| p[b.element].dot(&(&b.pressure_mass * &p[b.element]))).sum::<f64>().max(0.0).sqrt()
}

/// Largest element diameter.
pub fn mesh_size(mesh: &PolygonalMesh) -> f64 {
    mesh.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
}

/// (e_u^2 + e_p^2)^(1/2) / (n_u^2 + n_p^2)^(1/2).
pub fn relative_error(energy_error: f64, pressure_error: f64, energy_norm: f64, pressure_norm: f64) -> Result<f64> {
    let den = energy_norm.hypot(pressure_norm);
    if den == 0.0 {
        return Err(Error::DegenerateCase("exact solution has zero energy and pressure norms".into()));
    }
    Ok(energy_error.hypot(pressure_error) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub mesh_size: f64,
    pub n_elements: usize,
    pub condensed_dofs: usize,
    /// E_{u,p}.
    pub relative_error: f64,
    /// ||u_h - I_h u||_{mu,nu,h}.
    pub energy_error: f64,
    /// ||p_h - pi^k p||_{L2}.
    pub pressure_error: f64,
    pub energy_norm_exact: f64,
    pub pressure_norm_exact: f64,
    pub time_assembly: f64,
    pub time_solve: f64,
    pub relative_residual: f64,
    pub condition: Option<f64>,
    pub census: RegimeCensus,
}

impl ErrorReport {
    /// E_{u,p} recomputed from the stored components.
    pub fn recomputed(&self) -> Result<f64> {
        relative_error(self.energy_error, self.pressure_error, self.energy_norm_exact, self.pressure_norm_exact)
    }
}

/// Solve settings independent of the discretisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub condense: bool,
    pub workers: usize,
    /// Estimate the condition number of the solved system.
    pub condition: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { condense: true, workers: 0, condition: false }
    }
}

/// Everything produced by one solve of a manufactured case.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub discretisation: Discretisation,
    pub solution: DiscreteSolution,
    pub solve: SolveReport,
    pub exact_velocity: VelocityDofs,
    pub exact_pressure: Vec<DVector<f64>>,
    pub energy_error: f64,
    pub pressure_error: f64,
    pub energy_norm_exact: f64,
    pub pressure_norm_exact: f64,
    pub condition: Option<f64>,
}

impl CaseRun {
    /// Error report; fails with a degenerate-case error for a vanishing exact solution.
    pub fn report(&self, mesh: &PolygonalMesh) -> Result<ErrorReport> {
        Ok(ErrorReport {
            mesh_size: mesh_size(mesh),
            n_elements: mesh.n_elements(),
            condensed_dofs: self.discretisation.dofs.condensed_total(),
            relative_error: relative_error(
                self.energy_error,
                self.pressure_error,
                self.energy_norm_exact,
                self.pressure_norm_exact,
            )?,
            energy_error: self.energy_error,
            pressure_error: self.pressure_error,
            energy_norm_exact: self.energy_norm_exact,
            pressure_norm_exact: self.pressure_norm_exact,
            time_assembly: self.discretisation.time_assembly,
            time_solve: self.solve.time_solve,
            relative_residual: self.solve.relative_residual,
            condition: self.condition,
            census: self.discretisation.census,
        })
    }
}

/// Discretises `case` on a mesh already labelled by `case.prepare_mesh`, with the
/// interpolated exact trace as Dirichlet data.
pub fn discretise_case(
    case: &ManufacturedCase,
    mesh: &PolygonalMesh,
    cfg: &DiscretisationConfig,
    workers: usize,
) -> Result<Discretisation> {
    let coeffs = case.coefficients(mesh, cfg.epsilon)?;
    let u = |p: &_| (case.u)(p);
    let boundary = BoundaryData::interpolated_trace(mesh, cfg, &u)?.with_pure_darcy_convention(coeffs.is_pure_darcy());
    let f = |p: &_| case.f(p);
    let g = |p: &_| case.g(p);
    discretise(mesh, &coeffs, Sources { f: &f, g: &g }, boundary, cfg, workers)
}

/// Solves `case` and measures the errors against (I_h u, pi^k p).
pub fn run_case(
    case: &ManufacturedCase,
    mesh: &PolygonalMesh,
    cfg: &DiscretisationConfig,
    opts: RunOptions,
) -> Result<CaseRun> {
    let disc = discretise_case(case, mesh, cfg, opts.workers)?;
    let (solution, solve) = disc.solve(mesh, opts.condense)?;
    let condition = if opts.condition {
        let m = if opts.condense { disc.condense()?.matrix } else { disc.full_system().matrix };
        Some(condition_estimate(&m)?.condition)
    } else {
        None
    };
    let u = |p: &_| (case.u)(p);
    let p = |q: &_| (case.p)(q);
    let exact_velocity = interpolate_velocity(mesh, cfg, &u, Some(&disc.boundary))?;
    let exact_pressure = project_pressure(mesh, cfg, &p)?;
    let du = solution.velocity.sub(&exact_velocity);
    let dp: Vec<DVector<f64>> = solution.pressure.iter().zip(&exact_pressure).map(|(a, b)| a - b).collect();
    let energy_error = energy_norm(&disc, mesh, &du)?;
    let energy_norm_exact = energy_norm(&disc, mesh, &exact_velocity)?;
    let pressure_error = pressure_norm(&disc, &dp);
    let pressure_norm_exact = pressure_norm(&disc, &exact_pressure);
    Ok(CaseRun {
        discretisation: disc,
        solution,
        solve,
        exact_velocity,
        exact_pressure,
        energy_error,
        pressure_error,
        energy_norm_exact,
        pressure_norm_exact,
        condition,
    })
}
