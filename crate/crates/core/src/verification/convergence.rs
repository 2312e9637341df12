//! Convergence studies over mesh families and their CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cases::ManufacturedCase;
use super::errors::{run_case, ErrorReport, RunOptions};
use crate::error::{Error, Result};
use crate::localops::DiscretisationConfig;
use crate::mesh::{generate_mesh, MeshKind, PolygonalMesh};

pub const CSV_HEADER: &str = "MeshSize,NbElements,CondensedDofs,EnergyError,PressureError,Rate,TimeAssembly,TimeSolve";

/// Errors below this are treated as exact and get no rate.
pub const SATURATION: f64 = 1e-10;

/// Generated meshes of one kind at several resolutions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFamily {
    pub kind: MeshKind,
    pub levels: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl MeshFamily {
    pub fn new(kind: MeshKind, levels: &[usize], seed: u64) -> Self {
        Self { kind, levels: levels.to_vec(), seed }
    }

    pub fn meshes(&self) -> Result<Vec<PolygonalMesh>> {
        self.levels.iter().map(|&n| generate_mesh(self.kind, n, self.seed)).collect()
    }
}

/// log(e_{i-1} / e_i) / log(h_{i-1} / h_i), defined for strictly decreasing h and
/// unsaturated errors.
pub fn rate(h0: f64, e0: f64, h1: f64, e1: f64) -> Option<f64> {
    (h1 < h0 && e0 > SATURATION && e1 > SATURATION).then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub case: String,
    pub k: usize,
    pub reports: Vec<ErrorReport>,
    /// Rate of each level against the previous one; `None` on the first level.
    pub rates: Vec<Option<f64>>,
    /// Reason the study stopped early, if it did.
    pub failure: Option<String>,
}

impl ConvergenceTable {
    pub fn new(case: &str, k: usize) -> Self {
        Self { case: case.into(), k, reports: Vec::new(), rates: Vec::new(), failure: None }
    }

    pub fn push(&mut self, report: ErrorReport) {
        let r = self
            .reports
            .last()
            .and_then(|p| rate(p.mesh_size, p.relative_error, report.mesh_size, report.relative_error));
        self.reports.push(report);
        self.rates.push(r);
    }

    pub fn last_rate(&self) -> Option<f64> {
        self.rates.last().copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// True when every error is below the saturation level.
    pub fn saturated(&self) -> bool {
        self.reports.iter().all(|r| r.relative_error <= SATURATION)
    }

    fn csv(&self, timing: bool) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (r, rate) in self.reports.iter().zip(&self.rates) {
            let rate = rate.map(|v| format!("{v:e}")).unwrap_or_default();
            let (ta, ts) =
                if timing { (format!("{:.6}", r.time_assembly), format!("{:.6}", r.time_solve)) } else { Default::default() };
            let _ = writeln!(
                s,
                "{:e},{},{},{:e},{:e},{rate},{ta},{ts}",
                r.mesh_size, r.n_elements, r.condensed_dofs, r.relative_error, r.pressure_error
            );
        }
        s
    }

    /// CSV with wall-clock columns.
    pub fn to_csv(&self) -> String {
        self.csv(true)
    }

    /// CSV with empty timing columns, reproducible bit for bit.
    pub fn to_deterministic_csv(&self) -> String {
        self.csv(false)
    }
}

/// Solves `case` on every mesh in order; a failing level stops the study and is
/// recorded in `failure`.
pub fn convergence_study(
    case: &ManufacturedCase,
    meshes: Vec<PolygonalMesh>,
    cfg: &DiscretisationConfig,
    opts: RunOptions,
) -> Result<ConvergenceTable> {
    if meshes.len() < 3 {
        return Err(Error::Config(format!("a convergence study needs at least 3 meshes, got {}", meshes.len())));
    }
    let mut table = ConvergenceTable::new(&case.name, cfg.k);
    for (level, mut mesh) in meshes.into_iter().enumerate() {
        let outcome = case.prepare_mesh(&mut mesh).and_then(|_| run_case(case, &mesh, cfg, opts)?.report(&mesh));
        match outcome {
            Ok(report) => table.push(report),
            Err(e) => {
                table.failure = Some(format!("level {level}: {e}"));
                break;
            }
        }
    }
    Ok(table)
}
