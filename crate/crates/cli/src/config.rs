//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hho_brinkman::localops::DiscretisationConfig;
use hho_brinkman::mesh::MeshKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Stokes scale 3, Darcy scale 0.3.
    Default,
    /// Stokes scale 1, Darcy scale 10^-(k+1).
    DegreeScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Sparse LU with iterative refinement.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSpec {
    pub kind: MeshKind,
    pub n: usize,
    /// JSON mesh file; overrides the generator when set.
    pub file: Option<PathBuf>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { kind: MeshKind::Cartesian, n: 8, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    /// Mesh resolutions of a convergence study, or cavity refinement levels.
    pub levels: Vec<usize>,
    /// Polynomial degrees of the cavity demo.
    pub orders: Vec<usize>,
    pub k: usize,
    pub case: String,
    pub mu: f64,
    pub nu: f64,
    pub preset: Preset,
    pub stab_scale_stokes: Option<f64>,
    pub stab_scale_darcy: Option<f64>,
    pub epsilon: Option<f64>,
    pub condense: bool,
    pub solver: Solver,
    /// Estimate the condition number of each solved system.
    pub condition: bool,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads (0: all cores).
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::default(),
            levels: Vec::new(),
            orders: Vec::new(),
            k: 1,
            case: "blend".into(),
            mu: 1.0,
            nu: 1.0,
            preset: Preset::Default,
            stab_scale_stokes: None,
            stab_scale_darcy: None,
            epsilon: None,
            condense: true,
            solver: Solver::Direct,
            condition: false,
            output: None,
            seed: 0,
            workers: 0,
        }
    }
}

/// Flags shared by every subcommand; each one, when given, wins over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mesh family: cartesian, perturbed-quad, agglomerated, triangular.
    #[arg(long)]
    pub kind: Option<String>,
    /// Cells per side of the generated mesh.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of randomised mesh generators.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mesh file to load instead of generating one.
    #[arg(long)]
    pub mesh_file: Option<PathBuf>,
    /// Polynomial degree.
    #[arg(long)]
    pub k: Option<usize>,
    /// Built-in case: blend, discontinuous, polynomial-stokes, polynomial-darcy, zero.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub stab_scale_stokes: Option<f64>,
    #[arg(long)]
    pub stab_scale_darcy: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Solve the full system instead of the condensed one.
    #[arg(long)]
    pub no_condense: bool,
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    #[arg(long)]
    pub condition: bool,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Comma-separated polynomial degrees.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Output file or directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(k) = &self.kind {
            c.mesh.kind = k.parse().map_err(CliError::from)?;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v.into(); })*
            };
        }
        set!(n => c.mesh.n, seed => c.seed, k => c.k, case => c.case, mu => c.mu, nu => c.nu, preset => c.preset,
             solver => c.solver, levels => c.levels, orders => c.orders, workers => c.workers);
        if let Some(f) = &self.mesh_file {
            c.mesh.file = Some(f.clone());
        }
        if let Some(v) = self.stab_scale_stokes {
            c.stab_scale_stokes = Some(v);
        }
        if let Some(v) = self.stab_scale_darcy {
            c.stab_scale_darcy = Some(v);
        }
        if let Some(v) = self.epsilon {
            c.epsilon = Some(v);
        }
        if let Some(o) = &self.output {
            c.output = Some(o.clone());
        }
        c.condense &= !self.no_condense;
        c.condition |= self.condition;
        Ok(c)
    }
}

impl RunConfig {
    /// Discretisation parameters for degree `k`, validated.
    pub fn discretisation(&self, k: usize) -> Result<DiscretisationConfig, CliError> {
        let mut d = match self.preset {
            Preset::Default => DiscretisationConfig::new(k),
            Preset::DegreeScaled => DiscretisationConfig::degree_scaled(k),
        };
        if let Some(s) = self.stab_scale_stokes {
            d.stab_scale_stokes = s;
        }
        if let Some(s) = self.stab_scale_darcy {
            d.stab_scale_darcy = s;
        }
        if let Some(e) = self.epsilon {
            d.epsilon = e;
        }
        d.validate()?;
        Ok(d)
    }
}
