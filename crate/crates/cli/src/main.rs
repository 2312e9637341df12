//! Command-line front end: mesh generation, single solves, convergence studies,
//! the cavity demo and the self-test suites.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hho_brinkman::assembly::with_workers;
use hho_brinkman::mesh::{generate_mesh, load_mesh, mesh_to_json, PolygonalMesh};
use hho_brinkman::verification::{
    builtin_case, convergence_study, energy_norm, pressure_norm, run_all, run_case, run_cavity, CavityData,
    CavityResult, MeshFamily, RunOptions, SolutionExport,
};
use hho_brinkman::Error;
use serde::Serialize;

use config::{Overrides, RunConfig};

/// Failure with its exit code: 2 for configuration and validation, 3 for solver and numerics.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_)
            | Error::Decomposition { .. }
            | Error::Condensation { .. }
            | Error::Solver { .. }
            | Error::DegenerateCase(_) => Self::numeric(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "brinkman-hho", version, about = "Regime-robust HHO solver for the Brinkman problem on polygonal meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as JSON.
    GenerateMesh(Overrides),
    /// Solve one built-in case and write the solution and error report.
    Run(Overrides),
    /// Solve a case on a mesh family and write the convergence CSV.
    Convergence(Overrides),
    /// Lid-driven cavity in a porous box: interface flux per level and order.
    CavityDemo(Overrides),
    /// Run the invariant and convergence suites.
    Selftest(Overrides),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenerateMesh(o) => o.resolve().and_then(|c| cmd_generate_mesh(&c)),
        Command::Run(o) => o.resolve().and_then(|c| in_pool(&c, cmd_run)),
        Command::Convergence(o) => o.resolve().and_then(|c| in_pool(&c, cmd_convergence)),
        Command::CavityDemo(o) => o.resolve().and_then(|c| in_pool(&c, cmd_cavity_demo)),
        Command::Selftest(o) => o.resolve().and_then(|c| cmd_selftest(&c)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn in_pool(c: &RunConfig, op: fn(&RunConfig) -> CliResult) -> CliResult {
    with_workers(c.workers, || op(c))?
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when no path is configured.
fn emit(path: Option<&Path>, contents: &str) -> CliResult {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn output_dir(c: &RunConfig, default: &str) -> PathBuf {
    c.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn build_mesh(c: &RunConfig, n: usize) -> CliResult<PolygonalMesh> {
    match &c.mesh.file {
        Some(f) => {
            if !f.exists() {
                return Err(CliError::config(format!("mesh file {} not found", f.display())));
            }
            Ok(load_mesh(f)?)
        }
        None => Ok(generate_mesh(c.mesh.kind, n, c.seed)?),
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::config(e.to_string()))
}

fn cmd_generate_mesh(c: &RunConfig) -> CliResult {
    let mesh = generate_mesh(c.mesh.kind, c.mesh.n, c.seed)?;
    emit(c.output.as_deref(), &(mesh_to_json(&mesh)? + "\n"))?;
    eprintln!("{} mesh: {} cells, {} faces", c.mesh.kind.name(), mesh.n_elements(), mesh.n_faces());
    Ok(())
}

#[derive(Serialize)]
struct RunReport<'a> {
    case: &'a str,
    k: usize,
    n_elements: usize,
    solve: hho_brinkman::assembly::SolveReport,
    census: hho_brinkman::localops::RegimeCensus,
    /// ||u_h||_{mu,nu,h}.
    velocity_energy_norm: f64,
    /// ||p_h||_{L2}.
    pressure_norm: f64,
    error: Option<hho_brinkman::verification::ErrorReport>,
    note: Option<String>,
}

fn cmd_run(c: &RunConfig) -> CliResult {
    let cfg = c.discretisation(c.k)?;
    let case = builtin_case(&c.case, c.mu, c.nu, c.k)?;
    let mut mesh = build_mesh(c, c.mesh.n)?;
    case.prepare_mesh(&mut mesh)?;
    let opts = RunOptions { condense: c.condense, workers: c.workers, condition: c.condition };
    let run = run_case(&case, &mesh, &cfg, opts)?;
    let (error, note) = match run.report(&mesh) {
        Ok(r) => (Some(r), None),
        Err(Error::DegenerateCase(m)) => (None, Some(m)),
        Err(e) => return Err(e.into()),
    };
    let report = RunReport {
        case: &case.name,
        k: c.k,
        n_elements: mesh.n_elements(),
        solve: run.solve,
        census: run.discretisation.census,
        velocity_energy_norm: energy_norm(&run.discretisation, &mesh, &run.solution.velocity)?,
        pressure_norm: pressure_norm(&run.discretisation, &run.solution.pressure),
        error,
        note,
    };
    let coeffs = case.coefficients(&mesh, cfg.epsilon)?;
    let export = SolutionExport::new(&mesh, &cfg, &coeffs, &run.solution)?;
    let dir = output_dir(c, "brinkman-output");
    write_file(&dir.join("solution.json"), &export.to_json()?)?;
    write_file(&dir.join("solution.csv"), &export.to_csv())?;
    write_file(&dir.join("report.json"), &to_json(&report)?)?;
    match &report.error {
        Some(r) => println!(
            "{}: k={} elements={} E_up={:e} energy_error={:e} pressure_error={:e}",
            case.name, c.k, r.n_elements, r.relative_error, r.energy_error, r.pressure_error
        ),
        None => println!(
            "{}: k={} elements={} velocity_energy_norm={:e} pressure_norm={:e}",
            case.name,
            c.k,
            mesh.n_elements(),
            report.velocity_energy_norm,
            report.pressure_norm
        ),
    }
    if report.solve.relative_residual > 1e-10 {
        eprintln!("warning: relative residual {:e} above 1e-10", report.solve.relative_residual);
    }
    Ok(())
}

fn cmd_convergence(c: &RunConfig) -> CliResult {
    let levels = if c.levels.is_empty() { vec![4, 8, 16, 32] } else { c.levels.clone() };
    let cfg = c.discretisation(c.k)?;
    let case = builtin_case(&c.case, c.mu, c.nu, c.k)?;
    let meshes = match &c.mesh.file {
        Some(_) => return Err(CliError::config("a convergence study needs a generated mesh family, not a mesh file")),
        None => MeshFamily::new(c.mesh.kind, &levels, c.seed).meshes()?,
    };
    let opts = RunOptions { condense: c.condense, workers: c.workers, condition: c.condition };
    let table = convergence_study(&case, meshes, &cfg, opts)?;
    emit(c.output.as_deref(), &table.to_csv())?;
    let rates: Vec<String> =
        table.rates.iter().map(|r| r.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))).collect();
    eprintln!("{} k={}: rates {}", case.name, c.k, rates.join(" "));
    match &table.failure {
        Some(f) => Err(CliError::numeric(format!("study stopped early ({f}); partial table written"))),
        None => Ok(()),
    }
}

fn cmd_cavity_demo(c: &RunConfig) -> CliResult {
    let levels = if c.levels.is_empty() { vec![1, 2, 3] } else { c.levels.clone() };
    let orders = if c.orders.is_empty() { vec![0, 1, 2] } else { c.orders.clone() };
    let dir = output_dir(c, "cavity-output");
    let opts = RunOptions { condense: c.condense, workers: c.workers, condition: false };
    let mut csv = String::from("Level,Order,MeshSize,NbElements,CondensedDofs,Flux,FarFieldRatio\n");
    let mut results: Vec<CavityResult> = Vec::new();
    for &k in &orders {
        let cfg = c.discretisation(k)?;
        for (i, &level) in levels.iter().enumerate() {
            let run = run_cavity(level, &cfg, CavityData::default(), opts)?;
            let r = run.result;
            let _ = writeln!(
                csv,
                "{},{},{:e},{},{},{:e},{:e}",
                r.level, r.k, r.mesh_size, r.n_elements, r.condensed_dofs, r.flux, r.far_field_ratio
            );
            println!("k={k} level={level} flux={:e} far-field ratio={:e}", r.flux, r.far_field_ratio);
            if i + 1 == levels.len() {
                let export = SolutionExport::new(&run.mesh, &cfg, &run.coefficients, &run.solution)?;
                write_file(&dir.join(format!("cavity_k{k}_level{level}.json")), &export.to_json()?)?;
            }
            results.push(r);
        }
    }
    write_file(&dir.join("cavity.csv"), &csv)?;
    write_file(&dir.join("cavity.json"), &to_json(&results)?)?;
    Ok(())
}

fn cmd_selftest(c: &RunConfig) -> CliResult {
    let checks = run_all(c.workers);
    for check in &checks {
        println!("{}", check.line());
    }
    let failed: Vec<u8> = checks.iter().filter(|k| !k.passed && !k.monitored).map(|k| k.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::numeric(format!("failed criteria: {failed:?}")))
    }
}
