//! Manufactured solutions, error measures, convergence studies, interface
//! flux and the cavity demonstration.

pub mod cases;
pub mod cavity;
pub mod convergence;
pub mod errors;
pub mod export;
pub mod flux;
pub mod suite;

pub use cases::{
    builtin_case, discontinuous, polynomial_darcy, polynomial_stokes, regime_blend, zero_case, ManufacturedCase,
    Polynomial,
};
pub use cavity::{run_cavity, CavityData, CavityResult, CavityRun};
pub use convergence::{convergence_study, rate, ConvergenceTable, MeshFamily, CSV_HEADER, SATURATION};
pub use errors::{
    discretise_case, energy_norm, energy_norm_parts, mesh_size, pressure_norm, relative_error, run_case, CaseRun,
    ErrorReport, RunOptions,
};
pub use export::SolutionExport;
pub use flux::{interface_flux, potential_samples, vertex_averages, Segment};
pub use suite::{run_all, Check};
