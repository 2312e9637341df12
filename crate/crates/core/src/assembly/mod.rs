//! Global discrete problem: numbering, Dirichlet data, sparse saddle-point
//! assembly, static condensation, zero-mean pressure and direct solve.

pub mod boundary;
pub mod conditioning;
pub mod dofmap;
pub mod sparse;
pub mod system;

pub use boundary::{check_compatibility, BoundaryData, BoundaryMode};
pub use conditioning::{condition_estimate, ConditionEstimate};
pub use dofmap::GlobalDofMap;
pub use sparse::{CscMatrix, SparseLu, TripletBuilder};
pub use system::{
    build_element_blocks, discretise, interpolate_velocity, project_pressure, with_workers, CondensedSystem,
    DiscreteSolution, Discretisation, ElementBlock, GlobalSystem, ScalarField, SolveReport, Sources, VectorField,
    VelocityDofs,
};
