//! Porous medium equation on `[0,1]`: finite-volume solver, boundary
//! conditions, test functions and weak-form residuals.

pub mod bc;
pub mod field;
pub mod profile;
pub mod solver;
pub mod testfn;
pub mod weak;

pub use bc::{BoundaryCondition, BoundaryKind, BoundaryRegistry, Reservoirs};
pub use field::{
    dirichlet_trace_defect, l2_spacetime_distance, uniform_times, GridFunction, SpaceTimeField,
    TraceRule, TraceSource,
};
pub use profile::Profile;
pub use solver::{mass_balance_defect, mass_drift, solve, solve_from, SolveOptions};
pub use testfn::{SpaceBasis, TestFunction};
pub use weak::{max_weak_form_residual, weak_form_residual};
