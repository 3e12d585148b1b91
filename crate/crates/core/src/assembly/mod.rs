//! Element matrices, static condensation and the global trace system.

mod full;
mod global;
mod local;
mod space;

pub use full::{assemble_full, DofGroup, FullOptions, FullSystem};
pub use global::{
    assemble_cg_gradient_system, assemble_global, boundary_trace_values, recover_fields, solve, solve_pressure,
    Diagnostics, DofMap, GlobalSystem, Mode, PressureSolution, SolutionFields, SolveOptions,
};
pub(crate) use global::with_workers;
pub use local::{assemble_local, Condensed, LocalLayout, LocalOptions, LocalSystem, SINGULAR_RATIO};
pub use space::{face_points_in_element, DiscreteSpace};
