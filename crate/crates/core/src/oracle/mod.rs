//! Independent numerical checks of the closed-form results.

mod barrier;
mod convergence;
mod grid;

pub use barrier::{
    double_square_barrier_amplitudes, point_coupling_amplitudes, square_barrier_amplitudes, SquareBarrierSpec,
};
pub use convergence::{
    componentwise_relative_error, convergence_study, delta_limit_study, free_grid_study, ConvergenceRow, ConvergenceTable,
};
pub use grid::{
    propagate_grid, propagate_grid_extrapolated, relative_l1, DeltaModel, GridPropagatorSpec, GridRun, ReferenceScenario,
    NODES_PER_WAVELENGTH,
};
