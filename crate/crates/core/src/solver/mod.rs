//! Backward dynamic programming on the (t, z, q) mesh.
//!
//! Each step picks the optimal control at every node by a semi-Lagrangian
//! look-up in `q`, then takes one fully implicit upwind step in `z`.

mod control;
mod cube;
mod interp;
mod slice;
mod thomas;
mod upwind;

pub use control::{
    control_candidates, control_objective, optimal_control, Candidates, ControlChoice,
    TIE_TOLERANCE,
};
pub use cube::{
    backward_recursion, backward_recursion_with, read_snapshot, terminal_slice, write_slice_csv,
    write_snapshot, CubeCollector, CubeMax, PolicyCube, SliceSink, Snapshot, StreamingMax, Tee,
    ValueCube, SNAPSHOT_MAGIC,
};
pub use interp::{courant, interp_weights, InterpWeights};
pub use slice::{solve_time_slice, solve_time_slice_into, InteriorSystem, SliceContext, SliceWorkspace};
pub use thomas::{thomas_solve, TridiagFactor};
pub use upwind::{all_coeffs, lower_boundary_coeffs, upper_boundary_coeffs, upwind_coeffs, UpwindCoeffs};
