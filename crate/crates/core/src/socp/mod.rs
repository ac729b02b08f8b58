//! Convex subproblem of the beamformer update and its interior-point solver.

mod barrier;
mod lift;
mod problem;

pub use barrier::{
    solve, solve_real, InfeasibilityCertificate, KktResiduals, RealSolution, SolverSettings, SolverState, SolverStatus,
};
pub use lift::ColumnLift;
pub use problem::{build_subproblem, build_subproblem_with, AffineConstraint, SocConstraint, SubproblemData};
