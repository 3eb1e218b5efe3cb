//! Optimization engines used by the solvers.

pub mod barrier;
pub mod fw;
pub mod lp;
pub mod polytope;
pub mod scalar;

pub use fw::{fw_minimize, FwState, StepRule};
pub use lp::{solve_lp, Bound, LinearProgram, LpSolution, LpStatus, RowKind};
pub use polytope::{min_norm_point, project_onto_polytope};
