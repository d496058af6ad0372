//! Newton solver for the augmented-Lagrangian subproblem: block sparse
//! assembly, block-Jacobi PCG and backtracking line search.

pub mod bsr;
pub mod newton;
pub mod objective;
pub mod pcg;

pub use bsr::{BlockSparseMatrix, BsrBuilder};
pub use newton::{line_search, solve_subproblem, AlParams, NewtonParams, SubproblemStats};
pub use objective::{Assembled, Objective, Problem};
pub use pcg::{pcg_solve, PcgResult};
