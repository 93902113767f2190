//! P1 finite elements: assembly, sparse SPD solves, norms, fields and the
//! harmonic hole extension.

mod assemble;
mod extend;
mod field;
mod locate;
mod norms;
mod solve;
mod sparse;

pub use assemble::{assemble_boundary_mass, assemble_mass, assemble_stiffness, FemSpace, Weight, GAUSS3};
pub use extend::{extend_into_holes, Extension};
pub use field::{read_field, write_field, NodalField};
pub use locate::PointLocator;
pub use norms::{compute_norms, weighted_l2_squared, NormReport};
pub use solve::{
    dense_cholesky_solve, dense_lu_solve, dense_masked_solve, pcg_masked, solve_spd, SolveStats, PCG_TOL,
};
pub use sparse::{Pattern, SparseMatrix};

