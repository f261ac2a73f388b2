//! Discrete operators on the unit tube.

pub mod assemble;
pub mod discrete;
pub mod mm;
pub mod rotation;

pub use assemble::{
    assemble_horizontal, assemble_induced_family, assemble_laplace_beltrami, assemble_reference_family,
    assemble_reference_laplacian, assemble_vertical, conjugate_by_density, e0_projection, Direction, E0Projection,
};
pub use discrete::{Coeff, DiscreteOperator, DiscreteState, FiberMatrix, Measure, OperatorMeta, Term};
pub use mm::write_matrix_market;
pub use rotation::{assemble_a, residual_r, rotation_field, AOperator, Remainder, RotationField};
