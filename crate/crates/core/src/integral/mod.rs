//! Function spaces on the closed unit disc and the integral operators acting on them.

pub mod function;
pub mod grid;
pub mod operators;

pub use function::{BoundarySignal, DiscFunction, DiscFunctionRecord, DiscMap, ModeTable};
pub use grid::DiscGrid;
pub use operators::{
    boundary_to_holomorphic, cauchy_green, cauchy_green_pointwise, dbar, dzeta, holomorphic_part, schwarz,
    schwarz_coefficients,
    HolomorphicExtension,
};
