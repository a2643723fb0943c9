//! Bishop discs attached to generic submanifolds of almost complex manifolds.
//!
//! The crate builds pseudo-holomorphic discs with boundary on a generic
//! submanifold by the Bishop method: a boundary problem posed for a dilated,
//! nearly standard structure and solved with Cauchy–Green and Schwarz
//! integral operators on a polar grid of the unit disc.

pub mod error;
pub mod linalg;
pub mod polynomial;

pub mod geometry;
pub mod integral;
pub mod dbar;
pub mod families;
pub mod bishop;
pub mod report;
pub mod experiments;

pub use error::{Error, Result};
