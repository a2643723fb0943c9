//! Quasi-linear J-holomorphy: the matrix Q_J, the residual of the
//! J-holomorphy equation and the normalization operator Φ_J.

pub mod phi;
pub mod q;

pub use phi::{c1_distance_along, phi_forward, phi_inverse, phi_inverse_from, PhiConfig, PhiInverse};
pub use q::{jholo_residual, jholo_residual_sup, q_endomorphism, q_matrix, QField};
