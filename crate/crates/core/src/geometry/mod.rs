//! Structures, generating submanifolds and their local invariants.

pub mod descriptor;
pub mod dilation;
pub mod foliation;
pub mod levi;
pub mod manifold;
pub mod structure;
pub mod tangent;

pub use descriptor::{ManifoldDescriptor, StructureDescriptor};
pub use dilation::{
    dilate_anisotropic, dilate_isotropic, linear_part_and_limit, structure_distance, BallGrid, LimitStructure,
};
pub use foliation::{foliation_leaf, leaf_parameter};
pub use levi::{levi_form, levi_matrix, strictify_defining, LeviMethod};
pub use manifold::{GenericSubmanifold, ScalarField};
pub use structure::{validate_structure, AlmostComplexStructure, Structure};
pub use tangent::{holomorphic_tangent, TangentFrame};
