//! Structured channel mesh, cell-centred fields and finite-volume operators.

pub mod field;
pub mod io;
pub mod mesh;
pub mod ops;

pub use field::{
    inner_product, norm, BoundaryValues, BoundedField, FaceCondition, Field, ScalarBoundedField,
    ScalarField, Value, VectorBoundedField, VectorField,
};
pub use mesh::{BoundaryFace, BoundaryTag, InteriorFace, Side, StructuredMesh};
pub use ops::{
    convection, convection_with_fluxes, divergence, divergence_parts, gradient, gradient_parts,
    laplacian, laplacian_parts, FaceFluxes,
};
