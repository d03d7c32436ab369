//! Boundary-data conventions shared by the full-order solver, the liftings
//! and the reduced operators.
//!
//! Velocity fields carry Dirichlet data on the inlet and the walls and a zero
//! normal derivative on the outlets. Pressure fields carry Dirichlet data on
//! the outlets and a zero normal derivative on the inlet and the walls.

use crate::error::Result;
use crate::mesh_fields::{
    convection, divergence_parts, BoundaryTag, BoundaryValues, BoundedField, FaceCondition,
    ScalarBoundedField, ScalarField, StructuredMesh, VectorBoundedField, VectorField,
};
use crate::scalar::Real;

/// Plug inflow `(g_u, 0)`, no-slip walls, free outlets.
pub fn velocity_bc<T: Real>(mesh: &StructuredMesh<T>, g_u: T) -> BoundaryValues<[T; 2]> {
    BoundaryValues::from_tags(mesh, |tag| match tag {
        BoundaryTag::Inlet => FaceCondition::Dirichlet([g_u, T::zero()]),
        BoundaryTag::Wall => FaceCondition::Dirichlet([T::zero(); 2]),
        BoundaryTag::Outlet(_) => FaceCondition::Neumann([T::zero(); 2]),
    })
}

/// Outlet `j` fixed at `g_p[j]`, zero normal derivative elsewhere.
pub fn pressure_bc<T: Real>(mesh: &StructuredMesh<T>, g_p: &[T]) -> BoundaryValues<T> {
    BoundaryValues::from_tags(mesh, |tag| match tag {
        BoundaryTag::Outlet(j) => FaceCondition::Dirichlet(g_p[j]),
        _ => FaceCondition::Neumann(T::zero()),
    })
}

/// Velocity field with homogeneous boundary data.
pub fn velocity0<T: Real>(mesh: &StructuredMesh<T>, cells: VectorField<T>) -> VectorBoundedField<T> {
    BoundedField::new(cells, velocity_bc(mesh, T::zero()))
}

/// Pressure field with homogeneous boundary data.
pub fn pressure0<T: Real>(mesh: &StructuredMesh<T>, cells: ScalarField<T>) -> ScalarBoundedField<T> {
    let zeros = vec![T::zero(); mesh.n_outlets()];
    BoundedField::new(cells, pressure_bc(mesh, &zeros))
}

/// `div(div(v (x) w))`: convection of `w` by `v`, followed by a divergence
/// that treats the intermediate vector field as a homogeneous velocity.
pub fn double_divergence<T: Real>(
    mesh: &StructuredMesh<T>,
    v: &VectorBoundedField<T>,
    w: &VectorBoundedField<T>,
) -> Result<ScalarField<T>> {
    let c = convection(mesh, v, w)?;
    divergence_parts(mesh, &c, &velocity_bc(mesh, T::zero()))
}
