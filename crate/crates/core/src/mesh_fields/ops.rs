//! Finite-volume operators on cell-centred fields.
//!
//! Every operator is affine in its argument: the cell part acts linearly and
//! the boundary data adds a constant contribution. Face values on interior
//! faces are arithmetic means of the two adjacent cells.

use crate::error::{check_len, Result};
use crate::scalar::Real;

use super::field::{
    BoundaryValues, BoundedField, Field, ScalarField, Value, VectorBoundedField, VectorField,
};
use super::mesh::{Side, StructuredMesh};

fn check_field<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    cells: &Field<V>,
    bc: &BoundaryValues<V>,
) -> Result<()> {
    check_len("field size", mesh.n_cells(), cells.len())?;
    check_len("boundary data", mesh.boundary_faces().len(), bc.faces.len())
}

/// Gauss gradient `(1/V) sum_f p_f A_f`.
pub fn gradient_parts<T: Real>(
    mesh: &StructuredMesh<T>,
    cells: &ScalarField<T>,
    bc: &BoundaryValues<T>,
) -> Result<VectorField<T>> {
    check_field(mesh, cells, bc)?;
    let p = &cells.values;
    let half = T::lit(0.5);
    let mut out = vec![[T::zero(); 2]; mesh.n_cells()];
    for f in mesh.interior_faces() {
        let pf = half * (p[f.owner] + p[f.neighbour]);
        for k in 0..2 {
            out[f.owner][k] += pf * f.area[k];
            out[f.neighbour][k] -= pf * f.area[k];
        }
    }
    for (face, cond) in mesh.boundary_faces().iter().zip(&bc.faces) {
        let pf = cond.face_value(p[face.cell], face.distance);
        for k in 0..2 {
            out[face.cell][k] += pf * face.area[k];
        }
    }
    for (c, v) in out.iter_mut().enumerate() {
        let inv = T::one() / mesh.cell_volume(c);
        v[0] *= inv;
        v[1] *= inv;
    }
    Ok(Field::from_values(out))
}

pub fn gradient<T: Real>(mesh: &StructuredMesh<T>, p: &BoundedField<T>) -> Result<VectorField<T>> {
    gradient_parts(mesh, &p.cells, &p.bc)
}

/// Gauss divergence `(1/V) sum_f u_f . A_f`.
pub fn divergence_parts<T: Real>(
    mesh: &StructuredMesh<T>,
    cells: &VectorField<T>,
    bc: &BoundaryValues<[T; 2]>,
) -> Result<ScalarField<T>> {
    let fluxes = FaceFluxes::from_parts(mesh, cells, bc)?;
    Ok(fluxes.net_outflow(mesh))
}

pub fn divergence<T: Real>(
    mesh: &StructuredMesh<T>,
    u: &VectorBoundedField<T>,
) -> Result<ScalarField<T>> {
    divergence_parts(mesh, &u.cells, &u.bc)
}

/// Compact Laplacian with two-point face gradients.
pub fn laplacian_parts<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    cells: &Field<V>,
    bc: &BoundaryValues<V>,
) -> Result<Field<V>> {
    check_field(mesh, cells, bc)?;
    let f = &cells.values;
    let mut out = vec![V::zeroed(); mesh.n_cells()];
    for face in mesh.interior_faces() {
        let mag = (face.area[0] * face.area[0] + face.area[1] * face.area[1]).sqrt();
        let flux = f[face.neighbour].sub(f[face.owner]).scale(mag / face.distance);
        out[face.owner] = out[face.owner].add(flux);
        out[face.neighbour] = out[face.neighbour].sub(flux);
    }
    for (face, cond) in mesh.boundary_faces().iter().zip(&bc.faces) {
        let mag = (face.area[0] * face.area[0] + face.area[1] * face.area[1]).sqrt();
        let g = cond.normal_gradient(f[face.cell], face.distance);
        out[face.cell] = out[face.cell].add(g.scale(mag));
    }
    for (c, v) in out.iter_mut().enumerate() {
        *v = v.scale(T::one() / mesh.cell_volume(c));
    }
    Ok(Field::from_values(out))
}

pub fn laplacian<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    f: &BoundedField<V>,
) -> Result<Field<V>> {
    laplacian_parts(mesh, &f.cells, &f.bc)
}

/// Volumetric fluxes `u_f . A_f` through every face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFluxes<T> {
    /// In [`StructuredMesh::interior_faces`] order, owner to neighbour.
    pub interior: Vec<T>,
    /// In boundary-face order, outward.
    pub boundary: Vec<T>,
}

impl<T: Real> FaceFluxes<T> {
    pub fn from_parts(
        mesh: &StructuredMesh<T>,
        cells: &VectorField<T>,
        bc: &BoundaryValues<[T; 2]>,
    ) -> Result<Self> {
        check_field(mesh, cells, bc)?;
        let u = &cells.values;
        let half = T::lit(0.5);
        let interior = mesh
            .interior_faces()
            .map(|f| {
                let uf = u[f.owner].add(u[f.neighbour]).scale(half);
                uf.dot(f.area)
            })
            .collect();
        let boundary = mesh
            .boundary_faces()
            .iter()
            .zip(&bc.faces)
            .map(|(face, cond)| cond.face_value(u[face.cell], face.distance).dot(face.area))
            .collect();
        Ok(Self { interior, boundary })
    }

    pub fn new(mesh: &StructuredMesh<T>, u: &VectorBoundedField<T>) -> Result<Self> {
        Self::from_parts(mesh, &u.cells, &u.bc)
    }

    /// `(1/V) sum_f flux_f` per cell. Opposite sides are paired before the
    /// sum so a uniform flux field cancels exactly.
    pub fn net_outflow(&self, mesh: &StructuredMesh<T>) -> ScalarField<T> {
        // outward flux per cell and side: west, east, south, north
        let mut sides = vec![[T::zero(); 4]; mesh.n_cells()];
        let slot = |s: Side| match s {
            Side::West => 0,
            Side::East => 1,
            Side::South => 2,
            Side::North => 3,
        };
        for (f, &q) in mesh.interior_faces().zip(&self.interior) {
            if f.area[0] != T::zero() {
                sides[f.owner][1] = q;
                sides[f.neighbour][0] = -q;
            } else {
                sides[f.owner][3] = q;
                sides[f.neighbour][2] = -q;
            }
        }
        for (face, &q) in mesh.boundary_faces().iter().zip(&self.boundary) {
            sides[face.cell][slot(face.side)] = q;
        }
        let values = sides
            .iter()
            .enumerate()
            .map(|(c, s)| ((s[1] + s[0]) + (s[3] + s[2])) / mesh.cell_volume(c))
            .collect();
        Field::from_values(values)
    }

    /// Sum of outward boundary fluxes over faces selected by `keep`.
    pub fn boundary_total(
        &self,
        mesh: &StructuredMesh<T>,
        keep: impl Fn(super::mesh::BoundaryTag) -> bool,
    ) -> T {
        mesh.boundary_faces()
            .iter()
            .zip(&self.boundary)
            .filter(|(f, _)| keep(f.tag))
            .map(|(_, &q)| q)
            .sum()
    }
}

/// Convection `(1/V) sum_f flux_f u_f` with precomputed face fluxes.
pub fn convection_with_fluxes<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    fluxes: &FaceFluxes<T>,
    cells: &Field<V>,
    bc: &BoundaryValues<V>,
) -> Result<Field<V>> {
    check_field(mesh, cells, bc)?;
    let u = &cells.values;
    let half = T::lit(0.5);
    let mut out = vec![V::zeroed(); mesh.n_cells()];
    for (f, &q) in mesh.interior_faces().zip(&fluxes.interior) {
        let uf = u[f.owner].add(u[f.neighbour]).scale(half * q);
        out[f.owner] = out[f.owner].add(uf);
        out[f.neighbour] = out[f.neighbour].sub(uf);
    }
    for ((face, cond), &q) in mesh.boundary_faces().iter().zip(&bc.faces).zip(&fluxes.boundary) {
        let uf = cond.face_value(u[face.cell], face.distance);
        out[face.cell] = out[face.cell].add(uf.scale(q));
    }
    for (c, v) in out.iter_mut().enumerate() {
        *v = v.scale(T::one() / mesh.cell_volume(c));
    }
    Ok(Field::from_values(out))
}

/// Discrete `div(w (x) u)`: face fluxes of `w` carrying face values of `u`.
pub fn convection<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    w: &VectorBoundedField<T>,
    u: &BoundedField<V>,
) -> Result<Field<V>> {
    let fluxes = FaceFluxes::new(mesh, w)?;
    convection_with_fluxes(mesh, &fluxes, &u.cells, &u.bc)
}
