//! Lifting fields carrying the inflow and outflow boundary data, and the
//! homogenization / reconstruction of snapshots.
//!
//! The velocity lifting is the scalar potential solving `lap chi = 0` with
//! `chi = 1` on the inlet, `chi = 0` on the walls and `d chi/dn = kappa` on
//! the outlets, promoted to the vector field `(chi, 0)` along the inflow
//! direction. When combined with snapshots it is read as a velocity field
//! with unit inflow, i.e. with the outlet treated as free like every other
//! velocity field. Pressure lifting `j` solves
//! `lap chi_p = -div(div(chi_u (x) chi_u))` with `chi_p = 1` on outlet `j`
//! and a zero normal derivative elsewhere.

use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::fom::SnapshotDatabase;
use crate::linalg::cg;
use crate::mesh_fields::io::{read_field, write_field};
use crate::mesh_fields::{
    laplacian_parts, BoundaryTag, BoundaryValues, BoundedField, FaceCondition, ScalarBoundedField,
    ScalarField, StructuredMesh, VectorBoundedField, VectorField,
};
use crate::scalar::Real;
use crate::spaces::{double_divergence, pressure_bc, velocity_bc};

/// Solves `lap x = source` for the cell values of `x` under boundary data `bc`
/// (at least one Dirichlet face required).
pub fn solve_poisson<T: Real>(
    mesh: &StructuredMesh<T>,
    source: &ScalarField<T>,
    bc: &BoundaryValues<T>,
    tol: T,
) -> Result<ScalarField<T>> {
    check_len("Poisson source", mesh.n_cells(), source.len())?;
    if !bc.faces.iter().any(|f| f.is_dirichlet()) {
        return Err(Error::Numerical("Poisson problem without a Dirichlet face is singular".into()));
    }
    let n = mesh.n_cells();
    let hom = bc.homogeneous();
    let affine = laplacian_parts(mesh, &ScalarField::zeros(n), bc)?;
    // -lap0 x = -source + affine
    let b: Vec<T> = source.values.iter().zip(&affine.values).map(|(&s, &a)| a - s).collect();
    let mut x = vec![T::zero(); n];
    cg(
        |v, out| {
            let l = laplacian_parts(mesh, &ScalarField::from_values(v.to_vec()), &hom).expect("sizes checked");
            for (o, li) in out.iter_mut().zip(&l.values) {
                *o = -*li;
            }
        },
        &b,
        &mut x,
        tol,
        20 * n + 100,
    )?;
    Ok(ScalarField::from_values(x))
}

pub fn solve_velocity_lifting<T: Real>(
    mesh: &StructuredMesh<T>,
    outlet_neumann: T,
    tol: T,
) -> Result<VectorField<T>> {
    let bc = BoundaryValues::from_tags(mesh, |tag| match tag {
        BoundaryTag::Inlet => FaceCondition::Dirichlet(T::one()),
        BoundaryTag::Wall => FaceCondition::Dirichlet(T::zero()),
        BoundaryTag::Outlet(_) => FaceCondition::Neumann(outlet_neumann),
    });
    let chi = solve_poisson(mesh, &ScalarField::zeros(mesh.n_cells()), &bc, tol)?;
    Ok(VectorField::from_values(chi.values.iter().map(|&c| [c, T::zero()]).collect()))
}

/// Boundary data of pressure lifting `outlet`: one on that outlet, zero
/// normal derivative on every other face.
pub fn pressure_lifting_bc<T: Real>(mesh: &StructuredMesh<T>, outlet: usize) -> BoundaryValues<T> {
    BoundaryValues::from_tags(mesh, |tag| match tag {
        BoundaryTag::Outlet(j) if j == outlet => FaceCondition::Dirichlet(T::one()),
        _ => FaceCondition::Neumann(T::zero()),
    })
}

pub fn solve_pressure_lifting<T: Real>(
    mesh: &StructuredMesh<T>,
    chi_u: &VectorBoundedField<T>,
    outlet: usize,
    tol: T,
) -> Result<ScalarField<T>> {
    if outlet >= mesh.n_outlets() {
        return Err(Error::Config(format!("outlet {outlet} does not exist")));
    }
    let dd = double_divergence(mesh, chi_u, chi_u)?;
    let source = dd.scaled(-T::one());
    solve_poisson(mesh, &source, &pressure_lifting_bc(mesh, outlet), tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftingSet<T> {
    pub chi_u: VectorField<T>,
    /// One per outlet.
    pub chi_p: Vec<ScalarField<T>>,
}

/// Homogenized snapshot set with the traces that were removed.
#[derive(Clone, Debug, PartialEq)]
pub struct Homogenized<T> {
    pub times: Vec<T>,
    pub g_u: Vec<T>,
    pub g_p: Vec<Vec<T>>,
    pub u: Vec<VectorBoundedField<T>>,
    pub p: Vec<ScalarBoundedField<T>>,
}

impl<T: Real> LiftingSet<T> {
    pub fn compute(mesh: &StructuredMesh<T>, outlet_neumann: T, tol: T) -> Result<Self> {
        let chi_u = solve_velocity_lifting(mesh, outlet_neumann, tol)?;
        let bounded = BoundedField::new(chi_u.clone(), velocity_bc(mesh, T::one()));
        let chi_p = (0..mesh.n_outlets())
            .map(|j| solve_pressure_lifting(mesh, &bounded, j, tol))
            .collect::<Result<_>>()?;
        Ok(Self { chi_u, chi_p })
    }

    pub fn n_outlets(&self) -> usize {
        self.chi_p.len()
    }

    /// `chi_u` as a velocity field with unit inflow.
    pub fn chi_u_field(&self, mesh: &StructuredMesh<T>) -> VectorBoundedField<T> {
        BoundedField::new(self.chi_u.clone(), velocity_bc(mesh, T::one()))
    }

    /// `chi_p[j]` as a pressure field: Dirichlet data on every outlet face,
    /// equal to one on outlet `j` and to the zero-gradient face value elsewhere.
    pub fn chi_p_field(&self, mesh: &StructuredMesh<T>, j: usize) -> ScalarBoundedField<T> {
        let cells = self.chi_p[j].clone();
        let own = BoundedField::new(cells.clone(), pressure_lifting_bc(mesh, j));
        let traces = own.traces(mesh);
        let mut bc = pressure_bc(mesh, &vec![T::zero(); mesh.n_outlets()]);
        for (k, face) in mesh.boundary_faces().iter().enumerate() {
            if let BoundaryTag::Outlet(_) = face.tag {
                bc.faces[k] = FaceCondition::Dirichlet(traces[k]);
            }
        }
        BoundedField::new(cells, bc)
    }

    /// Subtracts the lifted traces from every snapshot.
    pub fn homogenize(&self, mesh: &StructuredMesh<T>, db: &SnapshotDatabase<T>) -> Result<Homogenized<T>> {
        let chi_u = self.chi_u_field(mesh);
        let chi_p: Vec<_> = (0..self.n_outlets()).map(|j| self.chi_p_field(mesh, j)).collect();
        let mut out = Homogenized {
            times: Vec::new(),
            g_u: Vec::new(),
            g_p: Vec::new(),
            u: Vec::new(),
            p: Vec::new(),
        };
        for (k, r) in db.records.iter().enumerate() {
            if r.g_p.len() != self.n_outlets() {
                return Err(Error::Config(format!(
                    "snapshot {k} at t = {} has {} outlet pressure samples, expected {}",
                    r.t,
                    r.g_p.len(),
                    self.n_outlets()
                )));
            }
            let mut u = BoundedField::new(r.u.clone(), velocity_bc(mesh, r.g_u));
            u.axpy(-r.g_u, &chi_u)?;
            let mut p = BoundedField::new(r.p.clone(), pressure_bc(mesh, &r.g_p));
            for (g, chi) in r.g_p.iter().zip(&chi_p) {
                p.axpy(-*g, chi)?;
            }
            out.times.push(r.t);
            out.g_u.push(r.g_u);
            out.g_p.push(r.g_p.clone());
            out.u.push(u);
            out.p.push(p);
        }
        Ok(out)
    }

    /// `g_u chi_u + sum a_i phi_i` and `sum g_p_j chi_p_j + sum b_i psi_i`.
    pub fn reconstruct(
        &self,
        a: &[T],
        u_modes: &[VectorField<T>],
        b: &[T],
        p_modes: &[ScalarField<T>],
        g_u: T,
        g_p: &[T],
    ) -> Result<(VectorField<T>, ScalarField<T>)> {
        check_len("velocity coefficients", u_modes.len(), a.len())?;
        check_len("pressure coefficients", p_modes.len(), b.len())?;
        check_len("outlet pressures", self.n_outlets(), g_p.len())?;
        let mut u = self.chi_u.scaled(g_u);
        for (ai, m) in a.iter().zip(u_modes) {
            u.axpy(*ai, m)?;
        }
        let mut p = ScalarField::zeros(self.chi_u.len());
        for (g, chi) in g_p.iter().zip(&self.chi_p) {
            p.axpy(*g, chi)?;
        }
        for (bi, m) in b.iter().zip(p_modes) {
            p.axpy(*bi, m)?;
        }
        Ok((u, p))
    }

    pub fn write(&self, dir: &Path, nx: usize, ny: usize) -> Result<()> {
        write_field(&dir.join("chi_u.fld"), nx, ny, &self.chi_u)?;
        for (j, c) in self.chi_p.iter().enumerate() {
            write_field(&dir.join(format!("chi_p_{j}.fld")), nx, ny, c)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path, n_outlets: usize) -> Result<Self> {
        let (_, _, chi_u) = read_field::<T, [T; 2]>(&dir.join("chi_u.fld"))?;
        let chi_p = (0..n_outlets)
            .map(|j| read_field::<T, T>(&dir.join(format!("chi_p_{j}.fld"))).map(|(_, _, f)| f))
            .collect::<Result<_>>()?;
        Ok(Self { chi_u, chi_p })
    }
}

/// Largest inlet velocity trace and outlet pressure trace of a homogenized set.
pub fn max_homogeneous_traces<T: Real>(mesh: &StructuredMesh<T>, h: &Homogenized<T>) -> (T, T) {
    let mut tu = T::zero();
    let mut tp = T::zero();
    for (u, p) in h.u.iter().zip(&h.p) {
        tu = tu.max(u.max_trace(mesh, BoundaryTag::Inlet));
        for j in 0..mesh.n_outlets() {
            tp = tp.max(p.max_trace(mesh, BoundaryTag::Outlet(j)));
        }
    }
    (tu, tp)
}
