//! Galerkin projection of the discrete operators onto extended bases.
//!
//! The velocity basis is `[chi_u | phi_1..phi_Nu | s_1..s_Ns]` and the pressure
//! basis `[chi_p_1..chi_p_No | psi_1..psi_Np]`. The lifting members carry the
//! inflow and outflow data, so every tensor has lifting rows and columns next
//! to the modal ones. Indices below are into these extended lists.

use crate::error::{check_len, Error, Result};
use crate::linalg::{Matrix, Tensor3};
use crate::mesh_fields::{
    convection_with_fluxes, divergence, divergence_parts, gradient, inner_product, laplacian,
    BoundaryTag, BoundedField, FaceFluxes, ScalarBoundedField, ScalarField, StructuredMesh,
    VectorBoundedField, VectorField,
};
use crate::scalar::Real;
use crate::spaces::{pressure0, velocity0, velocity_bc};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedBasis<T: Real> {
    /// Lifting first, then POD modes, then supremizers.
    pub velocity: Vec<VectorBoundedField<T>>,
    /// One lifting per outlet first, then POD modes.
    pub pressure: Vec<ScalarBoundedField<T>>,
    pub n_phi: usize,
    pub n_sup: usize,
    pub n_outlets: usize,
}

impl<T: Real> ExtendedBasis<T> {
    pub fn new(
        mesh: &StructuredMesh<T>,
        chi_u: VectorBoundedField<T>,
        phi: &[VectorField<T>],
        sup: &[VectorField<T>],
        chi_p: Vec<ScalarBoundedField<T>>,
        psi: &[ScalarField<T>],
    ) -> Result<Self> {
        let n = mesh.n_cells();
        for f in phi.iter().chain(sup) {
            check_len("velocity mode", n, f.len())?;
        }
        for f in psi {
            check_len("pressure mode", n, f.len())?;
        }
        check_len("velocity lifting", n, chi_u.cells.len())?;
        check_len("pressure liftings", mesh.n_outlets(), chi_p.len())?;
        let mut velocity = vec![chi_u];
        velocity.extend(phi.iter().chain(sup).map(|f| velocity0(mesh, f.clone())));
        let mut pressure = chi_p;
        pressure.extend(psi.iter().map(|f| pressure0(mesh, f.clone())));
        Ok(Self {
            velocity,
            pressure,
            n_phi: phi.len(),
            n_sup: sup.len(),
            n_outlets: mesh.n_outlets(),
        })
    }

    /// Velocity modes (POD plus supremizers).
    pub fn n_u(&self) -> usize {
        self.n_phi + self.n_sup
    }

    pub fn n_p(&self) -> usize {
        self.pressure.len() - self.n_outlets
    }
}

/// Reduced tensors over the extended bases; `U = 1 + n_u`, `P = n_outlets + n_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedOperators<T: Real> {
    pub n_phi: usize,
    pub n_sup: usize,
    pub n_outlets: usize,
    pub n_p: usize,
    /// `(v_i, v_j)`, U x U.
    pub mass: Matrix<T>,
    /// `(v_i, lap v_j)`, U x U.
    pub b: Matrix<T>,
    /// `(v_i, div(v_j (x) v_k))`, U x U x U.
    pub c: Tensor3<T>,
    /// `(v_i, grad w_j)`, U x P.
    pub k: Matrix<T>,
    /// `(w_i, div v_j)`, P x U.
    pub p: Matrix<T>,
    /// `(grad w_i, grad w_j)`, P x P.
    pub d: Matrix<T>,
    /// Outlet integral of `w_i dw_j/dn`, P x P.
    pub nbnd: Matrix<T>,
    /// `(w_i, div div(v_j (x) v_k))`, P x U x U.
    pub g: Tensor3<T>,
    /// `(w_i, div lap v_j)`, P x U.
    pub e: Matrix<T>,
    /// `(w_i, div)` of the unit inflow boundary data alone, length P.
    pub h: Vec<T>,
}

impl<T: Real> ReducedOperators<T> {
    pub fn n_u(&self) -> usize {
        self.n_phi + self.n_sup
    }

    pub fn is_finite(&self) -> bool {
        self.mass.is_finite()
            && self.b.is_finite()
            && self.c.is_finite()
            && self.k.is_finite()
            && self.p.is_finite()
            && self.d.is_finite()
            && self.nbnd.is_finite()
            && self.g.is_finite()
            && self.e.is_finite()
            && self.h.iter().all(|x| x.is_finite())
    }

    /// Copy without supremizer rows and columns.
    pub fn without_supremizers(&self) -> Self {
        let keep: Vec<usize> = (0..1 + self.n_phi).collect();
        let u = keep.len();
        let np = self.n_outlets + self.n_p;
        Self {
            n_phi: self.n_phi,
            n_sup: 0,
            n_outlets: self.n_outlets,
            n_p: self.n_p,
            mass: self.mass.block(0..u, 0..u),
            b: self.b.block(0..u, 0..u),
            c: self.c.block(0..u, 0..u, 0..u),
            k: self.k.block(0..u, 0..np),
            p: self.p.block(0..np, 0..u),
            d: self.d.clone(),
            nbnd: self.nbnd.clone(),
            g: self.g.block(0..np, 0..u, 0..u),
            e: self.e.block(0..np, 0..u),
            h: self.h.clone(),
        }
    }

    /// Velocity-mode by pressure-mode block of `k` (lifting rows and columns removed).
    pub fn coupling_block(&self) -> Matrix<T> {
        let u = 1 + self.n_u();
        let np = self.n_outlets + self.n_p;
        self.k.block(1..u, self.n_outlets..np)
    }
}

fn outlet_boundary_term<T: Real>(
    mesh: &StructuredMesh<T>,
    wi: &ScalarBoundedField<T>,
    wj: &ScalarBoundedField<T>,
) -> T {
    let ti = wi.traces(mesh);
    let mut s = T::zero();
    for (k, face) in mesh.boundary_faces().iter().enumerate() {
        if let BoundaryTag::Outlet(_) = face.tag {
            let mag = (face.area[0] * face.area[0] + face.area[1] * face.area[1]).sqrt();
            let dn = wj.bc.faces[k].normal_gradient(wj.cells.values[face.cell], face.distance);
            s += mag * ti[k] * dn;
        }
    }
    s
}

pub fn assemble_operators<T: Real>(
    mesh: &StructuredMesh<T>,
    basis: &ExtendedBasis<T>,
) -> Result<ReducedOperators<T>> {
    let v = &basis.velocity;
    let w = &basis.pressure;
    let (nu_ext, np_ext) = (v.len(), w.len());
    if nu_ext != 1 + basis.n_u() || np_ext != basis.n_outlets + basis.n_p() {
        return Err(Error::Config("extended basis sizes are inconsistent".into()));
    }
    let ip_v = |a: &VectorField<T>, b: &VectorField<T>| inner_product(mesh, a, b);
    let ip_s = |a: &ScalarField<T>, b: &ScalarField<T>| inner_product(mesh, a, b);

    let lap_v = v.iter().map(|f| laplacian(mesh, f)).collect::<Result<Vec<_>>>()?;
    let grad_w = w.iter().map(|f| gradient(mesh, f)).collect::<Result<Vec<_>>>()?;
    let div_v = v.iter().map(|f| divergence(mesh, f)).collect::<Result<Vec<_>>>()?;
    let div_lap = lap_v
        .iter()
        .map(|f| divergence(mesh, &velocity0(mesh, f.clone())))
        .collect::<Result<Vec<_>>>()?;
    let fluxes = v.iter().map(|f| FaceFluxes::new(mesh, f)).collect::<Result<Vec<_>>>()?;

    let mut mass = Matrix::zeros(nu_ext, nu_ext);
    let mut b = Matrix::zeros(nu_ext, nu_ext);
    for i in 0..nu_ext {
        for j in 0..nu_ext {
            mass[(i, j)] = ip_v(&v[i].cells, &v[j].cells)?;
            b[(i, j)] = ip_v(&v[i].cells, &lap_v[j])?;
        }
    }
    let mut c = Tensor3::zeros([nu_ext, nu_ext, nu_ext]);
    let mut g = Tensor3::zeros([np_ext, nu_ext, nu_ext]);
    for j in 0..nu_ext {
        for k in 0..nu_ext {
            let conv = convection_with_fluxes(mesh, &fluxes[j], &v[k].cells, &v[k].bc)?;
            for i in 0..nu_ext {
                c.set(i, j, k, ip_v(&v[i].cells, &conv)?);
            }
            let dd = divergence_parts(mesh, &conv, &velocity_bc(mesh, T::zero()))?;
            for i in 0..np_ext {
                g.set(i, j, k, ip_s(&w[i].cells, &dd)?);
            }
        }
    }
    let mut km = Matrix::zeros(nu_ext, np_ext);
    for i in 0..nu_ext {
        for j in 0..np_ext {
            km[(i, j)] = ip_v(&v[i].cells, &grad_w[j])?;
        }
    }
    let mut pm = Matrix::zeros(np_ext, nu_ext);
    let mut e = Matrix::zeros(np_ext, nu_ext);
    for i in 0..np_ext {
        for j in 0..nu_ext {
            pm[(i, j)] = ip_s(&w[i].cells, &div_v[j])?;
            e[(i, j)] = ip_s(&w[i].cells, &div_lap[j])?;
        }
    }
    let mut d = Matrix::zeros(np_ext, np_ext);
    let mut nbnd = Matrix::zeros(np_ext, np_ext);
    for i in 0..np_ext {
        for j in 0..np_ext {
            d[(i, j)] = ip_v(&grad_w[i], &grad_w[j])?;
            nbnd[(i, j)] = outlet_boundary_term(mesh, &w[i], &w[j]);
        }
    }
    let unit_inflow = BoundedField::new(
        VectorField::zeros(mesh.n_cells()),
        velocity_bc(mesh, T::one()),
    );
    let div_in = divergence(mesh, &unit_inflow)?;
    let h = w.iter().map(|f| ip_s(&f.cells, &div_in)).collect::<Result<Vec<_>>>()?;
    let ops = ReducedOperators {
        n_phi: basis.n_phi,
        n_sup: basis.n_sup,
        n_outlets: basis.n_outlets,
        n_p: basis.n_p(),
        mass,
        b,
        c,
        k: km,
        p: pm,
        d,
        nbnd,
        g,
        e,
        h,
    };
    if !ops.is_finite() {
        return Err(Error::Numerical("reduced operators contain non-finite entries".into()));
    }
    Ok(ops)
}
