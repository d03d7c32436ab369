//! Supremizer enrichment of the velocity space.
//!
//! A supremizer solves `lap s = -grad q` with `s = 0` on the whole boundary,
//! for `q` a pressure mode (exact variant) or a pressure snapshot
//! (approximate variant, compressed afterwards by POD).

use crate::error::{Error, Result};
use crate::linalg::cg;
use crate::mesh_fields::{
    gradient, inner_product, laplacian_parts, BoundaryValues, FaceCondition, ScalarBoundedField,
    ScalarField, StructuredMesh, VectorField,
};
use crate::pod::{compute_basis, SnapshotMatrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupremizerVariant {
    Exact,
    Approximate,
}

/// Solves `lap s = -grad q` with `s = 0` on the boundary for one source `q`.
pub fn supremizer<T: Real>(mesh: &StructuredMesh<T>, q: &ScalarBoundedField<T>, tol: T) -> Result<VectorField<T>> {
    let grad = gradient(mesh, q)?;
    let wall = BoundaryValues::from_tags(mesh, |_| FaceCondition::Dirichlet(T::zero()));
    let n = mesh.n_cells();
    let mut out = vec![[T::zero(); 2]; n];
    for comp in 0..2 {
        // -lap s = grad q
        let b: Vec<T> = grad.values.iter().map(|g| g[comp]).collect();
        let mut x = vec![T::zero(); n];
        cg(
            |v, o| {
                let l = laplacian_parts(mesh, &ScalarField::from_values(v.to_vec()), &wall).expect("sizes match");
                for (oi, li) in o.iter_mut().zip(&l.values) {
                    *oi = -*li;
                }
            },
            &b,
            &mut x,
            tol,
            20 * n + 100,
        )?;
        for (c, xi) in x.into_iter().enumerate() {
            out[c][comp] = xi;
        }
    }
    Ok(VectorField::from_values(out))
}

/// Supremizers for a set of pressure fields.
///
/// `Exact`: one per entry of `sources` (the pressure modes). `Approximate`:
/// `sources` are pressure snapshots; their supremizers are compressed to
/// `count` POD modes.
pub fn compute_supremizers<T: Real>(
    mesh: &StructuredMesh<T>,
    sources: &[ScalarBoundedField<T>],
    variant: SupremizerVariant,
    count: usize,
    tol: T,
) -> Result<Vec<VectorField<T>>> {
    if sources.is_empty() {
        return Err(Error::Config("supremizers need at least one pressure field".into()));
    }
    let raw = sources
        .iter()
        .map(|q| supremizer(mesh, q, tol))
        .collect::<Result<Vec<_>>>()?;
    match variant {
        SupremizerVariant::Exact => Ok(raw),
        SupremizerVariant::Approximate => {
            let s = SnapshotMatrix::new(mesh, raw)?;
            Ok(compute_basis(&s, count)?.modes)
        }
    }
}

/// Gram-Schmidt of `extra` against the orthonormal `base` and each other;
/// members that are numerically dependent are dropped.
pub fn enrich<T: Real>(
    mesh: &StructuredMesh<T>,
    base: &[VectorField<T>],
    extra: &[VectorField<T>],
) -> Result<Vec<VectorField<T>>> {
    let mut out: Vec<VectorField<T>> = Vec::with_capacity(extra.len());
    for s in extra {
        let start = inner_product(mesh, s, s)?.sqrt();
        if !(start > T::zero()) {
            continue;
        }
        let mut v = s.clone();
        for _ in 0..2 {
            for m in base.iter().chain(out.iter()) {
                let r = inner_product(mesh, &v, m)?;
                v.axpy(-r, m)?;
            }
        }
        let nrm = inner_product(mesh, &v, &v)?.sqrt();
        if nrm > T::lit(1e-10) * start {
            out.push(v.scaled(T::one() / nrm));
        }
    }
    Ok(out)
}
