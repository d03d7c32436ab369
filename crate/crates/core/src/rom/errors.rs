//! Reconstruction and projection errors against full-order fields.

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::mesh_fields::{inner_product, norm, Field, ScalarField, StructuredMesh, Value, VectorField};
use crate::scalar::Real;

/// Per-time error series. Relative errors divide by the full-order norm
/// (a zero reference norm makes the relative error equal the absolute one).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSeries<T> {
    pub times: Vec<T>,
    pub eps_u: Vec<T>,
    pub eps_p: Vec<T>,
    pub abs_u: Vec<T>,
    pub abs_p: Vec<T>,
    /// Relative distance of the full-order field to the span of the basis.
    pub proj_u: Vec<T>,
    pub proj_p: Vec<T>,
}

fn mean<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.iter().fold(T::zero(), |s, x| s + *x) / T::of_usize(v.len())
}

impl<T: Real> ErrorSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn mean_eps_u(&self) -> T {
        mean(&self.eps_u)
    }

    pub fn mean_eps_p(&self) -> T {
        mean(&self.eps_p)
    }

    pub fn mean_abs_u(&self) -> T {
        mean(&self.abs_u)
    }

    pub fn mean_abs_p(&self) -> T {
        mean(&self.abs_p)
    }

    /// Times where the reconstruction beats the projection onto the same
    /// space by more than `slack` (relative). Empty when consistent.
    pub fn projection_violations(&self, slack: T) -> Vec<T> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            let bad_u = self.eps_u[k] < self.proj_u[k] * (T::one() - slack);
            let bad_p = self.eps_p[k] < self.proj_p[k] * (T::one() - slack);
            if bad_u || bad_p {
                out.push(self.times[k]);
            }
        }
        out
    }
}

pub fn times_match<T: Real>(a: &[T], b: &[T]) -> Result<()> {
    check_len("time stamps", a.len(), b.len())?;
    for (x, y) in a.iter().zip(b) {
        let tol = T::lit(1e-9) * T::one().max(x.abs());
        if (*x - *y).abs() > tol {
            return Err(Error::Config(format!("time stamps do not match: {x} vs {y}")));
        }
    }
    Ok(())
}

/// `(absolute, relative)` weighted L2 distance.
pub fn field_error<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    reference: &Field<V>,
    approx: &Field<V>,
) -> Result<(T, T)> {
    let mut d = approx.clone();
    d.axpy(-T::one(), reference)?;
    let abs = norm(mesh, &d)?;
    let r = norm(mesh, reference)?;
    let rel = if r > T::zero() { abs / r } else { abs };
    Ok((abs, rel))
}

/// Weighted orthogonal projection of `f` onto the span of `basis`
/// (not necessarily orthonormal), through the normal equations.
pub fn project<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    basis: &[Field<V>],
    f: &Field<V>,
) -> Result<Field<V>> {
    let n = basis.len();
    let mut out = Field::zeros(f.len());
    if n == 0 {
        return Ok(out);
    }
    let gram = {
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = inner_product(mesh, &basis[i], &basis[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    };
    let rhs = basis.iter().map(|b| inner_product(mesh, b, f)).collect::<Result<Vec<_>>>()?;
    let c = gram.solve(&rhs)?;
    for (ci, b) in c.iter().zip(basis) {
        out.axpy(*ci, b)?;
    }
    // one refinement pass against round-off in the normal equations
    let mut r = f.clone();
    r.axpy(-T::one(), &out)?;
    let rhs2 = basis.iter().map(|b| inner_product(mesh, b, &r)).collect::<Result<Vec<_>>>()?;
    let c2 = gram.solve(&rhs2)?;
    for (ci, b) in c2.iter().zip(basis) {
        out.axpy(*ci, b)?;
    }
    Ok(out)
}

/// Relative projection error of `f` onto the span of `basis`.
pub fn projection_error<T: Real, V: Value<Scalar = T>>(
    mesh: &StructuredMesh<T>,
    basis: &[Field<V>],
    f: &Field<V>,
) -> Result<T> {
    let p = project(mesh, basis, f)?;
    Ok(field_error(mesh, f, &p)?.1)
}

/// Full-order and reduced fields at matching times.
pub struct ErrorInput<'a, T: Real> {
    pub fom_times: &'a [T],
    pub fom_u: &'a [VectorField<T>],
    pub fom_p: &'a [ScalarField<T>],
    pub rom_times: &'a [T],
    pub rom_u: &'a [VectorField<T>],
    pub rom_p: &'a [ScalarField<T>],
    /// Spaces the reduced fields live in (liftings included).
    pub u_space: &'a [VectorField<T>],
    pub p_space: &'a [ScalarField<T>],
}

pub fn rom_errors<T: Real>(mesh: &StructuredMesh<T>, input: &ErrorInput<'_, T>) -> Result<ErrorSeries<T>> {
    times_match(input.fom_times, input.rom_times)?;
    let n = input.fom_times.len();
    check_len("full-order velocity fields", n, input.fom_u.len())?;
    check_len("full-order pressure fields", n, input.fom_p.len())?;
    check_len("reduced velocity fields", n, input.rom_u.len())?;
    check_len("reduced pressure fields", n, input.rom_p.len())?;
    let mut s = ErrorSeries::default();
    for k in 0..n {
        let (au, ru) = field_error(mesh, &input.fom_u[k], &input.rom_u[k])?;
        let (ap, rp) = field_error(mesh, &input.fom_p[k], &input.rom_p[k])?;
        s.times.push(input.fom_times[k]);
        s.eps_u.push(ru);
        s.eps_p.push(rp);
        s.abs_u.push(au);
        s.abs_p.push(ap);
        s.proj_u.push(projection_error(mesh, input.u_space, &input.fom_u[k])?);
        s.proj_p.push(projection_error(mesh, input.p_space, &input.fom_p[k])?);
    }
    Ok(s)
}
