//! Matrix-free Krylov solvers. Operators are closures `apply(x, y)` writing
//! `y = A x`.

use crate::error::{check_len, Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final residual relative to `||b||`.
    pub residual: f64,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Tolerances tighter than the working precision cannot be met; clamp them.
fn effective_tol<T: Real>(tol: T) -> T {
    tol.max(T::lit(16.0) * T::epsilon())
}

/// Conjugate gradients for symmetric positive-definite `A`. `x` holds the
/// initial guess on entry.
pub fn cg<T: Real>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> Result<SolveReport> {
    check_len("conjugate gradients", b.len(), x.len())?;
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let tol = effective_tol(tol);
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![T::zero(); n];
    for it in 0..=max_iter {
        let res = rr.sqrt() / bnorm;
        if res <= tol {
            return Ok(SolveReport {
                iterations: it,
                residual: res.as_f64(),
            });
        }
        if !res.is_finite() || it == max_iter {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Numerical(format!(
                "conjugate gradients met a non-positive curvature {pap:.3e}; operator is not SPD"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        solver: "conjugate gradients",
        iterations: max_iter,
        residual: (rr.sqrt() / bnorm).as_f64(),
    })
}

/// Stabilized bi-conjugate gradients for general nonsingular `A`.
pub fn bicgstab<T: Real>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> Result<SolveReport> {
    check_len("BiCGSTAB", b.len(), x.len())?;
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let tol = effective_tol(tol);
    let mut tmp = vec![T::zero(); n];
    apply(x, &mut tmp);
    let mut r: Vec<T> = b.iter().zip(&tmp).map(|(&bi, &ai)| bi - ai).collect();
    let r_hat = r.clone();
    let mut rho = T::one();
    let mut alpha = T::one();
    let mut omega = T::one();
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(SolveReport {
                iterations: it,
                residual: res.as_f64(),
            });
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() || omega == T::zero() {
            return Err(Error::Numerical("BiCGSTAB breakdown".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == T::zero() {
            return Err(Error::Numerical("BiCGSTAB breakdown".into()));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(SolveReport {
                iterations: it + 1,
                residual: (norm(&s) / bnorm).as_f64(),
            });
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bnorm;
        if !res.is_finite() {
            break;
        }
    }
    if res <= tol {
        return Ok(SolveReport {
            iterations: max_iter,
            residual: res.as_f64(),
        });
    }
    Err(Error::NoConvergence {
        solver: "BiCGSTAB",
        iterations: max_iter,
        residual: res.as_f64(),
    })
}
