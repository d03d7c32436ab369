//! Time integration of the reduced system.
//!
//! Both integrators use implicit Euler with Newton iterations. Lifting
//! coefficients enter as prescribed values: the extended velocity vector is
//! `[g_u, a]` and the extended pressure vector `[g_p_1..g_p_No, b]`.
//!
//! * supremizer stabilization: solve the saddle system
//!   `M (a' - a)/dt = nu B a' - C(a', a') - K b'`, `P a' = 0` for `(a', b')`;
//! * pressure Poisson stabilization: `b' = (D - N)^-1 [G(a', a') - nu E a'
//!   - h dg_u/dt - D_chi g_p]` is substituted into the momentum equation.

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::operators::ReducedOperators;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stabilization {
    Supremizer,
    PressurePoisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvectionTreatment {
    /// Quadratic term fully at the new level.
    Implicit,
    /// Transporting velocity lagged at the old level, as in the full-order solver.
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorSettings<T> {
    pub nu: T,
    pub newton_tol: T,
    pub max_newton: usize,
    /// Abort when `max |a|` exceeds `blowup_factor * reference_scale`.
    pub blowup_factor: T,
    pub reference_scale: T,
    pub convection: ConvectionTreatment,
}

impl<T: Real> IntegratorSettings<T> {
    pub fn new(nu: T, reference_scale: T) -> Self {
        Self {
            nu,
            newton_tol: T::lit(1e-12),
            max_newton: 25,
            blowup_factor: T::lit(1e6),
            reference_scale,
            convection: ConvectionTreatment::Implicit,
        }
    }
}

/// Boundary data on the integration grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Forcing<T> {
    /// Strictly increasing; `times[0]` is the initial time.
    pub times: Vec<T>,
    pub g_u: Vec<T>,
    /// One row per time, one entry per outlet.
    pub g_p: Vec<Vec<T>>,
}

impl<T: Real> Forcing<T> {
    fn validate(&self, n_outlets: usize) -> Result<()> {
        if self.times.len() < 2 {
            return Err(Error::Config("integration needs at least one step".into()));
        }
        check_len("inflow samples", self.times.len(), self.g_u.len())?;
        check_len("outflow samples", self.times.len(), self.g_p.len())?;
        for row in &self.g_p {
            check_len("outlet pressures", n_outlets, row.len())?;
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("integration times must increase strictly".into()));
        }
        Ok(())
    }

    /// `dg_u/dt` by central differences, one-sided at the ends.
    pub fn g_u_rate(&self) -> Vec<T> {
        let n = self.times.len();
        (0..n)
            .map(|k| {
                let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (self.g_u[hi] - self.g_u[lo]) / (self.times[hi] - self.times[lo])
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    /// Velocity mode coefficients per time (without the lifting entry).
    pub a: Vec<Vec<T>>,
    /// Pressure mode coefficients per time (without the lifting entries).
    pub b: Vec<Vec<T>>,
    pub newton_iterations: usize,
}

struct Ctx<'a, T: Real> {
    ops: &'a ReducedOperators<T>,
    s: &'a IntegratorSettings<T>,
    nu_ext: usize,
    no: usize,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn ext_u(&self, g: T, a: &[T]) -> Vec<T> {
        let mut v = Vec::with_capacity(a.len() + 1);
        v.push(g);
        v.extend_from_slice(a);
        v
    }

    fn ext_p(&self, g: &[T], b: &[T]) -> Vec<T> {
        let mut v = g.to_vec();
        v.extend_from_slice(b);
        v
    }

    fn convect(&self, w: &[T], u: &[T]) -> Vec<T> {
        self.ops.c.contract(w, u)
    }

    /// Momentum residual rows (modal rows only) and its Jacobian columns for `a`,
    /// excluding the pressure term.
    fn momentum(&self, dt: T, ua: &[T], ua_old: &[T], g_new: T, g_old: T) -> (Vec<T>, Matrix<T>) {
        let ops = self.ops;
        let n = self.nu_ext - 1;
        let nu = self.s.nu;
        let implicit = self.s.convection == ConvectionTreatment::Implicit;
        let w = if implicit { ua } else { ua_old };
        let conv = self.convect(w, ua);
        let mut r = vec![T::zero(); n];
        let mut jac = Matrix::zeros(n, n);
        for i in 0..n {
            let row = i + 1;
            let mut acc = ops.mass[(row, 0)] * (g_new - g_old);
            for j in 1..self.nu_ext {
                acc += ops.mass[(row, j)] * (ua[j] - ua_old[j]);
            }
            let mut visc = T::zero();
            for j in 0..self.nu_ext {
                visc += ops.b[(row, j)] * ua[j];
            }
            r[i] = acc - dt * (nu * visc - conv[row]);
            for m in 0..n {
                let col = m + 1;
                let mut dconv = T::zero();
                for k in 0..self.nu_ext {
                    // d/du_col of sum_jk C_row,j,k w_j u_k
                    dconv += ops.c.get(row, k, col) * w[k];
                    if implicit {
                        dconv += ops.c.get(row, col, k) * ua[k];
                    }
                }
                jac[(i, m)] = ops.mass[(row, col)] - dt * (nu * ops.b[(row, col)] - dconv);
            }
        }
        (r, jac)
    }

    fn check_blowup(&self, a: &[T], t: T) -> Result<()> {
        let scale = if self.s.reference_scale > T::zero() { self.s.reference_scale } else { T::one() };
        let limit = self.s.blowup_factor * scale;
        let m = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if !m.is_finite() || m > limit {
            return Err(Error::Numerical(format!(
                "reduced solution blew up at t = {t}: max |a| = {m:.3e} exceeds {limit:.3e}"
            )));
        }
        Ok(())
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn newton_converged<T: Real>(delta: &[T], x: &[T], s: &IntegratorSettings<T>) -> bool {
    let tol = s.newton_tol.max(T::lit(64.0) * T::epsilon());
    max_abs(delta) <= tol * max_abs(x).max(s.reference_scale)
}

pub fn integrate_supremizer<T: Real>(
    ops: &ReducedOperators<T>,
    a0: &[T],
    b0: &[T],
    forcing: &Forcing<T>,
    settings: &IntegratorSettings<T>,
) -> Result<Trajectory<T>> {
    let nu_m = ops.n_u();
    let np_m = ops.n_p;
    check_len("initial velocity coefficients", nu_m, a0.len())?;
    check_len("initial pressure coefficients", np_m, b0.len())?;
    forcing.validate(ops.n_outlets)?;
    let ctx = Ctx { ops, s: settings, nu_ext: 1 + nu_m, no: ops.n_outlets };
    let mut traj = Trajectory {
        times: vec![forcing.times[0]],
        a: vec![a0.to_vec()],
        b: vec![b0.to_vec()],
        newton_iterations: 0,
    };
    let mut a = a0.to_vec();
    let mut b = b0.to_vec();
    let n = nu_m + np_m;
    for step in 1..forcing.times.len() {
        let dt = forcing.times[step] - forcing.times[step - 1];
        let (g_old, g_new) = (forcing.g_u[step - 1], forcing.g_u[step]);
        let gp = &forcing.g_p[step];
        let ua_old = ctx.ext_u(g_old, &a);
        let mut x: Vec<T> = a.iter().chain(&b).copied().collect();
        let mut converged = false;
        for _ in 0..settings.max_newton {
            traj.newton_iterations += 1;
            let ua = ctx.ext_u(g_new, &x[..nu_m]);
            let pb = ctx.ext_p(gp, &x[nu_m..]);
            let (mut rm, jm) = ctx.momentum(dt, &ua, &ua_old, g_new, g_old);
            let mut jac = Matrix::zeros(n, n);
            let mut res = vec![T::zero(); n];
            for i in 0..nu_m {
                let row = i + 1;
                let mut kp = T::zero();
                for j in 0..pb.len() {
                    kp += ops.k[(row, j)] * pb[j];
                }
                rm[i] += dt * kp;
                res[i] = rm[i];
                for m in 0..nu_m {
                    jac[(i, m)] = jm[(i, m)];
                }
                for m in 0..np_m {
                    jac[(i, nu_m + m)] = dt * ops.k[(row, ctx.no + m)];
                }
            }
            for q in 0..np_m {
                let row = ctx.no + q;
                let mut acc = T::zero();
                for j in 0..ctx.nu_ext {
                    acc += ops.p[(row, j)] * ua[j];
                }
                res[nu_m + q] = acc;
                for m in 0..nu_m {
                    jac[(nu_m + q, m)] = ops.p[(row, m + 1)];
                }
            }
            let delta = jac.solve(&res).map_err(|e| {
                Error::Numerical(format!("saddle-point Newton system at t = {}: {e}", forcing.times[step]))
            })?;
            for (xi, di) in x.iter_mut().zip(&delta) {
                *xi -= *di;
            }
            if newton_converged(&delta, &x, settings) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                solver: "reduced Newton (supremizer)",
                iterations: settings.max_newton,
                residual: f64::NAN,
            });
        }
        a = x[..nu_m].to_vec();
        b = x[nu_m..].to_vec();
        ctx.check_blowup(&a, forcing.times[step])?;
        traj.times.push(forcing.times[step]);
        traj.a.push(a.clone());
        traj.b.push(b.clone());
    }
    Ok(traj)
}

/// Modal pressure coefficients from the reduced pressure Poisson equation,
/// plus their derivative with respect to the modal velocity coefficients.
fn ppe_pressure<T: Real>(
    ops: &ReducedOperators<T>,
    lhs: &Matrix<T>,
    ua: &[T],
    ua_old: &[T],
    g_rate: T,
    gp: &[T],
    settings: &IntegratorSettings<T>,
) -> Result<(Vec<T>, Matrix<T>)> {
    let no = ops.n_outlets;
    let np_m = ops.n_p;
    let nu_ext = ua.len();
    let implicit = settings.convection == ConvectionTreatment::Implicit;
    let w = if implicit { ua } else { ua_old };
    let gq = ops.g.contract(w, ua);
    let mut rhs = vec![T::zero(); np_m];
    let mut drhs = Matrix::zeros(np_m, nu_ext - 1);
    for q in 0..np_m {
        let row = no + q;
        let mut v = gq[row] - ops.h[row] * g_rate;
        for j in 0..nu_ext {
            v -= settings.nu * ops.e[(row, j)] * ua[j];
        }
        for k in 0..no {
            v -= (ops.d[(row, k)] - ops.nbnd[(row, k)]) * gp[k];
        }
        rhs[q] = v;
        for m in 0..nu_ext - 1 {
            let col = m + 1;
            let mut dv = -settings.nu * ops.e[(row, col)];
            for k in 0..nu_ext {
                dv += ops.g.get(row, k, col) * w[k];
                if implicit {
                    dv += ops.g.get(row, col, k) * ua[k];
                }
            }
            drhs[(q, m)] = dv;
        }
    }
    let b = lhs.solve(&rhs)?;
    let mut db = Matrix::zeros(np_m, nu_ext - 1);
    for m in 0..nu_ext - 1 {
        let col = lhs.solve(&drhs.column(m))?;
        for q in 0..np_m {
            db[(q, m)] = col[q];
        }
    }
    Ok((b, db))
}

pub fn integrate_ppe<T: Real>(
    ops: &ReducedOperators<T>,
    a0: &[T],
    forcing: &Forcing<T>,
    settings: &IntegratorSettings<T>,
) -> Result<Trajectory<T>> {
    let nu_m = ops.n_u();
    let np_m = ops.n_p;
    check_len("initial velocity coefficients", nu_m, a0.len())?;
    forcing.validate(ops.n_outlets)?;
    let no = ops.n_outlets;
    let lhs = Matrix::from_fn(np_m, np_m, |i, j| ops.d[(no + i, no + j)] - ops.nbnd[(no + i, no + j)]);
    if np_m > 0 {
        lhs.solve(&vec![T::zero(); np_m]).map_err(|_| {
            Error::Numerical(
                "reduced pressure Poisson matrix D - N is singular; anchor the pressure with an outlet lifting".into(),
            )
        })?;
    }
    let rates = forcing.g_u_rate();
    let ctx = Ctx { ops, s: settings, nu_ext: 1 + nu_m, no };
    let mut a = a0.to_vec();
    let b_init = {
        let ua = ctx.ext_u(forcing.g_u[0], &a);
        ppe_pressure(ops, &lhs, &ua, &ua, rates[0], &forcing.g_p[0], settings)?.0
    };
    let mut traj = Trajectory {
        times: vec![forcing.times[0]],
        a: vec![a.clone()],
        b: vec![b_init],
        newton_iterations: 0,
    };
    for step in 1..forcing.times.len() {
        let dt = forcing.times[step] - forcing.times[step - 1];
        let (g_old, g_new) = (forcing.g_u[step - 1], forcing.g_u[step]);
        let gp = &forcing.g_p[step];
        let ua_old = ctx.ext_u(g_old, &a);
        let mut x = a.clone();
        let mut b = Vec::new();
        let mut converged = false;
        for _ in 0..settings.max_newton {
            traj.newton_iterations += 1;
            let ua = ctx.ext_u(g_new, &x);
            let (bb, db) = ppe_pressure(ops, &lhs, &ua, &ua_old, rates[step], gp, settings)?;
            let pb = ctx.ext_p(gp, &bb);
            let (mut r, mut jac) = ctx.momentum(dt, &ua, &ua_old, g_new, g_old);
            for i in 0..nu_m {
                let row = i + 1;
                let mut kp = T::zero();
                for j in 0..pb.len() {
                    kp += ops.k[(row, j)] * pb[j];
                }
                r[i] += dt * kp;
                for m in 0..nu_m {
                    let mut s = T::zero();
                    for q in 0..np_m {
                        s += ops.k[(row, no + q)] * db[(q, m)];
                    }
                    jac[(i, m)] += dt * s;
                }
            }
            let delta = jac.solve(&r).map_err(|e| {
                Error::Numerical(format!("PPE Newton system at t = {}: {e}", forcing.times[step]))
            })?;
            for (xi, di) in x.iter_mut().zip(&delta) {
                *xi -= *di;
            }
            b = bb;
            if newton_converged(&delta, &x, settings) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                solver: "reduced Newton (PPE)",
                iterations: settings.max_newton,
                residual: f64::NAN,
            });
        }
        // pressure consistent with the converged velocity
        let ua = ctx.ext_u(g_new, &x);
        b = ppe_pressure(ops, &lhs, &ua, &ua_old, rates[step], gp, settings).map(|r| r.0).unwrap_or(b);
        a = x;
        ctx.check_blowup(&a, forcing.times[step])?;
        traj.times.push(forcing.times[step]);
        traj.a.push(a.clone());
        traj.b.push(b);
    }
    Ok(traj)
}
