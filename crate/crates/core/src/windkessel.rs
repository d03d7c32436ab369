//! Three-element Windkessel outlet model.
//!
//! `C dpp/dt + (pp - pd)/Rd = Q`, `p = pp + Rp Q`. The two-element model is
//! the special case `Rp = 0`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindkesselParams<T> {
    /// Proximal resistance.
    pub rp: T,
    /// Distal resistance.
    pub rd: T,
    /// Compliance.
    pub c: T,
    /// Distal reference pressure.
    pub pd: T,
}

impl<T: Real> WindkesselParams<T> {
    pub fn new(rp: T, rd: T, c: T, pd: T) -> Result<Self> {
        let p = Self { rp, rd, c, pd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rd > T::zero() && self.c > T::zero() && self.rp >= T::zero() && self.pd.is_finite()) {
            return Err(Error::Config(format!(
                "Windkessel parameters need Rd > 0, C > 0, Rp >= 0 (got Rp={}, Rd={}, C={})",
                self.rp, self.rd, self.c
            )));
        }
        Ok(())
    }

    /// Time constant `Rd C`.
    pub fn tau(&self) -> T {
        self.rd * self.c
    }

    /// Parameters of the reference channel case.
    pub fn case1() -> Self {
        Self {
            rp: T::lit(1.0e4),
            rd: T::lit(1.0e5),
            c: T::lit(0.07957e-5),
            pd: T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindkesselState<T> {
    /// Proximal pressure.
    pub pp: T,
    /// Outlet pressure.
    pub p: T,
    pub t: T,
}

/// Implicit Euler update driven by the flow rate `q` of the previous level.
pub fn step<T: Real>(
    state: &WindkesselState<T>,
    q: T,
    dt: T,
    params: &WindkesselParams<T>,
) -> Result<WindkesselState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Config(format!("Windkessel time step must be positive, got {dt}")));
    }
    let a = params.c / dt;
    let pp = (a * state.pp + q + params.pd / params.rd) / (a + T::one() / params.rd);
    Ok(WindkesselState {
        pp,
        p: pp + params.rp * q,
        t: state.t + dt,
    })
}

/// Pulsatile plug inflow `u0 sin^2(t / (4 Rd C))`.
pub fn inlet_profile<T: Real>(t: T, u0: T, params: &WindkesselParams<T>) -> T {
    let s = (t / (T::lit(4.0) * params.tau())).sin();
    u0 * s * s
}

/// Which closed form to use for the reference outflow pressure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticVariant {
    /// `Rd u0 A [(Rp/Rd + 1/2) sin^2(t/4RdC) + (1 - e^{t/2RdC} - sin(t/2RdC))/4]`.
    AsPrinted,
    /// Same expression with `e^{-t/2RdC}`.
    DecayingExponential,
}

/// Closed-form outflow pressure for inflow area `area`.
pub fn analytic_pressure<T: Real>(
    t: T,
    u0: T,
    area: T,
    params: &WindkesselParams<T>,
    variant: AnalyticVariant,
) -> T {
    let tau = params.tau();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let s = (t / (T::lit(4.0) * tau)).sin();
    let x = t / (T::lit(2.0) * tau);
    let e = match variant {
        AnalyticVariant::AsPrinted => x.exp(),
        AnalyticVariant::DecayingExponential => (-x).exp(),
    };
    params.rd * u0 * area * ((params.rp / params.rd + half) * s * s + quarter * (T::one() - e - x.sin()))
}

/// Closed-form outflow pressure with circular inflow area `pi R^2`.
pub fn analytic_case1_pressure<T: Real>(t: T, u0: T, radius: T, params: &WindkesselParams<T>) -> T {
    analytic_pressure(t, u0, T::PI() * radius * radius, params, AnalyticVariant::AsPrinted)
}

/// Exact solution of the continuous model for `Q = area u0 sin^2(t/4RdC)`,
/// `pp(0) = pd`.
pub fn exact_pressure<T: Real>(t: T, u0: T, area: T, params: &WindkesselParams<T>) -> T {
    let tau = params.tau();
    let w = t / (T::lit(2.0) * tau);
    let amp = params.rd * area * u0;
    let pp = params.pd
        + amp
            * (T::lit(0.5) - T::lit(0.4) * w.cos() - T::lit(0.2) * w.sin()
                - T::lit(0.1) * (-t / tau).exp());
    let s = (t / (T::lit(4.0) * tau)).sin();
    pp + params.rp * area * u0 * s * s
}

/// Reference trace used by [`convergence_study`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    Analytic(AnalyticVariant),
    ExactOde,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// Max |discrete - reference| over the time window.
    pub max_error: f64,
    /// Error of the previous (coarser) row divided by this one.
    pub ratio: Option<f64>,
}

/// Runs the discrete model with the prescribed flow `area u(t)` for each
/// `dt` over `(0, t_end]` and measures the maximum deviation from `reference`.
pub fn convergence_study<T: Real>(
    params: &WindkesselParams<T>,
    u0: T,
    area: T,
    t_end: T,
    dts: &[T],
    reference: Reference,
) -> Result<Vec<ConvergenceRow>> {
    params.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(dts.len());
    for &dt in dts {
        let n = (t_end / dt).round().to_usize().unwrap_or(0);
        if n == 0 {
            return Err(Error::Config(format!("time step {dt} does not fit in (0, {t_end}]")));
        }
        let mut state = WindkesselState {
            pp: params.pd,
            p: params.pd,
            t: T::zero(),
        };
        let mut err = T::zero();
        for k in 0..n {
            let t_old = dt * T::of_usize(k);
            let q = area * inlet_profile(t_old, u0, params);
            state = step(&state, q, dt, params)?;
            let t_new = dt * T::of_usize(k + 1);
            let r = match reference {
                Reference::Analytic(v) => analytic_pressure(t_new, u0, area, params, v),
                Reference::ExactOde => exact_pressure(t_new, u0, area, params),
            };
            err = err.max((state.p - r).abs());
        }
        let max_error = err.as_f64();
        let ratio = rows.last().map(|prev| prev.max_error / max_error);
        rows.push(ConvergenceRow { dt: dt.as_f64(), max_error, ratio });
    }
    Ok(rows)
}
