//! Windkessel time-step convergence study.

use std::time::Instant;

use crate::error::Result;
use crate::windkessel::{convergence_study, AnalyticVariant, ConvergenceRow, Reference};

use super::config::PipelineConfig;

pub const WK_CHECK_DTS: [f64; 4] = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
/// Accepted error ratio per halving of dt.
pub const FIRST_ORDER_BAND: (f64, f64) = (1.7, 2.3);

#[derive(Clone, Debug, PartialEq)]
pub struct WkCheck {
    pub variant: AnalyticVariant,
    /// Against the closed-form trace.
    pub analytic: Vec<ConvergenceRow>,
    /// Against the exact solution of the continuous model.
    pub exact: Vec<ConvergenceRow>,
    pub seconds: f64,
}

impl WkCheck {
    /// Every ratio against the closed form lies in [`FIRST_ORDER_BAND`].
    pub fn first_order(&self) -> bool {
        in_band(&self.analytic)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# reference: closed form ({:?})\n# dt max_error ratio\n", self.variant);
        table(&mut s, &self.analytic);
        s.push_str("# reference: exact solution of the lumped model\n# dt max_error ratio\n");
        table(&mut s, &self.exact);
        s.push_str(&format!(
            "first order against the closed form (ratios in [{}, {}]): {}\n",
            FIRST_ORDER_BAND.0,
            FIRST_ORDER_BAND.1,
            if self.first_order() { "yes" } else { "no" }
        ));
        s.push_str(&format!(
            "first order against the exact solution: {}\n",
            if in_band(&self.exact) { "yes" } else { "no" }
        ));
        s
    }
}

fn in_band(rows: &[ConvergenceRow]) -> bool {
    rows.iter()
        .filter_map(|r| r.ratio)
        .all(|q| (FIRST_ORDER_BAND.0..=FIRST_ORDER_BAND.1).contains(&q))
}

fn table(s: &mut String, rows: &[ConvergenceRow]) {
    for r in rows {
        let ratio = r.ratio.map(|q| format!("{q:.4}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!("{:.4e} {:.6e} {}\n", r.dt, r.max_error, ratio));
    }
}

/// Drives outlet 0 with `Q = pi R^2 u(t)` over `(t0, T]`.
pub fn run_wk_check(cfg: &PipelineConfig) -> Result<WkCheck> {
    let start = Instant::now();
    let f = &cfg.fom;
    let params = &f.windkessel[0];
    let area = std::f64::consts::PI * f.radius * f.radius;
    let span = f.time.t_end - f.time.t0;
    let variant = if cfg.analytic_decaying_exponential {
        AnalyticVariant::DecayingExponential
    } else {
        AnalyticVariant::AsPrinted
    };
    let analytic = convergence_study(params, f.u0, area, span, &WK_CHECK_DTS, Reference::Analytic(variant))?;
    let exact = convergence_study(params, f.u0, area, span, &WK_CHECK_DTS, Reference::ExactOde)?;
    Ok(WkCheck { variant, analytic, exact, seconds: start.elapsed().as_secs_f64() })
}
