//! Online phase: boundary data, reduced integration and reconstruction.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fom::SnapshotDatabase;
use crate::linalg::textio::{parse_real, read_text};
use crate::mesh_fields::{ScalarField, VectorField};
use crate::nn::predict_outflow;
use crate::rom::{
    integrate_ppe, integrate_supremizer, rom_errors, ErrorInput, ErrorSeries, Forcing, IntegratorSettings,
    Stabilization,
};

use super::offline::OfflineModel;

/// Where the outlet pressure used at a requested time came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GpSource {
    /// Windkessel distal pressure at the initial time.
    Initial,
    /// Trace stored with the training snapshots.
    Snapshot,
    /// Outflow network inside its training range.
    Network,
    /// Outflow network outside its training range.
    NetworkExtrapolated,
}

impl GpSource {
    pub fn name(self) -> &'static str {
        match self {
            GpSource::Initial => "initial",
            GpSource::Snapshot => "snapshot",
            GpSource::Network => "network",
            GpSource::NetworkExtrapolated => "network-extrapolated",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OnlineRun {
    pub stabilization: Stabilization,
    pub times: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub g_u: Vec<f64>,
    pub g_p: Vec<Vec<f64>>,
    pub provenance: Vec<GpSource>,
    /// Requested time lies outside `(t0, T]`.
    pub extrapolated: Vec<bool>,
    pub warnings: Vec<String>,
    pub u: Vec<VectorField<f64>>,
    pub p: Vec<ScalarField<f64>>,
    pub newton_iterations: usize,
    /// Wall clock of boundary data, integration and reconstruction.
    pub seconds: f64,
}

/// Parses `--times`: `training`, `midpoints`, a comma/space separated list,
/// or the path of a file holding such a list.
pub fn parse_times(spec: &str, model: &OfflineModel) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let snaps: Vec<f64> = model.traces.times.iter().copied().filter(|&t| t > model.config.fom.time.t0).collect();
    match spec {
        "training" => return Ok(snaps),
        "midpoints" => {
            let t0 = model.config.fom.time.t0;
            let mut prev = t0;
            let mut out = Vec::with_capacity(snaps.len());
            for &t in &snaps {
                out.push(0.5 * (prev + t));
                prev = t;
            }
            return Ok(out);
        }
        _ => {}
    }
    let path = Path::new(spec);
    let text = if path.is_file() { read_text(path)? } else { spec.to_string() };
    let times = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_real::<f64>(s).ok_or_else(|| Error::Config(format!("bad time value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(times)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Integrates the reduced model up to each requested time and reconstructs
/// the fields there. Only bundle data and boundary traces enter the solve.
pub fn run_online(model: &OfflineModel, times: &[f64], stabilization: Stabilization) -> Result<OnlineRun> {
    if times.is_empty() {
        return Err(Error::Config("no evaluation times given".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("evaluation times must be finite and strictly increasing".into()));
    }
    let cfg = &model.config;
    let (t0, t_end) = (cfg.fom.time.t0, cfg.fom.time.t_end);
    if times[0] < t0 && !close(times[0], t0) {
        return Err(Error::Config(format!(
            "evaluation time {} precedes the initial time {t0}; the reduced model only integrates forward",
            times[0]
        )));
    }
    let start = Instant::now();
    let mut warnings = Vec::new();
    let extrapolated: Vec<bool> = times.iter().map(|&t| close(t, t0) || (t > t_end && !close(t, t_end))).collect();
    for (t, _) in times.iter().zip(&extrapolated).filter(|(_, e)| **e) {
        warnings.push(format!("time {t} lies outside ({t0}, {t_end}]; result is extrapolated"));
    }

    // integration grid: t0, then `substeps` equal steps per requested interval
    let mut grid = vec![t0];
    let mut marks = Vec::with_capacity(times.len());
    for &t in times {
        let prev = *grid.last().unwrap();
        if close(t, prev) {
            marks.push(grid.len() - 1);
            continue;
        }
        for s in 1..=cfg.substeps {
            grid.push(if s == cfg.substeps { t } else { prev + (t - prev) * s as f64 / cfg.substeps as f64 });
        }
        marks.push(grid.len() - 1);
    }

    let wk = &cfg.fom.windkessel;
    let initial_gp: Vec<f64> = (0..model.mesh.n_outlets()).map(|j| wk[j.min(wk.len() - 1)].pd).collect();
    let mut g_p = Vec::with_capacity(grid.len());
    let mut source = Vec::with_capacity(grid.len());
    for &t in &grid {
        if close(t, t0) {
            g_p.push(initial_gp.clone());
            source.push(GpSource::Initial);
        } else if let Some(k) = model.traces.times.iter().position(|&s| close(s, t)) {
            g_p.push(model.traces.g_p[k].clone());
            source.push(GpSource::Snapshot);
        } else {
            let pred = predict_outflow(&model.nn, t);
            g_p.push(pred.values);
            source.push(if pred.extrapolated { GpSource::NetworkExtrapolated } else { GpSource::Network });
        }
    }
    let g_u: Vec<f64> = grid.iter().map(|&t| cfg.fom.inlet(t)).collect();
    let forcing = Forcing { times: grid.clone(), g_u: g_u.clone(), g_p: g_p.clone() };

    let mut settings = IntegratorSettings::new(cfg.fom.nu, model.coef_scale);
    settings.convection = cfg.convection;
    let n_phi = model.phi.len();
    let (traj, modes) = match stabilization {
        Stabilization::Supremizer => {
            if forcing.times.len() < 2 {
                (None, model.velocity_modes())
            } else {
                let t = integrate_supremizer(&model.ops, &model.a0, &model.b0, &forcing, &settings)?;
                (Some(t), model.velocity_modes())
            }
        }
        Stabilization::PressurePoisson => {
            let ops = model.ops.without_supremizers();
            if forcing.times.len() < 2 {
                (None, model.phi.clone())
            } else {
                let t = integrate_ppe(&ops, &model.a0[..n_phi], &forcing, &settings)?;
                (Some(t), model.phi.clone())
            }
        }
    };
    let (all_a, all_b, newton) = match traj {
        Some(t) => (t.a, t.b, t.newton_iterations),
        None => {
            let a0 = model.a0[..modes.len()].to_vec();
            (vec![a0], vec![model.b0.clone()], 0)
        }
    };

    let mut run = OnlineRun {
        stabilization,
        times: times.to_vec(),
        a: Vec::new(),
        b: Vec::new(),
        g_u: Vec::new(),
        g_p: Vec::new(),
        provenance: Vec::new(),
        extrapolated,
        warnings,
        u: Vec::new(),
        p: Vec::new(),
        newton_iterations: newton,
        seconds: 0.0,
    };
    for &m in &marks {
        let (u, p) = model
            .lifting
            .reconstruct(&all_a[m], &modes, &all_b[m], &model.psi, g_u[m], &g_p[m])?;
        if !u.is_finite() || !p.is_finite() {
            return Err(Error::Numerical(format!("reconstruction at t = {} is not finite", grid[m])));
        }
        run.a.push(all_a[m].clone());
        run.b.push(all_b[m].clone());
        run.g_u.push(g_u[m]);
        run.g_p.push(g_p[m].clone());
        run.provenance.push(source[m]);
        run.u.push(u);
        run.p.push(p);
    }
    run.seconds = start.elapsed().as_secs_f64();
    Ok(run)
}

/// Errors against the full-order database at the requested times that it
/// contains. `None` when no requested time has a snapshot.
pub fn evaluate_errors(model: &OfflineModel, run: &OnlineRun, db: &SnapshotDatabase<f64>) -> Result<Option<ErrorSeries<f64>>> {
    let mut fom_times = Vec::new();
    let (mut fu, mut fp, mut ru, mut rp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, &t) in run.times.iter().enumerate() {
        if let Some(r) = db.records.iter().find(|r| close(r.t, t)) {
            fom_times.push(r.t);
            fu.push(r.u.clone());
            fp.push(r.p.clone());
            ru.push(run.u[k].clone());
            rp.push(run.p[k].clone());
        }
    }
    if fom_times.is_empty() {
        return Ok(None);
    }
    let mut u_space = vec![model.lifting.chi_u.clone()];
    u_space.extend(model.phi.iter().cloned());
    if run.stabilization == Stabilization::Supremizer {
        u_space.extend(model.sup.iter().cloned());
    }
    let mut p_space = model.lifting.chi_p.clone();
    p_space.extend(model.psi.iter().cloned());
    let input = ErrorInput {
        fom_times: &fom_times,
        fom_u: &fu,
        fom_p: &fp,
        rom_times: &fom_times,
        rom_u: &ru,
        rom_p: &rp,
        u_space: &u_space,
        p_space: &p_space,
    };
    rom_errors(&model.mesh, &input).map(Some)
}
