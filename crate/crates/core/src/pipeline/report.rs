//! Report files: `errors.csv`, `provenance.csv`, `spectrum.csv`,
//! `timings.txt`, plus a plain-text summary.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::textio::{fmt_real, parse_real, read_text, write_text};
use crate::rom::ErrorSeries;

use super::config::stab_name;
use super::offline::OfflineModel;
use super::online::OnlineRun;

pub const ERRORS_HEADER: [&str; 7] = ["t", "eps_u", "eps_p", "abs_u", "abs_p", "proj_u", "proj_p"];

/// Wall-clock seconds of the three phases. Missing phases are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub fom: Option<f64>,
    pub offline: Option<f64>,
    pub online: f64,
    pub n_times: usize,
}

impl Timings {
    pub fn online_per_time(&self) -> f64 {
        self.online / self.n_times.max(1) as f64
    }

    /// FOM time over online time.
    pub fn speedup(&self) -> Option<f64> {
        self.fom.filter(|_| self.online > 0.0).map(|f| f / self.online)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_else(|| "unknown".into());
        format!(
            "fom_seconds = {}\noffline_seconds = {}\nonline_seconds = {}\nonline_seconds_per_time = {}\nevaluation_times = {}\nspeedup = {}\n",
            opt(self.fom),
            opt(self.offline),
            fmt_real(self.online),
            fmt_real(self.online_per_time()),
            self.n_times,
            opt(self.speedup()),
        )
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format("csv", path, e.to_string())
}

pub fn errors_csv_string(s: &ErrorSeries<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ERRORS_HEADER).expect("in-memory write");
    for k in 0..s.len() {
        let row = [s.times[k], s.eps_u[k], s.eps_p[k], s.abs_u[k], s.abs_p[k], s.proj_u[k], s.proj_p[k]];
        w.write_record(row.iter().map(|&x| fmt_real(x))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn errors_from_csv(text: &str, path: &Path) -> Result<ErrorSeries<f64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(ERRORS_HEADER.iter().copied()) {
        return Err(Error::format("errors.csv", path, format!("unexpected header {:?}", header)));
    }
    let mut s = ErrorSeries::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let v = rec
            .iter()
            .map(|x| parse_real::<f64>(x).ok_or_else(|| Error::format("errors.csv", path, format!("bad number {x:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != ERRORS_HEADER.len() {
            return Err(Error::format("errors.csv", path, "row width"));
        }
        s.times.push(v[0]);
        s.eps_u.push(v[1]);
        s.eps_p.push(v[2]);
        s.abs_u.push(v[3]);
        s.abs_p.push(v[4]);
        s.proj_u.push(v[5]);
        s.proj_p.push(v[6]);
    }
    Ok(s)
}

pub fn read_errors_csv(path: &Path) -> Result<ErrorSeries<f64>> {
    errors_from_csv(&read_text(path)?, path)
}

pub fn provenance_csv_string(run: &OnlineRun) -> String {
    let n_out = run.g_p.first().map_or(0, |g| g.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["t".to_string(), "g_u".into()];
    head.extend((0..n_out).map(|j| format!("g_p_{j}")));
    head.extend(["g_p_source".into(), "extrapolated".into()]);
    w.write_record(&head).expect("in-memory write");
    for k in 0..run.times.len() {
        let mut row = vec![fmt_real(run.times[k]), fmt_real(run.g_u[k])];
        row.extend(run.g_p[k].iter().map(|&g| fmt_real(g)));
        row.push(run.provenance[k].name().into());
        row.push(run.extrapolated[k].to_string());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn spectrum_csv_string(lambda_u: &[f64], lambda_p: &[f64]) -> String {
    let cum = |l: &[f64]| {
        let total: f64 = l.iter().sum();
        let mut acc = 0.0;
        l.iter()
            .map(|x| {
                acc += x;
                if total > 0.0 { acc / total } else { 0.0 }
            })
            .collect::<Vec<_>>()
    };
    let (cu, cp) = (cum(lambda_u), cum(lambda_p));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "lambda_u", "cumulative_u", "lambda_p", "cumulative_p"]).expect("in-memory write");
    let cell = |v: &[f64], k: usize| v.get(k).map(|&x| fmt_real(x)).unwrap_or_default();
    for k in 0..lambda_u.len().max(lambda_p.len()) {
        w.write_record([(k + 1).to_string(), cell(lambda_u, k), cell(&cu, k), cell(lambda_p, k), cell(&cp, k)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn summary(model: &OfflineModel, run: &OnlineRun, errors: Option<&ErrorSeries<f64>>, t: &Timings) -> String {
    let mut s = format!(
        "stabilization {}: N_phi = {}, N_sup = {}, N_psi = {}, {} evaluation times, {} Newton iterations\n",
        stab_name(run.stabilization),
        model.phi.len(),
        if run.stabilization == crate::rom::Stabilization::Supremizer { model.sup.len() } else { 0 },
        model.psi.len(),
        run.times.len(),
        run.newton_iterations,
    );
    match errors {
        Some(e) if !e.is_empty() => {
            let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            s.push_str(&format!(
                "mean relative error: velocity {:.4e}, pressure {:.4e} (max {:.4e}, {:.4e}) over {} snapshot times\n",
                e.mean_eps_u(),
                e.mean_eps_p(),
                max(&e.eps_u),
                max(&e.eps_p),
                e.len()
            ));
            s.push_str(&format!("mean absolute error: velocity {:.4e}, pressure {:.4e}\n", e.mean_abs_u(), e.mean_abs_p()));
            let bad = e.projection_violations(0.0);
            if bad.is_empty() {
                s.push_str("reconstruction error >= projection error at every reported time\n");
            } else {
                s.push_str(&format!("reconstruction error below projection error at {} times\n", bad.len()));
            }
        }
        _ => s.push_str("no full-order data at the requested times; errors not computed\n"),
    }
    let extrap = run.extrapolated.iter().filter(|e| **e).count();
    if extrap > 0 {
        s.push_str(&format!("{extrap} times lie outside the training window\n"));
    }
    s.push_str(&format!("online time {:.3e} s ({:.3e} s per time)", t.online, t.online_per_time()));
    match (t.fom, t.speedup()) {
        (Some(f), Some(r)) => s.push_str(&format!(", FOM time {f:.3e} s, speedup FOM/online = {r:.3e}\n")),
        _ => s.push_str(", FOM time unknown\n"),
    }
    s
}

/// Writes every report file into `dir` and returns the summary text.
pub fn write_report(
    dir: &Path,
    model: &OfflineModel,
    run: &OnlineRun,
    errors: Option<&ErrorSeries<f64>>,
    timings: &Timings,
) -> Result<String> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let empty = ErrorSeries::default();
    write_text(&dir.join("errors.csv"), &errors_csv_string(errors.unwrap_or(&empty)))?;
    write_text(&dir.join("provenance.csv"), &provenance_csv_string(run))?;
    write_text(&dir.join("spectrum.csv"), &spectrum_csv_string(&model.lambda_u, &model.lambda_p))?;
    write_text(&dir.join("timings.txt"), &timings.to_text())?;
    let text = summary(model, run, errors, timings);
    write_text(&dir.join("summary.txt"), &text)?;
    Ok(text)
}

/// `key = seconds` file written next to a phase's outputs.
pub fn write_seconds(path: &Path, key: &str, seconds: f64) -> Result<()> {
    write_text(path, &format!("{key} = {}\n", fmt_real(seconds)))
}

pub fn read_seconds(path: &Path) -> Option<f64> {
    let text = fs::read_to_string(path).ok()?;
    text.lines().find_map(|l| l.split_once('=').and_then(|(_, v)| parse_real(v.trim())))
}
