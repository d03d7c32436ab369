use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use hemorom::fom::{read_manifest_traces, run_fom, SnapshotDatabase};
use hemorom::mesh_fields::io::write_field;
use hemorom::nn::{train_outflow, write_model};
use hemorom::pipeline::report::{read_seconds, write_seconds};
use hemorom::pipeline::wkcheck::run_wk_check;
use hemorom::pipeline::{
    evaluate_errors, parse_times, read_bundle, run_offline, run_online, write_report, OfflineModel, OnlineRun,
    PipelineConfig, Timings,
};
use hemorom::rom::Stabilization;
use hemorom::{Error, Result};

#[derive(Parser)]
#[command(name = "hemorom", version, about = "POD-Galerkin reduced-order model for channel flow with Windkessel outflow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stab {
    Sup,
    Ppe,
}

impl From<Stab> for Stabilization {
    fn from(s: Stab) -> Self {
        match s {
            Stab::Sup => Stabilization::Supremizer,
            Stab::Ppe => Stabilization::PressurePoisson,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full-order solver and write the snapshot database.
    Fom {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `paths.database`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Liftings, POD, supremizers, reduced tensors and outflow network.
    Offline {
        #[arg(long)]
        config: PathBuf,
        /// Run the full-order solver first.
        #[arg(long)]
        with_fom: bool,
    },
    /// Evaluate the reduced model at the given times.
    Online {
        #[arg(long)]
        bundle: PathBuf,
        /// `training`, `midpoints`, a comma separated list, or a file of times.
        #[arg(long)]
        times: String,
        /// Defaults to the stabilization stored in the bundle.
        #[arg(long, value_enum)]
        stab: Option<Stab>,
        /// Output directory for fields and report files.
        #[arg(long, default_value = "online")]
        out: PathBuf,
        /// Snapshot database for error reporting.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Run the online phase at snapshot times and write the error report.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value = "training")]
        times: String,
        #[arg(long, value_enum)]
        stab: Option<Stab>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Train the outflow network on the pressure traces of a snapshot manifest.
    TrainNn {
        /// `manifest.txt` of a snapshot database (or its directory).
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Network settings (`nn.*`); defaults to the desk preset.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Time-step convergence study of the Windkessel discretization.
    WkCheck {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn timing_path(bundle: &Path) -> PathBuf {
    let mut name = bundle.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".timing.txt");
    bundle.with_file_name(name)
}

fn fom(cfg: &PipelineConfig, out: &Path) -> Result<SnapshotDatabase<f64>> {
    let start = Instant::now();
    let db = run_fom(&cfg.fom)?;
    let secs = start.elapsed().as_secs_f64();
    db.write(out)?;
    write_seconds(&out.join("timing.txt"), "fom_seconds", secs)?;
    println!("full-order run: {} snapshots in {secs:.3} s, written to {}", db.len(), out.display());
    Ok(db)
}

fn online_common(
    bundle: &Path,
    times: &str,
    stab: Option<Stab>,
) -> Result<(OfflineModel, OnlineRun)> {
    let model = read_bundle(bundle)?;
    let times = parse_times(times, &model)?;
    let stab = stab.map(Stabilization::from).unwrap_or(model.config.stabilization);
    let run = run_online(&model, &times, stab)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok((model, run))
}

fn report(model: &OfflineModel, run: &OnlineRun, bundle: &Path, db_dir: Option<&Path>, out: &Path) -> Result<()> {
    let (errors, fom_secs) = match db_dir {
        Some(d) => {
            let db = SnapshotDatabase::read(d)?;
            (evaluate_errors(model, run, &db)?, read_seconds(&d.join("timing.txt")))
        }
        None => (None, None),
    };
    let timings = Timings {
        fom: fom_secs,
        offline: read_seconds(&timing_path(bundle)),
        online: run.seconds,
        n_times: run.times.len(),
    };
    let text = write_report(out, model, run, errors.as_ref(), &timings)?;
    print!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fom { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let out = out.unwrap_or_else(|| cfg.database.clone());
            fom(&cfg, &out)?;
        }
        Command::Offline { config, with_fom } => {
            let cfg = PipelineConfig::load(&config)?;
            let db = if with_fom {
                fom(&cfg, &cfg.database)?
            } else {
                SnapshotDatabase::read(&cfg.database)?
            };
            let start = Instant::now();
            let model = run_offline(&cfg, &db)?;
            let secs = start.elapsed().as_secs_f64();
            write_seconds(&timing_path(&cfg.bundle), "offline_seconds", secs)?;
            println!(
                "offline phase: N_phi = {}, N_psi = {}, N_sup = {} in {secs:.3} s, bundle {}",
                model.phi.len(),
                model.psi.len(),
                model.sup.len(),
                cfg.bundle.display()
            );
        }
        Command::Online { bundle, times, stab, out, db } => {
            let (model, run) = online_common(&bundle, &times, stab)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let (nx, ny) = (model.mesh.nx(), model.mesh.ny());
            for k in 0..run.times.len() {
                write_field(&out.join(format!("u_{k:04}.fld")), nx, ny, &run.u[k])?;
                write_field(&out.join(format!("p_{k:04}.fld")), nx, ny, &run.p[k])?;
            }
            report(&model, &run, &bundle, db.as_deref(), &out)?;
        }
        Command::Report { bundle, db, times, stab, out } => {
            let (model, run) = online_common(&bundle, &times, stab)?;
            report(&model, &run, &bundle, Some(&db), &out)?;
        }
        Command::TrainNn { manifest, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let path = if manifest.is_dir() { manifest.join("manifest.txt") } else { manifest };
            let (times, _, g_p) = read_manifest_traces::<f64>(&path)?;
            let start = Instant::now();
            let (model, reports) = train_outflow(&times, &g_p, &cfg.nn)?;
            write_model(&out, &model)?;
            for (j, r) in reports.iter().enumerate() {
                println!(
                    "network {j}: final train MSE {:.4e}, final test MSE {:.4e} ({} train / {} test samples)",
                    r.final_train(),
                    r.final_test(),
                    r.train_indices.len(),
                    r.test_indices.len()
                );
            }
            println!("trained in {:.3} s, model written to {}", start.elapsed().as_secs_f64(), out.display());
        }
        Command::WkCheck { config } => {
            let cfg = load_config(config.as_deref())?;
            let check = run_wk_check(&cfg)?;
            print!("{}", check.to_text());
            println!("runtime {:.3e} s", check.seconds);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
