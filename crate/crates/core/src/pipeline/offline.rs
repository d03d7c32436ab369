//! Offline phase: liftings, POD, supremizers, reduced operators and the
//! outflow network, persisted as a bundle directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fom::{FomSolver, SnapshotDatabase};
use crate::lifting::LiftingSet;
use crate::linalg::textio::{
    matrix_from_str, matrix_to_string, read_text, tensor_from_str, tensor_to_string, write_text,
};
use crate::linalg::Matrix;
use crate::mesh_fields::io::{field_from_str, field_to_string};
use crate::mesh_fields::{inner_product, ScalarField, StructuredMesh, VectorField};
use crate::nn::{model_from_str, model_to_string, train_outflow, OutflowModel, TrainReport};
use crate::pod::{compute_basis, numerical_rank, select_rank, spectrum_string, SnapshotMatrix};
use crate::rom::{assemble_operators, compute_supremizers, enrich, ExtendedBasis, ReducedOperators};
use crate::spaces::pressure0;

use super::config::PipelineConfig;

const LIN_TOL: f64 = 1e-12;

/// Boundary data sampled at the snapshot times.
#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub times: Vec<f64>,
    pub g_u: Vec<f64>,
    pub g_p: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineModel {
    pub config: PipelineConfig,
    pub mesh: StructuredMesh<f64>,
    pub lifting: LiftingSet<f64>,
    pub phi: Vec<VectorField<f64>>,
    pub sup: Vec<VectorField<f64>>,
    pub psi: Vec<ScalarField<f64>>,
    pub lambda_u: Vec<f64>,
    pub lambda_p: Vec<f64>,
    pub ops: ReducedOperators<f64>,
    pub nn: OutflowModel<f64>,
    /// Empty when the model was loaded from disk.
    pub nn_reports: Vec<TrainReport<f64>>,
    pub traces: Traces,
    pub a0: Vec<f64>,
    pub b0: Vec<f64>,
    /// Largest modal coefficient of the training snapshots.
    pub coef_scale: f64,
}

impl OfflineModel {
    /// Velocity modes in coefficient order: POD modes, then supremizers.
    pub fn velocity_modes(&self) -> Vec<VectorField<f64>> {
        self.phi.iter().chain(&self.sup).cloned().collect()
    }
}

fn in_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{stage}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{stage}: {m}")),
        Error::NoConvergence { solver, iterations, residual } => Error::Numerical(format!(
            "{stage}: {solver} did not converge after {iterations} iterations (relative residual {residual:.3e})"
        )),
        Error::Dimension { context, expected, found } => {
            Error::Numerical(format!("{stage}: dimension mismatch in {context}: expected {expected}, got {found}"))
        }
        other => other,
    }
}

/// Runs every offline stage in memory.
pub fn build_offline(cfg: &PipelineConfig, db: &SnapshotDatabase<f64>) -> Result<OfflineModel> {
    cfg.validate()?;
    let f = &cfg.fom;
    if db.nx != f.nx || db.ny != f.ny || db.n_outlets != f.n_outlets {
        return Err(Error::Config(format!(
            "database mesh {}x{} with {} outlets does not match the configured {}x{} with {}",
            db.nx, db.ny, db.n_outlets, f.nx, f.ny, f.n_outlets
        )));
    }
    if db.len() < 2 {
        return Err(Error::Config("the offline phase needs at least two snapshots".into()));
    }
    let mesh = f.mesh()?;

    let lifting = LiftingSet::compute(&mesh, cfg.outlet_neumann_value, LIN_TOL).map_err(|e| in_stage("lifting", e))?;
    let hom = lifting.homogenize(&mesh, db).map_err(|e| in_stage("homogenize", e))?;

    let (phi, lambda_u, psi, lambda_p) = (|| {
        let su = SnapshotMatrix::new(&mesh, hom.u.iter().map(|u| u.cells.clone()).collect())?;
        let sp = SnapshotMatrix::new(&mesh, hom.p.iter().map(|p| p.cells.clone()).collect())?;
        let lu = crate::pod::correlation_matrix(&su)?.symmetric_eigen()?.0;
        let lp = crate::pod::correlation_matrix(&sp)?.symmetric_eigen()?.0;
        let clip = |v: Vec<f64>| v.into_iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
        let (lu, lp) = (clip(lu), clip(lp));
        let (nu, np) = match cfg.n_modes {
            Some(n) => (n, n),
            // the energy criterion cannot ask for directions below the rank tolerance
            None => (
                select_rank(&lu, cfg.pod_delta)?.min(numerical_rank(&lu)),
                select_rank(&lp, cfg.pod_delta)?.min(numerical_rank(&lp)),
            ),
        };
        let bu = compute_basis(&su, nu)?;
        let bp = compute_basis(&sp, np)?;
        Ok::<_, Error>((bu.modes, lu, bp.modes, lp))
    })()
    .map_err(|e| in_stage("pod", e))?;

    let sup = (|| {
        let raw = match cfg.supremizer {
            crate::rom::SupremizerVariant::Exact => {
                let src: Vec<_> = psi.iter().map(|q| pressure0(&mesh, q.clone())).collect();
                compute_supremizers(&mesh, &src, cfg.supremizer, psi.len(), LIN_TOL)?
            }
            crate::rom::SupremizerVariant::Approximate => {
                let src: Vec<_> = hom.p.clone();
                compute_supremizers(&mesh, &src, cfg.supremizer, psi.len(), LIN_TOL)?
            }
        };
        enrich(&mesh, &phi, &raw)
    })()
    .map_err(|e| in_stage("supremizers", e))?;

    let chi_p: Vec<_> = (0..mesh.n_outlets()).map(|j| lifting.chi_p_field(&mesh, j)).collect();
    let basis = ExtendedBasis::new(&mesh, lifting.chi_u_field(&mesh), &phi, &sup, chi_p, &psi)
        .map_err(|e| in_stage("tensors", e))?;
    let ops = assemble_operators(&mesh, &basis).map_err(|e| in_stage("tensors", e))?;

    let (nn, nn_reports) = train_outflow(&hom.times, &hom.g_p, &cfg.nn).map_err(|e| in_stage("network", e))?;

    let vel: Vec<VectorField<f64>> = phi.iter().chain(&sup).cloned().collect();
    let coeffs = |u: &VectorField<f64>| vel.iter().map(|m| inner_product(&mesh, u, m)).collect::<Result<Vec<_>>>();
    let pcoeffs = |p: &ScalarField<f64>| psi.iter().map(|m| inner_product(&mesh, p, m)).collect::<Result<Vec<_>>>();
    let (a0, b0, coef_scale) = (|| {
        let solver = FomSolver::new(cfg.fom.clone())?;
        let mut init_db = SnapshotDatabase::new(&cfg.fom);
        init_db.push(&solver.initial_state());
        let h0 = lifting.homogenize(&mesh, &init_db)?;
        let a0 = coeffs(&h0.u[0].cells)?;
        let b0 = pcoeffs(&h0.p[0].cells)?;
        let mut scale = a0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for u in &hom.u {
            scale = coeffs(&u.cells)?.iter().fold(scale, |m, x| m.max(x.abs()));
        }
        Ok::<_, Error>((a0, b0, scale))
    })()
    .map_err(|e| in_stage("initial state", e))?;

    Ok(OfflineModel {
        config: cfg.clone(),
        mesh,
        lifting,
        phi,
        sup,
        psi,
        lambda_u,
        lambda_p,
        ops,
        nn,
        nn_reports,
        traces: Traces { times: hom.times, g_u: hom.g_u, g_p: hom.g_p },
        a0,
        b0,
        coef_scale,
    })
}

/// Exclusive write access to a bundle directory through a sibling lock file.
struct BundleLock {
    path: PathBuf,
}

impl BundleLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let mut name = dir.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".lock");
        let path = dir.with_file_name(name);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::InvalidBundle {
                        path: dir.to_path_buf(),
                        detail: format!("locked by another writer ({} exists)", path.display()),
                    }
                } else {
                    Error::io(&path, e)
                }
            })?;
        Ok(Self { path })
    }
}

impl Drop for BundleLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub const INVALID_MARKER: &str = "INVALID";
pub const MANIFEST: &str = "manifest.toml";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn row(v: &[f64]) -> Matrix<f64> {
    Matrix::from_vec(1, v.len(), v.to_vec())
}

/// Artifact name and contents, in a fixed order.
fn artifacts(m: &OfflineModel) -> Vec<(String, String)> {
    let (nx, ny) = (m.mesh.nx(), m.mesh.ny());
    let mut out = vec![("chi_u.fld".to_string(), field_to_string(nx, ny, &m.lifting.chi_u))];
    for (j, c) in m.lifting.chi_p.iter().enumerate() {
        out.push((format!("chi_p_{j}.fld"), field_to_string(nx, ny, c)));
    }
    out.push(("spectrum_u.txt".into(), spectrum_string(&m.lambda_u)));
    out.push(("spectrum_p.txt".into(), spectrum_string(&m.lambda_p)));
    for (k, f) in m.phi.iter().enumerate() {
        out.push((format!("phi_{k:03}.fld"), field_to_string(nx, ny, f)));
    }
    for (k, f) in m.sup.iter().enumerate() {
        out.push((format!("sup_{k:03}.fld"), field_to_string(nx, ny, f)));
    }
    for (k, f) in m.psi.iter().enumerate() {
        out.push((format!("psi_{k:03}.fld"), field_to_string(nx, ny, f)));
    }
    let o = &m.ops;
    out.push(("mass.mat".into(), matrix_to_string(&o.mass)));
    out.push(("b.mat".into(), matrix_to_string(&o.b)));
    out.push(("c.ten".into(), tensor_to_string(&o.c)));
    out.push(("k.mat".into(), matrix_to_string(&o.k)));
    out.push(("p.mat".into(), matrix_to_string(&o.p)));
    out.push(("d.mat".into(), matrix_to_string(&o.d)));
    out.push(("nbnd.mat".into(), matrix_to_string(&o.nbnd)));
    out.push(("g.ten".into(), tensor_to_string(&o.g)));
    out.push(("e.mat".into(), matrix_to_string(&o.e)));
    out.push(("h.mat".into(), matrix_to_string(&row(&o.h))));
    out.push(("outflow.nn".into(), model_to_string(&m.nn)));
    let t = &m.traces;
    let no = m.mesh.n_outlets();
    let traces = Matrix::from_fn(t.times.len(), 2 + no, |i, j| match j {
        0 => t.times[i],
        1 => t.g_u[i],
        _ => t.g_p[i][j - 2],
    });
    out.push(("traces.mat".into(), matrix_to_string(&traces)));
    out.push(("a0.mat".into(), matrix_to_string(&row(&m.a0))));
    out.push(("b0.mat".into(), matrix_to_string(&row(&m.b0))));
    out
}

fn manifest_string(m: &OfflineModel, files: &[(String, String)]) -> String {
    let mut s = String::from("# ROMBUNDLE v1\nstatus = \"complete\"\n\n[config]\n");
    for (k, v) in m.config.entries() {
        s.push_str(&format!("\"{k}\" = \"{v}\"\n"));
    }
    s.push_str("\n[rom]\n");
    s.push_str(&format!("n_phi = {}\n", m.phi.len()));
    s.push_str(&format!("n_sup = {}\n", m.sup.len()));
    s.push_str(&format!("n_psi = {}\n", m.psi.len()));
    s.push_str(&format!("n_outlets = {}\n", m.mesh.n_outlets()));
    s.push_str(&format!("n_snapshots = {}\n", m.traces.times.len()));
    s.push_str(&format!("coef_scale = \"{:.16e}\"\n", m.coef_scale));
    s.push_str(&format!("nn_networks = {}\n", m.nn.networks.len()));
    s.push_str("\n[artifacts]\n");
    for (name, body) in files {
        s.push_str(&format!("\"{name}\" = \"{}\"\n", sha256_hex(body.as_bytes())));
    }
    s
}

/// Writes the bundle under a lock. A failure leaves an `INVALID` marker.
pub fn write_bundle(dir: &Path, model: &OfflineModel) -> Result<()> {
    let _lock = BundleLock::acquire(dir)?;
    write_bundle_locked(dir, || Ok(model.clone())).map(|_| ())
}

/// Computes the model and writes it while holding the bundle lock, so a
/// stage failure also marks the directory invalid.
pub fn run_offline(cfg: &PipelineConfig, db: &SnapshotDatabase<f64>) -> Result<OfflineModel> {
    let _lock = BundleLock::acquire(&cfg.bundle)?;
    write_bundle_locked(&cfg.bundle, || build_offline(cfg, db))
}

fn write_bundle_locked(dir: &Path, build: impl FnOnce() -> Result<OfflineModel>) -> Result<OfflineModel> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join(INVALID_MARKER);
    write_text(&marker, "offline phase in progress\n")?;
    let result = (|| {
        let model = build()?;
        let files = artifacts(&model);
        for (name, body) in &files {
            write_text(&dir.join(name), body)?;
        }
        write_text(&dir.join(MANIFEST), &manifest_string(&model, &files))?;
        Ok(model)
    })();
    match result {
        Ok(m) => {
            fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(m)
        }
        Err(e) => {
            let _ = write_text(&marker, &format!("offline phase failed: {e}\n"));
            Err(e)
        }
    }
}

fn invalid(dir: &Path, detail: impl Into<String>) -> Error {
    Error::InvalidBundle { path: dir.to_path_buf(), detail: detail.into() }
}

/// Parsed manifest: status, config entries, counts and checksums.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub status: String,
    pub config: BTreeMap<String, String>,
    pub rom: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = read_text(&path)?;
    let table: toml::Table = text.parse().map_err(|e| invalid(dir, format!("manifest is not valid TOML: {e}")))?;
    let section = |name: &str| -> Result<BTreeMap<String, String>> {
        let t = table
            .get(name)
            .and_then(|v| v.as_table())
            .ok_or_else(|| invalid(dir, format!("manifest lacks [{name}]")))?;
        Ok(t.iter()
            .map(|(k, v)| (k.clone(), v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())))
            .collect())
    };
    Ok(Manifest {
        status: table.get("status").and_then(|v| v.as_str()).unwrap_or("").to_string(),
        config: section("config")?,
        rom: section("rom")?,
        artifacts: section("artifacts")?,
    })
}

/// Loads and verifies a bundle.
pub fn read_bundle(dir: &Path) -> Result<OfflineModel> {
    if dir.join(INVALID_MARKER).exists() {
        let why = fs::read_to_string(dir.join(INVALID_MARKER)).unwrap_or_default();
        return Err(invalid(dir, format!("marked invalid: {}", why.trim())));
    }
    let man = read_manifest(dir)?;
    if man.status != "complete" {
        return Err(invalid(dir, format!("status is {:?}", man.status)));
    }
    let mut bodies = BTreeMap::new();
    for (name, sum) in &man.artifacts {
        let text = read_text(&dir.join(name))?;
        if &sha256_hex(text.as_bytes()) != sum {
            return Err(invalid(dir, format!("checksum mismatch for {name}")));
        }
        bodies.insert(name.clone(), text);
    }
    let body = |name: &str| -> Result<&String> {
        bodies.get(name).ok_or_else(|| invalid(dir, format!("missing artifact {name}")))
    };
    // rebuild the configuration through the regular parser
    let mut toml_text = String::new();
    for (k, v) in &man.config {
        if v == "auto" {
            continue;
        }
        let is_literal = v.parse::<f64>().is_ok() || v == "true" || v == "false";
        if is_literal {
            toml_text.push_str(&format!("{k} = {v}\n"));
        } else {
            toml_text.push_str(&format!("{k} = \"{v}\"\n"));
        }
    }
    let config = PipelineConfig::from_toml_str(&toml_text, dir.parent().unwrap_or(Path::new(".")))
        .map_err(|e| invalid(dir, format!("manifest configuration: {e}")))?;
    let count = |k: &str| -> Result<usize> {
        man.rom
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| invalid(dir, format!("manifest lacks rom.{k}")))
    };
    let (n_phi, n_sup, n_psi, n_out) = (count("n_phi")?, count("n_sup")?, count("n_psi")?, count("n_outlets")?);
    let coef_scale: f64 = man
        .rom
        .get("coef_scale")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| invalid(dir, "manifest lacks rom.coef_scale"))?;
    let mesh = config.fom.mesh()?;
    let p = |name: &str| dir.join(name);
    let vfield = |name: &str| -> Result<VectorField<f64>> { Ok(field_from_str(body(name)?, &p(name))?.2) };
    let sfield = |name: &str| -> Result<ScalarField<f64>> { Ok(field_from_str(body(name)?, &p(name))?.2) };
    let lifting = LiftingSet {
        chi_u: vfield("chi_u.fld")?,
        chi_p: (0..n_out).map(|j| sfield(&format!("chi_p_{j}.fld"))).collect::<Result<_>>()?,
    };
    let phi = (0..n_phi).map(|k| vfield(&format!("phi_{k:03}.fld"))).collect::<Result<Vec<_>>>()?;
    let sup = (0..n_sup).map(|k| vfield(&format!("sup_{k:03}.fld"))).collect::<Result<Vec<_>>>()?;
    let psi = (0..n_psi).map(|k| sfield(&format!("psi_{k:03}.fld"))).collect::<Result<Vec<_>>>()?;
    let mat = |name: &str| matrix_from_str::<f64>(body(name)?, &p(name));
    let ten = |name: &str| tensor_from_str::<f64>(body(name)?, &p(name));
    let spectrum = |name: &str| -> Result<Vec<f64>> {
        body(name)?
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .nth(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::format("spectrum", p(name), format!("bad line {l:?}")))
            })
            .collect()
    };
    let ops = ReducedOperators {
        n_phi,
        n_sup,
        n_outlets: n_out,
        n_p: n_psi,
        mass: mat("mass.mat")?,
        b: mat("b.mat")?,
        c: ten("c.ten")?,
        k: mat("k.mat")?,
        p: mat("p.mat")?,
        d: mat("d.mat")?,
        nbnd: mat("nbnd.mat")?,
        g: ten("g.ten")?,
        e: mat("e.mat")?,
        h: mat("h.mat")?.as_slice().to_vec(),
    };
    let u = 1 + n_phi + n_sup;
    let pp = n_out + n_psi;
    if ops.mass.rows() != u || ops.c.dims() != [u, u, u] || ops.k.cols() != pp || ops.g.dims() != [pp, u, u] {
        return Err(invalid(dir, "tensor sizes disagree with the manifest counts"));
    }
    let tr = mat("traces.mat")?;
    if tr.cols() != 2 + n_out {
        return Err(invalid(dir, "trace table width disagrees with the outlet count"));
    }
    let traces = Traces {
        times: tr.column(0),
        g_u: tr.column(1),
        g_p: (0..tr.rows()).map(|i| tr.row(i)[2..].to_vec()).collect(),
    };
    let nn = model_from_str(body("outflow.nn")?, &p("outflow.nn"))?;
    Ok(OfflineModel {
        config,
        mesh,
        lifting,
        phi,
        sup,
        psi,
        lambda_u: spectrum("spectrum_u.txt")?,
        lambda_p: spectrum("spectrum_p.txt")?,
        ops,
        nn,
        nn_reports: Vec::new(),
        traces,
        a0: mat("a0.mat")?.as_slice().to_vec(),
        b0: mat("b0.mat")?.as_slice().to_vec(),
        coef_scale,
    })
}
