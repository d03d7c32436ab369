//! Pipeline configuration: a TOML document whose tables are flattened into
//! dotted keys (`mesh.nx`, `wk.rp`, `wk.1.rp`, ...). Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fom::{FomConfig, TimeGrid};
use crate::linalg::textio::read_text;
use crate::nn::{Activation, NetworkConfig};
use crate::rom::{ConvectionTreatment, Stabilization, SupremizerVariant};
use crate::windkessel::WindkesselParams;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub fom: FomConfig<f64>,
    /// `wk-check` compares against the decaying-exponential analytic variant.
    pub analytic_decaying_exponential: bool,
    /// Outlet normal derivative of the velocity lifting.
    pub outlet_neumann_value: f64,
    pub pod_delta: f64,
    /// Overrides the energy criterion for both velocity and pressure.
    pub n_modes: Option<usize>,
    pub stabilization: Stabilization,
    pub supremizer: SupremizerVariant,
    /// Reduced steps per interval between requested times.
    pub substeps: usize,
    pub convection: ConvectionTreatment,
    pub nn_preset: String,
    pub nn: NetworkConfig,
    pub database: PathBuf,
    pub bundle: PathBuf,
    pub report: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fom: FomConfig::case1(),
            analytic_decaying_exponential: false,
            outlet_neumann_value: 1.0,
            pod_delta: 0.9999,
            n_modes: None,
            stabilization: Stabilization::Supremizer,
            supremizer: SupremizerVariant::Exact,
            substeps: 20,
            convection: ConvectionTreatment::Implicit,
            nn_preset: "desk".into(),
            nn: NetworkConfig::default(),
            database: PathBuf::from("fom_db"),
            bundle: PathBuf::from("rom.bundle"),
            report: PathBuf::from("report"),
        }
    }
}

#[derive(Clone, Debug)]
enum Scalar {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Scalar>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let s = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::Integer(i) => Scalar::Int(*i),
            toml::Value::Float(f) => Scalar::Float(*f),
            toml::Value::Boolean(b) => Scalar::Bool(*b),
            toml::Value::String(s) => Scalar::Str(s.clone()),
            other => {
                return Err(Error::Config(format!("key {key}: unsupported value {other}")));
            }
        };
        out.insert(key, s);
    }
    Ok(())
}

struct Keys {
    map: BTreeMap<String, Scalar>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<Scalar> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, slot: &mut f64) -> Result<()> {
        match self.take(key) {
            None => Ok(()),
            Some(Scalar::Float(f)) => {
                *slot = f;
                Ok(())
            }
            Some(Scalar::Int(i)) => {
                *slot = i as f64;
                Ok(())
            }
            Some(other) => Err(Error::Config(format!("key {key}: expected a number, got {other:?}"))),
        }
    }

    fn usize(&mut self, key: &str, slot: &mut usize) -> Result<()> {
        match self.take(key) {
            None => Ok(()),
            Some(Scalar::Int(i)) if i >= 0 => {
                *slot = i as usize;
                Ok(())
            }
            Some(other) => Err(Error::Config(format!("key {key}: expected a non-negative integer, got {other:?}"))),
        }
    }

    fn bool(&mut self, key: &str, slot: &mut bool) -> Result<()> {
        match self.take(key) {
            None => Ok(()),
            Some(Scalar::Bool(b)) => {
                *slot = b;
                Ok(())
            }
            Some(other) => Err(Error::Config(format!("key {key}: expected true or false, got {other:?}"))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Scalar::Str(s)) => Ok(Some(s)),
            Some(other) => Err(Error::Config(format!("key {key}: expected a string, got {other:?}"))),
        }
    }
}

fn resolve(base: &Path, p: String) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Parses TOML text; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        let mut map = BTreeMap::new();
        flatten("", &table, &mut map)?;
        let mut k = Keys { map };
        let mut c = Self::default();
        c.database = base_dir.join(&c.database);
        c.bundle = base_dir.join(&c.bundle);
        c.report = base_dir.join(&c.report);

        let f = &mut c.fom;
        k.usize("mesh.nx", &mut f.nx)?;
        k.usize("mesh.ny", &mut f.ny)?;
        k.f64("mesh.length", &mut f.length)?;
        k.f64("mesh.radius", &mut f.radius)?;
        k.usize("mesh.n_outlets", &mut f.n_outlets)?;
        k.f64("fluid.nu", &mut f.nu)?;
        let mut tg: TimeGrid<f64> = f.time;
        k.f64("time.t0", &mut tg.t0)?;
        k.f64("time.T", &mut tg.t_end)?;
        k.f64("time.dt", &mut tg.dt)?;
        k.usize("time.stride", &mut tg.stride)?;
        f.time = tg;
        k.usize("fom.n_piso", &mut f.n_piso)?;
        k.f64("fom.lin_tol", &mut f.lin_tol)?;
        k.usize("fom.max_iter", &mut f.max_iter)?;
        k.f64("inlet.u0", &mut f.u0)?;
        let mut base: WindkesselParams<f64> = f.windkessel[0];
        k.f64("wk.rp", &mut base.rp)?;
        k.f64("wk.rd", &mut base.rd)?;
        k.f64("wk.c", &mut base.c)?;
        k.f64("wk.pd", &mut base.pd)?;
        f.windkessel = vec![base; f.n_outlets.max(1)];
        for j in 1..f.n_outlets {
            let w = &mut f.windkessel[j];
            k.f64(&format!("wk.{j}.rp"), &mut w.rp)?;
            k.f64(&format!("wk.{j}.rd"), &mut w.rd)?;
            k.f64(&format!("wk.{j}.c"), &mut w.c)?;
            k.f64(&format!("wk.{j}.pd"), &mut w.pd)?;
        }
        k.bool("wk.analytic_decaying_exponential", &mut c.analytic_decaying_exponential)?;
        k.f64("lifting.outlet_neumann_value", &mut c.outlet_neumann_value)?;
        k.f64("pod.delta", &mut c.pod_delta)?;
        if let Some(Scalar::Int(n)) = k.map.get("rom.n_modes").cloned() {
            if n < 1 {
                return Err(Error::Config("rom.n_modes must be at least 1".into()));
            }
            k.take("rom.n_modes");
            c.n_modes = Some(n as usize);
        }
        if let Some(s) = k.string("rom.stabilization")? {
            c.stabilization = match s.as_str() {
                "sup" | "supremizer" => Stabilization::Supremizer,
                "ppe" => Stabilization::PressurePoisson,
                _ => return Err(Error::Config(format!("rom.stabilization must be sup or ppe, got {s:?}"))),
            };
        }
        if let Some(s) = k.string("rom.supremizer")? {
            c.supremizer = match s.as_str() {
                "exact" => SupremizerVariant::Exact,
                "approximate" => SupremizerVariant::Approximate,
                _ => return Err(Error::Config(format!("rom.supremizer must be exact or approximate, got {s:?}"))),
            };
        }
        k.usize("rom.substeps", &mut c.substeps)?;
        if let Some(s) = k.string("rom.convection")? {
            c.convection = match s.as_str() {
                "implicit" => ConvectionTreatment::Implicit,
                "semi_implicit" => ConvectionTreatment::SemiImplicit,
                _ => return Err(Error::Config(format!("rom.convection must be implicit or semi_implicit, got {s:?}"))),
            };
        }
        if let Some(p) = k.string("nn.preset")? {
            c.nn = match p.as_str() {
                "desk" => NetworkConfig::default(),
                "paper" => NetworkConfig::paper(),
                _ => return Err(Error::Config(format!("nn.preset must be desk or paper, got {p:?}"))),
            };
            c.nn_preset = p;
        }
        k.usize("nn.hidden_layers", &mut c.nn.hidden_layers)?;
        k.usize("nn.neurons", &mut c.nn.neurons_per_layer)?;
        k.usize("nn.epochs", &mut c.nn.epochs)?;
        k.f64("nn.learning_rate", &mut c.nn.learning_rate)?;
        k.f64("nn.train_fraction", &mut c.nn.train_fraction)?;
        let mut seed = c.nn.seed as usize;
        k.usize("nn.seed", &mut seed)?;
        c.nn.seed = seed as u64;
        k.bool("nn.per_outlet", &mut c.nn.per_outlet)?;
        if let Some(a) = k.string("nn.activation")? {
            c.nn.activation = match a.as_str() {
                "softplus" => Activation::Softplus,
                "identity" => Activation::Identity,
                _ => return Err(Error::Config(format!("nn.activation must be softplus or identity, got {a:?}"))),
            };
        }
        if let Some(p) = k.string("paths.database")? {
            c.database = resolve(base_dir, p);
        }
        if let Some(p) = k.string("paths.bundle")? {
            c.bundle = resolve(base_dir, p);
        }
        if let Some(p) = k.string("paths.report")? {
            c.report = resolve(base_dir, p);
        }
        if let Some(key) = k.map.keys().next() {
            return Err(Error::Config(format!("unknown configuration key {key:?}")));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.fom.validate()?;
        if !(self.pod_delta > 0.0 && self.pod_delta <= 1.0) {
            return Err(Error::Config(format!("pod.delta must lie in (0, 1], got {}", self.pod_delta)));
        }
        if self.substeps == 0 {
            return Err(Error::Config("rom.substeps must be at least 1".into()));
        }
        if !self.outlet_neumann_value.is_finite() {
            return Err(Error::Config("lifting.outlet_neumann_value must be finite".into()));
        }
        self.nn.validate()
    }

    /// Every setting as `key = value`, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let f = &self.fom;
        let mut v: Vec<(String, String)> = vec![
            ("mesh.nx".into(), f.nx.to_string()),
            ("mesh.ny".into(), f.ny.to_string()),
            ("mesh.length".into(), num(f.length)),
            ("mesh.radius".into(), num(f.radius)),
            ("mesh.n_outlets".into(), f.n_outlets.to_string()),
            ("fluid.nu".into(), num(f.nu)),
            ("time.t0".into(), num(f.time.t0)),
            ("time.T".into(), num(f.time.t_end)),
            ("time.dt".into(), num(f.time.dt)),
            ("time.stride".into(), f.time.stride.to_string()),
            ("fom.n_piso".into(), f.n_piso.to_string()),
            ("fom.lin_tol".into(), num(f.lin_tol)),
            ("fom.max_iter".into(), f.max_iter.to_string()),
            ("inlet.u0".into(), num(f.u0)),
        ];
        for (j, w) in f.windkessel.iter().enumerate() {
            let p = if j == 0 { "wk".to_string() } else { format!("wk.{j}") };
            v.push((format!("{p}.rp"), num(w.rp)));
            v.push((format!("{p}.rd"), num(w.rd)));
            v.push((format!("{p}.c"), num(w.c)));
            v.push((format!("{p}.pd"), num(w.pd)));
        }
        v.push(("wk.analytic_decaying_exponential".into(), self.analytic_decaying_exponential.to_string()));
        v.push(("lifting.outlet_neumann_value".into(), num(self.outlet_neumann_value)));
        v.push(("pod.delta".into(), num(self.pod_delta)));
        v.push(("rom.n_modes".into(), self.n_modes.map_or("auto".into(), |n| n.to_string())));
        v.push(("rom.stabilization".into(), stab_name(self.stabilization).into()));
        v.push((
            "rom.supremizer".into(),
            match self.supremizer {
                SupremizerVariant::Exact => "exact",
                SupremizerVariant::Approximate => "approximate",
            }
            .into(),
        ));
        v.push(("rom.substeps".into(), self.substeps.to_string()));
        v.push((
            "rom.convection".into(),
            match self.convection {
                ConvectionTreatment::Implicit => "implicit",
                ConvectionTreatment::SemiImplicit => "semi_implicit",
            }
            .into(),
        ));
        v.push(("nn.preset".into(), self.nn_preset.clone()));
        v.push(("nn.hidden_layers".into(), self.nn.hidden_layers.to_string()));
        v.push(("nn.neurons".into(), self.nn.neurons_per_layer.to_string()));
        v.push((
            "nn.activation".into(),
            match self.nn.activation {
                Activation::Softplus => "softplus",
                Activation::Identity => "identity",
            }
            .into(),
        ));
        v.push(("nn.epochs".into(), self.nn.epochs.to_string()));
        v.push(("nn.learning_rate".into(), num(self.nn.learning_rate)));
        v.push(("nn.train_fraction".into(), num(self.nn.train_fraction)));
        v.push(("nn.seed".into(), self.nn.seed.to_string()));
        v.push(("nn.per_outlet".into(), self.nn.per_outlet.to_string()));
        v
    }
}

pub fn stab_name(s: Stabilization) -> &'static str {
    match s {
        Stabilization::Supremizer => "sup",
        Stabilization::PressurePoisson => "ppe",
    }
}

pub fn parse_stabilization(s: &str) -> Result<Stabilization> {
    match s {
        "sup" | "supremizer" => Ok(Stabilization::Supremizer),
        "ppe" => Ok(Stabilization::PressurePoisson),
        _ => Err(Error::Config(format!("stabilization must be sup or ppe, got {s:?}"))),
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}
