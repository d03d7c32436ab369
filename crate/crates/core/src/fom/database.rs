//! Snapshot database: a directory holding `manifest.txt` and ROMFLD files.
//!
//! Manifest layout:
//!
//! ```text
//! # ROMDB v1 <nx> <ny> <length> <radius> <n_outlets>
//! # index t u_file p_file g_u g_p_0 .. g_p_{n-1}
//! 0 2.0000000000000000e-2 u_0000.fld p_0000.fld ...
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::textio::{fmt_real, parse_real, read_text, write_text};
use crate::mesh_fields::io::{read_field, write_field};
use crate::mesh_fields::{ScalarField, StructuredMesh, VectorField};
use crate::scalar::Real;

use super::{FomConfig, FomState};

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRecord<T> {
    pub t: T,
    pub u: VectorField<T>,
    pub p: ScalarField<T>,
    pub g_u: T,
    pub g_p: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotDatabase<T> {
    pub nx: usize,
    pub ny: usize,
    pub length: T,
    pub radius: T,
    pub n_outlets: usize,
    pub records: Vec<SnapshotRecord<T>>,
}

impl<T: Real> SnapshotDatabase<T> {
    pub fn new(config: &FomConfig<T>) -> Self {
        Self {
            nx: config.nx,
            ny: config.ny,
            length: config.length,
            radius: config.radius,
            n_outlets: config.n_outlets,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, state: &FomState<T>) {
        self.records.push(SnapshotRecord {
            t: state.t,
            u: state.u.clone(),
            p: state.p.clone(),
            g_u: state.g_u,
            g_p: state.g_p.clone(),
        });
    }

    pub fn mesh(&self) -> Result<StructuredMesh<T>> {
        StructuredMesh::channel(self.nx, self.ny, self.length, self.radius, self.n_outlets)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn g_u(&self) -> Vec<T> {
        self.records.iter().map(|r| r.g_u).collect()
    }

    /// Outlet pressure samples, one row per snapshot.
    pub fn g_p(&self) -> Vec<Vec<T>> {
        self.records.iter().map(|r| r.g_p.clone()).collect()
    }

    pub fn manifest_string(&self) -> String {
        let mut s = format!(
            "# ROMDB v1 {} {} {} {} {}\n# index t u_file p_file g_u",
            self.nx,
            self.ny,
            fmt_real(self.length),
            fmt_real(self.radius),
            self.n_outlets
        );
        for j in 0..self.n_outlets {
            s.push_str(&format!(" g_p_{j}"));
        }
        s.push('\n');
        for (k, r) in self.records.iter().enumerate() {
            s.push_str(&format!("{k} {} u_{k:04}.fld p_{k:04}.fld {}", fmt_real(r.t), fmt_real(r.g_u)));
            for g in &r.g_p {
                s.push(' ');
                s.push_str(&fmt_real(*g));
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, r) in self.records.iter().enumerate() {
            write_field(&dir.join(format!("u_{k:04}.fld")), self.nx, self.ny, &r.u)?;
            write_field(&dir.join(format!("p_{k:04}.fld")), self.nx, self.ny, &r.p)?;
        }
        write_text(&dir.join("manifest.txt"), &self.manifest_string())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.txt");
        let text = read_text(&path)?;
        let bad = |d: String| Error::format("snapshot manifest", &path, d);
        let mut lines = text.lines();
        let head: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty manifest".into()))?
            .split_whitespace()
            .collect();
        if head.len() != 8 || head[0] != "#" || head[1] != "ROMDB" || head[2] != "v1" {
            return Err(bad(format!("unexpected header {:?}", head.join(" "))));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
        let real = |s: &str| parse_real::<T>(s).ok_or_else(|| bad(format!("bad number {s:?}")));
        let mut db = Self {
            nx: int(head[3])?,
            ny: int(head[4])?,
            length: real(head[5])?,
            radius: real(head[6])?,
            n_outlets: int(head[7])?,
            records: Vec::new(),
        };
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 5 + db.n_outlets {
                return Err(bad(format!(
                    "snapshot line has {} fields, expected {} (one g_p sample per outlet)",
                    tok.len(),
                    5 + db.n_outlets
                )));
            }
            let (nx_u, ny_u, u) = read_field::<T, [T; 2]>(&dir.join(tok[2]))?;
            let (nx_p, ny_p, p) = read_field::<T, T>(&dir.join(tok[3]))?;
            if (nx_u, ny_u) != (db.nx, db.ny) || (nx_p, ny_p) != (db.nx, db.ny) {
                return Err(bad(format!("field files of snapshot {} do not match the mesh", tok[0])));
            }
            db.records.push(SnapshotRecord {
                t: real(tok[1])?,
                u,
                p,
                g_u: real(tok[4])?,
                g_p: tok[5..].iter().map(|s| real(s)).collect::<Result<_>>()?,
            });
        }
        Ok(db)
    }
}

/// Times and boundary traces from a snapshot manifest, without the fields.
#[allow(clippy::type_complexity)]
pub fn read_manifest_traces<T: Real>(path: &Path) -> Result<(Vec<T>, Vec<T>, Vec<Vec<T>>)> {
    let text = read_text(path)?;
    let bad = |d: String| Error::format("snapshot manifest", path, d);
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if head.len() != 8 || head[1] != "ROMDB" || head[2] != "v1" {
        return Err(bad(format!("unexpected header {:?}", head.join(" "))));
    }
    let n_out: usize = head[7].parse().map_err(|_| bad(format!("bad outlet count {:?}", head[7])))?;
    let real = |s: &str| parse_real::<T>(s).ok_or_else(|| bad(format!("bad number {s:?}")));
    let (mut t, mut gu, mut gp) = (Vec::new(), Vec::new(), Vec::new());
    for line in lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 5 + n_out {
            return Err(bad(format!("snapshot line has {} fields, expected {}", tok.len(), 5 + n_out)));
        }
        t.push(real(tok[1])?);
        gu.push(real(tok[4])?);
        gp.push(tok[5..].iter().map(|s| real(s)).collect::<Result<Vec<_>>>()?);
    }
    Ok((t, gu, gp))
}
