//! Shared test helpers: a cell-by-cell quadrature oracle for the reduced
//! tensors, written independently of the face loops in the library.
#![allow(dead_code)]

use hemorom::mesh_fields::{FaceCondition, Field, Side, StructuredMesh, Value};
use hemorom::rom::ExtendedBasis;

/// Field as `[component][cell]` plus boundary conditions per (cell, side).
#[derive(Clone)]
pub struct Raw {
    pub nc: usize,
    pub cells: Vec<Vec<f64>>,
    /// `bc[c][side] = Some((dirichlet, value per component))`.
    pub bc: Vec<[Option<(bool, Vec<f64>)>; 4]>,
}

pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub n_outlets: usize,
}

const SIDES: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

impl Grid {
    pub fn of(m: &StructuredMesh<f64>) -> Self {
        let s = m.spacing();
        Grid { nx: m.nx(), ny: m.ny(), dx: s[0], dy: s[1], n_outlets: m.n_outlets() }
    }

    fn n(&self) -> usize {
        self.nx * self.ny
    }

    fn vol(&self) -> f64 {
        self.dx * self.dy
    }

    fn nb(&self, c: usize, s: usize) -> Option<usize> {
        let (i, j) = (c % self.nx, c / self.nx);
        match s {
            0 => (i > 0).then(|| c - 1),
            1 => (i + 1 < self.nx).then(|| c + 1),
            2 => (j > 0).then(|| c - self.nx),
            _ => (j + 1 < self.ny).then(|| c + self.nx),
        }
    }

    /// (outward normal, face length, centre-to-centre or centre-to-face distance)
    fn geom(&self, s: usize, boundary: bool) -> ([f64; 2], f64, f64) {
        let (n, a, d) = match s {
            0 => ([-1.0, 0.0], self.dy, self.dx),
            1 => ([1.0, 0.0], self.dy, self.dx),
            2 => ([0.0, -1.0], self.dx, self.dy),
            _ => ([0.0, 1.0], self.dx, self.dy),
        };
        (n, a, if boundary { 0.5 * d } else { d })
    }

    fn outlet_of(&self, c: usize) -> usize {
        (c / self.nx) * self.n_outlets / self.ny
    }

    fn face_value(&self, f: &Raw, c: usize, s: usize, k: usize) -> f64 {
        match self.nb(c, s) {
            Some(n) => 0.5 * (f.cells[k][c] + f.cells[k][n]),
            None => {
                let (dir, v) = f.bc[c][s].as_ref().unwrap();
                let (_, _, d) = self.geom(s, true);
                if *dir { v[k] } else { f.cells[k][c] + v[k] * d }
            }
        }
    }

    fn normal_grad(&self, f: &Raw, c: usize, s: usize, k: usize) -> f64 {
        match self.nb(c, s) {
            Some(n) => (f.cells[k][n] - f.cells[k][c]) / self.geom(s, false).2,
            None => {
                let (dir, v) = f.bc[c][s].as_ref().unwrap();
                let (_, _, d) = self.geom(s, true);
                if *dir { (v[k] - f.cells[k][c]) / d } else { v[k] }
            }
        }
    }

    fn flux(&self, w: &Raw, c: usize, s: usize) -> f64 {
        let (n, a, _) = self.geom(s, self.nb(c, s).is_none());
        (self.face_value(w, c, s, 0) * n[0] + self.face_value(w, c, s, 1) * n[1]) * a
    }

    pub fn lap(&self, f: &Raw) -> Vec<Vec<f64>> {
        (0..f.nc)
            .map(|k| {
                (0..self.n())
                    .map(|c| {
                        let mut s = 0.0;
                        for side in 0..4 {
                            let (_, a, _) = self.geom(side, false);
                            s += a * self.normal_grad(f, c, side, k);
                        }
                        s / self.vol()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn grad(&self, p: &Raw) -> Vec<Vec<f64>> {
        (0..2)
            .map(|k| {
                (0..self.n())
                    .map(|c| {
                        let mut s = 0.0;
                        for side in 0..4 {
                            let (n, a, _) = self.geom(side, false);
                            s += self.face_value(p, c, side, 0) * n[k] * a;
                        }
                        s / self.vol()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn div(&self, w: &Raw) -> Vec<f64> {
        (0..self.n())
            .map(|c| (0..4).map(|s| self.flux(w, c, s)).sum::<f64>() / self.vol())
            .collect()
    }

    pub fn conv(&self, w: &Raw, u: &Raw) -> Vec<Vec<f64>> {
        (0..u.nc)
            .map(|k| {
                (0..self.n())
                    .map(|c| {
                        (0..4).map(|s| self.flux(w, c, s) * self.face_value(u, c, s, k)).sum::<f64>()
                            / self.vol()
                    })
                    .collect()
            })
            .collect()
    }

    /// Velocity boundary rule with inflow `g`: inlet and walls Dirichlet, outlets Neumann 0.
    pub fn velocity(&self, cells: Vec<Vec<f64>>, g: f64) -> Raw {
        let bc = (0..self.n())
            .map(|c| {
                let mut out: [Option<(bool, Vec<f64>)>; 4] = Default::default();
                for s in 0..4 {
                    if self.nb(c, s).is_none() {
                        out[s] = Some(match s {
                            0 => (true, vec![g, 0.0]),
                            1 => (false, vec![0.0, 0.0]),
                            _ => (true, vec![0.0, 0.0]),
                        });
                    }
                }
                out
            })
            .collect();
        Raw { nc: 2, cells, bc }
    }

    pub fn dot(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        for c in 0..self.n() {
            for k in 0..a.len() {
                s += a[k][c] * b[k][c];
            }
        }
        s * self.vol()
    }

    /// Outlet integral of `trace(w_i) dn w_j`.
    pub fn outlet_term(&self, wi: &Raw, wj: &Raw) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ny {
            let c = j * self.nx + self.nx - 1;
            let _ = self.outlet_of(c);
            s += self.dy * self.face_value(wi, c, 1, 0) * self.normal_grad(wj, c, 1, 0);
        }
        s
    }
}

pub fn raw_of<V: Value<Scalar = f64>>(
    m: &StructuredMesh<f64>,
    cells: &Field<V>,
    bc: &[FaceCondition<V>],
) -> Raw {
    let nc = V::COMPONENTS;
    let comps = (0..nc).map(|k| cells.values.iter().map(|v| v.component(k)).collect()).collect();
    let faces = (0..m.n_cells())
        .map(|c| {
            let mut out: [Option<(bool, Vec<f64>)>; 4] = Default::default();
            for (s, side) in SIDES.iter().enumerate() {
                if let Some(k) = m.boundary_face_of(c, *side) {
                    let cond = &bc[k];
                    let v = cond.value();
                    out[s] = Some((cond.is_dirichlet(), (0..nc).map(|q| v.component(q)).collect()));
                }
            }
            out
        })
        .collect();
    Raw { nc, cells: comps, bc: faces }
}

/// Every reduced tensor by brute-force quadrature.
pub struct OracleTensors {
    pub mass: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub k: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub nbnd: Vec<Vec<f64>>,
    pub g: Vec<Vec<Vec<f64>>>,
    pub e: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

pub fn oracle(m: &StructuredMesh<f64>, basis: &ExtendedBasis<f64>) -> OracleTensors {
    let g = Grid::of(m);
    let v: Vec<Raw> = basis.velocity.iter().map(|f| raw_of(m, &f.cells, &f.bc.faces)).collect();
    let w: Vec<Raw> = basis.pressure.iter().map(|f| raw_of(m, &f.cells, &f.bc.faces)).collect();
    let (nu, np) = (v.len(), w.len());
    let lap: Vec<_> = v.iter().map(|f| g.lap(f)).collect();
    let grad: Vec<_> = w.iter().map(|f| g.grad(f)).collect();
    let mass = (0..nu).map(|i| (0..nu).map(|j| g.dot(&v[i].cells, &v[j].cells)).collect()).collect();
    let b = (0..nu).map(|i| (0..nu).map(|j| g.dot(&v[i].cells, &lap[j])).collect()).collect();
    let mut c = vec![vec![vec![0.0; nu]; nu]; nu];
    let mut gt = vec![vec![vec![0.0; nu]; nu]; np];
    for j in 0..nu {
        for k in 0..nu {
            let cv = g.conv(&v[j], &v[k]);
            for i in 0..nu {
                c[i][j][k] = g.dot(&v[i].cells, &cv);
            }
            let dd = g.div(&g.velocity(cv, 0.0));
            for i in 0..np {
                gt[i][j][k] = g.dot(&w[i].cells, &[dd.clone()]);
            }
        }
    }
    let k = (0..nu).map(|i| (0..np).map(|j| g.dot(&v[i].cells, &grad[j])).collect()).collect();
    let divs: Vec<_> = v.iter().map(|f| g.div(f)).collect();
    let div_lap: Vec<_> = lap.iter().map(|l| g.div(&g.velocity(l.clone(), 0.0))).collect();
    let p = (0..np).map(|i| (0..nu).map(|j| g.dot(&w[i].cells, &[divs[j].clone()])).collect()).collect();
    let e = (0..np).map(|i| (0..nu).map(|j| g.dot(&w[i].cells, &[div_lap[j].clone()])).collect()).collect();
    let d = (0..np).map(|i| (0..np).map(|j| g.dot(&grad[i], &grad[j])).collect()).collect();
    let nbnd = (0..np).map(|i| (0..np).map(|j| g.outlet_term(&w[i], &w[j])).collect()).collect();
    let unit = g.div(&g.velocity(vec![vec![0.0; g.n()]; 2], 1.0));
    let h = (0..np).map(|i| g.dot(&w[i].cells, &[unit.clone()])).collect();
    OracleTensors { mass, b, c, k, p, d, nbnd, g: gt, e, h }
}

/// Largest `|a - b|` relative to `max(1, max |b|)` over a flat pair of sequences.
pub fn mixed_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn flat2(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

pub fn flat3(v: &[Vec<Vec<f64>>]) -> Vec<f64> {
    v.iter().flatten().flatten().copied().collect()
}
