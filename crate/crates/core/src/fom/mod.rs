//! Finite-volume incompressible Navier-Stokes solver on the channel mesh.
//!
//! Implicit Euler in time with convective fluxes frozen at the old level and
//! a pressure-correction projection repeated `n_piso` times per step. The
//! velocity carries Dirichlet data on inlet and walls and a zero normal
//! derivative on the outlets; the pressure carries Dirichlet data on the
//! outlets (from the Windkessel model) and a zero normal derivative elsewhere.
//! With this pairing the discrete divergence is the negative adjoint of the
//! discrete gradient, so the projection leaves an exactly divergence-free
//! velocity up to the linear-solver tolerance.

pub mod database;

use crate::error::{Error, Result};
use crate::linalg::{bicgstab, cg};
use crate::mesh_fields::{
    convection_with_fluxes, divergence_parts, gradient_parts, laplacian_parts, BoundaryTag,
    BoundaryValues, FaceFluxes, ScalarField, StructuredMesh, VectorField,
};
use crate::scalar::Real;
use crate::windkessel::{self, WindkesselParams, WindkesselState};

pub use crate::spaces::{pressure_bc, velocity_bc};

pub use database::{read_manifest_traces, SnapshotDatabase, SnapshotRecord};

/// Uniform time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    pub t0: T,
    pub t_end: T,
    pub dt: T,
    /// Steps between stored snapshots.
    pub stride: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !(self.t_end > self.t0) || self.stride == 0 {
            return Err(Error::Config(format!(
                "time grid needs dt > 0, T > t0 and stride >= 1 (dt={}, t0={}, T={}, stride={})",
                self.dt, self.t0, self.t_end, self.stride
            )));
        }
        let n = ((self.t_end - self.t0) / self.dt).round();
        let n_us = n.to_usize().unwrap_or(0);
        if n_us == 0 || ((n * self.dt) - (self.t_end - self.t0)).abs() > T::lit(1e-9) * (self.t_end - self.t0) {
            return Err(Error::Config(format!(
                "T - t0 = {} is not a whole number of steps of {}",
                self.t_end - self.t0,
                self.dt
            )));
        }
        Ok(n_us)
    }

    pub fn time(&self, step: usize) -> T {
        self.t0 + self.dt * T::of_usize(step)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FomConfig<T> {
    pub nx: usize,
    pub ny: usize,
    pub length: T,
    /// Channel half-height.
    pub radius: T,
    pub n_outlets: usize,
    /// Kinematic viscosity.
    pub nu: T,
    pub time: TimeGrid<T>,
    /// Inflow amplitude.
    pub u0: T,
    /// One parameter block per outlet. The inflow period follows block 0.
    pub windkessel: Vec<WindkesselParams<T>>,
    /// Predictor/corrector sweeps per step. Few sweeps leave a momentum
    /// imbalance in the stored fields that a Galerkin model cannot follow.
    pub n_piso: usize,
    pub lin_tol: T,
    pub max_iter: usize,
}

impl<T: Real> FomConfig<T> {
    /// Desk-scale reference channel: 40x8 cells, 50 snapshots over (0, 1] s.
    pub fn case1() -> Self {
        Self {
            nx: 40,
            ny: 8,
            length: T::lit(0.3),
            radius: T::lit(0.02),
            n_outlets: 1,
            nu: T::lit(0.004),
            time: TimeGrid {
                t0: T::zero(),
                t_end: T::one(),
                dt: T::lit(1e-3),
                stride: 20,
            },
            u0: T::lit(0.007957),
            windkessel: vec![WindkesselParams::case1()],
            n_piso: 10,
            lin_tol: T::lit(1e-10),
            max_iter: 5000,
        }
    }

    pub fn mesh(&self) -> Result<StructuredMesh<T>> {
        StructuredMesh::channel(self.nx, self.ny, self.length, self.radius, self.n_outlets)
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh()?;
        self.time.n_steps()?;
        if !(self.nu > T::zero()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.nu)));
        }
        if self.windkessel.len() != self.n_outlets {
            return Err(Error::Config(format!(
                "{} outlets but {} Windkessel blocks",
                self.n_outlets,
                self.windkessel.len()
            )));
        }
        for w in &self.windkessel {
            w.validate()?;
        }
        if self.n_piso == 0 {
            return Err(Error::Config("fom.n_piso must be at least 1".into()));
        }
        if !(self.lin_tol > T::zero()) {
            return Err(Error::Config("fom.lin_tol must be positive".into()));
        }
        Ok(())
    }

    /// Inlet velocity amplitude at time `t`.
    pub fn inlet(&self, t: T) -> T {
        windkessel::inlet_profile(t, self.u0, &self.windkessel[0])
    }

    /// Inflow cross-section (unit depth).
    pub fn inlet_area(&self) -> T {
        self.radius + self.radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FomState<T> {
    pub u: VectorField<T>,
    pub p: ScalarField<T>,
    /// Inflow amplitude belonging to `u`.
    pub g_u: T,
    /// Outlet pressures belonging to `p`.
    pub g_p: Vec<T>,
    pub wk: Vec<WindkesselState<T>>,
    pub t: T,
}

/// Per-step solver diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub momentum_iterations: usize,
    pub pressure_iterations: usize,
    /// Max |div u| over cells after the last correction.
    pub divergence: f64,
}

pub struct FomSolver<T: Real> {
    mesh: StructuredMesh<T>,
    config: FomConfig<T>,
}

impl<T: Real> FomSolver<T> {
    pub fn new(config: FomConfig<T>) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh()?;
        Ok(Self { mesh, config })
    }

    pub fn mesh(&self) -> &StructuredMesh<T> {
        &self.mesh
    }

    pub fn config(&self) -> &FomConfig<T> {
        &self.config
    }

    pub fn initial_state(&self) -> FomState<T> {
        let n = self.mesh.n_cells();
        let t0 = self.config.time.t0;
        let wk: Vec<_> = self
            .config
            .windkessel
            .iter()
            .map(|w| WindkesselState { pp: w.pd, p: w.pd, t: t0 })
            .collect();
        FomState {
            u: VectorField::zeros(n),
            p: ScalarField::zeros(n),
            g_u: self.config.inlet(t0),
            g_p: wk.iter().map(|s| s.p).collect(),
            wk,
            t: t0,
        }
    }

    /// Outward flux through each outlet.
    pub fn outlet_flows(&self, u: &VectorField<T>, g_u: T) -> Result<Vec<T>> {
        let fl = FaceFluxes::from_parts(&self.mesh, u, &velocity_bc(&self.mesh, g_u))?;
        Ok((0..self.mesh.n_outlets())
            .map(|j| fl.boundary_total(&self.mesh, |t| t == BoundaryTag::Outlet(j)))
            .collect())
    }

    /// Solves `u/dt + div(phi (x) u) - nu lap u = u_old/dt - grad p` for the
    /// new velocity with boundary data `u_bc`; `phi` holds the old face fluxes.
    pub fn momentum_predict(
        &self,
        u_old: &VectorField<T>,
        phi: &FaceFluxes<T>,
        u_bc: &BoundaryValues<[T; 2]>,
        p: &ScalarField<T>,
        p_bc: &BoundaryValues<T>,
        dt: T,
    ) -> Result<(VectorField<T>, usize)> {
        let mesh = &self.mesh;
        let nu = self.config.nu;
        let inv_dt = T::one() / dt;
        let hom = u_bc.homogeneous();
        let n = mesh.n_cells();
        let apply_parts = |cells: &VectorField<T>, bc: &BoundaryValues<[T; 2]>| -> Result<VectorField<T>> {
            let conv = convection_with_fluxes(mesh, phi, cells, bc)?;
            let lap = laplacian_parts(mesh, cells, bc)?;
            let mut out = conv;
            out.axpy(-nu, &lap)?;
            Ok(out)
        };
        // affine part from the boundary data
        let lift = apply_parts(&VectorField::zeros(n), u_bc)?;
        let grad = gradient_parts(mesh, p, p_bc)?;
        let mut rhs = u_old.scaled(inv_dt);
        rhs.axpy(-T::one(), &grad)?;
        rhs.axpy(-T::one(), &lift)?;
        let b = rhs.to_flat();
        let mut x = u_old.to_flat();
        let mut failure = None;
        let report = bicgstab(
            |v, out| {
                let f = VectorField::from_flat(v);
                match apply_parts(&f, &hom) {
                    Ok(mut r) => {
                        r.axpy(inv_dt, &f).expect("same length");
                        out.copy_from_slice(&r.to_flat());
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        out.iter_mut().for_each(|o| *o = T::zero());
                    }
                }
            },
            &b,
            &mut x,
            self.config.lin_tol,
            self.config.max_iter,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((VectorField::from_flat(&x), report.iterations))
    }

    /// Projects `u_star` onto the discretely divergence-free space.
    ///
    /// Solves `-div grad(dp) = -div(u_star)/dt` for the increment `dp` (zero on
    /// the outlets), then returns `p + dp` and `u_star - dt grad(dp)`.
    pub fn pressure_correct(
        &self,
        u_star: &VectorField<T>,
        u_bc: &BoundaryValues<[T; 2]>,
        p: &ScalarField<T>,
        p_bc: &BoundaryValues<T>,
        dt: T,
    ) -> Result<(ScalarField<T>, VectorField<T>, usize)> {
        let mesh = &self.mesh;
        if !p_bc.faces.iter().any(|f| f.is_dirichlet()) {
            return Err(Error::Numerical(
                "pressure system is singular: no boundary face carries a Dirichlet value".into(),
            ));
        }
        let hom_p = p_bc.homogeneous();
        let hom_u = u_bc.homogeneous();
        let div = divergence_parts(mesh, u_star, u_bc)?;
        let b: Vec<T> = div.values.iter().map(|&d| -d / dt).collect();
        let mut x = vec![T::zero(); mesh.n_cells()];
        let mut failure = None;
        let report = cg(
            |v, out| {
                let r = gradient_parts(mesh, &ScalarField::from_values(v.to_vec()), &hom_p)
                    .and_then(|g| divergence_parts(mesh, &g, &hom_u));
                match r {
                    Ok(d) => {
                        for (o, di) in out.iter_mut().zip(&d.values) {
                            *o = -*di;
                        }
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        out.iter_mut().for_each(|o| *o = T::zero());
                    }
                }
            },
            &b,
            &mut x,
            self.config.lin_tol,
            self.config.max_iter,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        let dp = ScalarField::from_values(x);
        let g = gradient_parts(mesh, &dp, &hom_p)?;
        let mut u_new = u_star.clone();
        u_new.axpy(-dt, &g)?;
        let mut p_new = p.clone();
        p_new.axpy(T::one(), &dp)?;
        Ok((p_new, u_new, report.iterations))
    }

    /// Advances one time step.
    pub fn step(&self, state: &FomState<T>) -> Result<(FomState<T>, StepStats)> {
        let mesh = &self.mesh;
        let dt = self.config.time.dt;
        let t_new = state.t + dt;
        let q = self.outlet_flows(&state.u, state.g_u)?;
        let wk = state
            .wk
            .iter()
            .zip(&q)
            .zip(&self.config.windkessel)
            .map(|((s, &qj), params)| windkessel::step(s, qj, dt, params))
            .collect::<Result<Vec<_>>>()?;
        let g_p: Vec<T> = wk.iter().map(|s| s.p).collect();
        let g_u = self.config.inlet(t_new);
        let u_bc = velocity_bc(mesh, g_u);
        let p_bc = pressure_bc(mesh, &g_p);
        let phi = FaceFluxes::from_parts(mesh, &state.u, &velocity_bc(mesh, state.g_u))?;
        let mut stats = StepStats::default();
        let mut p = state.p.clone();
        let mut u = state.u.clone();
        for _ in 0..self.config.n_piso {
            let (u_star, it) = self.momentum_predict(&state.u, &phi, &u_bc, &p, &p_bc, dt)?;
            stats.momentum_iterations += it;
            let (p_new, u_new, it) = self.pressure_correct(&u_star, &u_bc, &p, &p_bc, dt)?;
            stats.pressure_iterations += it;
            p = p_new;
            u = u_new;
        }
        if !u.is_finite() || !p.is_finite() {
            return Err(Error::Numerical(format!("non-finite solution at t = {t_new}")));
        }
        stats.divergence = divergence_parts(mesh, &u, &u_bc)?.max_abs().as_f64();
        Ok((
            FomState {
                u,
                p,
                g_u,
                g_p,
                wk,
                t: t_new,
            },
            stats,
        ))
    }

    /// Runs the whole time grid, storing every `stride`-th state.
    pub fn run(&self) -> Result<SnapshotDatabase<T>> {
        let n_steps = self.config.time.n_steps()?;
        let mut db = SnapshotDatabase::new(&self.config);
        let mut state = self.initial_state();
        for k in 1..=n_steps {
            let (mut next, _) = self.step(&state)?;
            // pin the clock to the grid instead of accumulating round-off
            next.t = self.config.time.time(k);
            state = next;
            if k % self.config.time.stride == 0 {
                db.push(&state);
            }
        }
        Ok(db)
    }
}

/// Convenience wrapper: build the solver and run it.
pub fn run_fom<T: Real>(config: &FomConfig<T>) -> Result<SnapshotDatabase<T>> {
    FomSolver::new(config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::mesh_fields::Side;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config(nx: usize, ny: usize) -> FomConfig<f64> {
        FomConfig {
            nx,
            ny,
            length: 0.4,
            radius: 0.05,
            time: TimeGrid {
                t0: 0.0,
                t_end: 0.05,
                dt: 1e-2,
                stride: 1,
            },
            lin_tol: 1e-13,
            ..FomConfig::case1()
        }
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> VectorField<f64> {
        VectorField::from_values((0..n).map(|_| [scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(-1.0..1.0)]).collect())
    }

    /// Dense assembly of the momentum system written cell by cell.
    fn dense_momentum(
        mesh: &StructuredMesh<f64>,
        u_old: &VectorField<f64>,
        g_old: f64,
        g_new: f64,
        p: &[f64],
        g_p: f64,
        nu: f64,
        dt: f64,
    ) -> VectorField<f64> {
        let n = mesh.n_cells();
        let [dx, dy] = mesh.spacing();
        let vol = dx * dy;
        let mut sol = vec![[0.0; 2]; n];
        for comp in 0..2 {
            let mut a = Matrix::<f64>::zeros(n, n);
            let mut b = vec![0.0; n];
            for c in 0..n {
                let (i, j) = mesh.ij(c);
                a[(c, c)] += vol / dt;
                b[c] += vol * u_old.values[c][comp] / dt;
                // pressure gradient, face values: mean inside, cell on walls/inlet, g_p at outlet
                let pf = |side: Side| -> f64 {
                    match mesh.neighbour(c, side) {
                        Some(nb) => 0.5 * (p[c] + p[nb]),
                        None if side == Side::East => g_p,
                        None => p[c],
                    }
                };
                let grad = if comp == 0 {
                    (pf(Side::East) - pf(Side::West)) * dy
                } else {
                    (pf(Side::North) - pf(Side::South)) * dx
                };
                b[c] -= grad;
                for side in Side::ALL {
                    let (len, d, normal) = match side {
                        Side::West => (dy, dx, [-1.0, 0.0]),
                        Side::East => (dy, dx, [1.0, 0.0]),
                        Side::South => (dx, dy, [0.0, -1.0]),
                        Side::North => (dx, dy, [0.0, 1.0]),
                    };
                    match mesh.neighbour(c, side) {
                        Some(nb) => {
                            let uf = [0.5 * (u_old.values[c][0] + u_old.values[nb][0]), 0.5 * (u_old.values[c][1] + u_old.values[nb][1])];
                            let flux = len * (uf[0] * normal[0] + uf[1] * normal[1]);
                            a[(c, c)] += 0.5 * flux + nu * len / d;
                            a[(c, nb)] += 0.5 * flux - nu * len / d;
                        }
                        None => {
                            let (old_b, new_b): ([f64; 2], Option<[f64; 2]>) = match (side, i, j) {
                                (Side::West, _, _) => ([g_old, 0.0], Some([g_new, 0.0])),
                                (Side::East, _, _) => (u_old.values[c], None),
                                _ => ([0.0, 0.0], Some([0.0, 0.0])),
                            };
                            let flux = len * (old_b[0] * normal[0] + old_b[1] * normal[1]);
                            match new_b {
                                Some(v) => {
                                    b[c] -= flux * v[comp];
                                    a[(c, c)] += nu * len / (0.5 * d);
                                    b[c] += nu * len / (0.5 * d) * v[comp];
                                }
                                None => a[(c, c)] += flux,
                            }
                        }
                    }
                }
            }
            let x = a.solve(&b).unwrap();
            for c in 0..n {
                sol[c][comp] = x[c];
            }
        }
        VectorField::from_values(sol)
    }

    #[test]
    fn momentum_predict_matches_dense_assembly() {
        let cfg = small_config(8, 4);
        let solver = FomSolver::new(cfg.clone()).unwrap();
        let mesh = solver.mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u_old = random_field(&mut rng, 32, 0.05);
        let p: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g_old, g_new, g_p) = (0.02, 0.03, 0.4);
        let phi = FaceFluxes::from_parts(mesh, &u_old, &velocity_bc(mesh, g_old)).unwrap();
        let (u_star, _) = solver
            .momentum_predict(
                &u_old,
                &phi,
                &velocity_bc(mesh, g_new),
                &ScalarField::from_values(p.clone()),
                &pressure_bc(mesh, &[g_p]),
                cfg.time.dt,
            )
            .unwrap();
        let oracle = dense_momentum(mesh, &u_old, g_old, g_new, &p, g_p, cfg.nu, cfg.time.dt);
        let scale = oracle.max_abs();
        for (a, b) in u_star.values.iter().zip(&oracle.values) {
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() <= 1e-9 * scale, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn single_cell_predictor_is_identity_plus_pressure() {
        let cfg = small_config(1, 1);
        let solver = FomSolver::new(cfg.clone()).unwrap();
        let mesh = solver.mesh();
        let zero_flux = FaceFluxes {
            interior: vec![],
            boundary: vec![0.0; 4],
        };
        let free = BoundaryValues::zero_gradient(mesh);
        let p_bc = pressure_bc(mesh, &[2.0]);
        let p = ScalarField::from_values(vec![1.0]);
        let u_old = VectorField::from_values(vec![[1.0, 0.0]]);
        let (u_star, _) = solver.momentum_predict(&u_old, &zero_flux, &free, &p, &p_bc, 0.01).unwrap();
        let grad = gradient_parts(mesh, &p, &p_bc).unwrap();
        assert!((u_star.values[0][0] - (1.0 - 0.01 * grad.values[0][0])).abs() < 1e-14);
        assert!((u_star.values[0][1] - (0.0 - 0.01 * grad.values[0][1])).abs() < 1e-14);
    }

    #[test]
    fn projection_removes_divergence() {
        let cfg = small_config(8, 4);
        let solver = FomSolver::new(cfg.clone()).unwrap();
        let mesh = solver.mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u_star = random_field(&mut rng, 32, 1.0);
        let u_bc = velocity_bc(mesh, 0.3);
        let p_bc = pressure_bc(mesh, &[0.0]);
        let (_, u_new, _) = solver
            .pressure_correct(&u_star, &u_bc, &ScalarField::zeros(32), &p_bc, 0.01)
            .unwrap();
        let div = divergence_parts(mesh, &u_new, &u_bc).unwrap();
        assert!(div.max_abs() <= 1e-8, "max div {}", div.max_abs());
    }

    #[test]
    fn uniform_flow_is_left_alone() {
        let cfg = small_config(6, 3);
        let solver = FomSolver::new(cfg.clone()).unwrap();
        let mesh = solver.mesh();
        let u_star = VectorField::from_values(vec![[1.0, 0.0]; 18]);
        let (p_new, u_new, _) = solver
            .pressure_correct(&u_star, &velocity_bc(mesh, 1.0), &ScalarField::zeros(18), &pressure_bc(mesh, &[0.0]), 0.01)
            .unwrap();
        assert!(p_new.max_abs() < 1e-12);
        for v in &u_new.values {
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        }
    }

    #[test]
    fn missing_anchor_is_reported() {
        let cfg = small_config(4, 2);
        let solver = FomSolver::new(cfg).unwrap();
        let mesh = solver.mesh();
        let free = BoundaryValues::zero_gradient(mesh);
        let r = solver.pressure_correct(&VectorField::zeros(8), &velocity_bc(mesh, 0.0), &ScalarField::zeros(8), &free, 0.1);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_inflow_stays_zero() {
        let cfg = FomConfig { u0: 0.0, ..small_config(8, 4) };
        let db = run_fom(&cfg).unwrap();
        assert_eq!(db.len(), 5);
        for r in &db.records {
            assert_eq!(r.u.max_abs(), 0.0);
            assert_eq!(r.p.max_abs(), 0.0);
            assert_eq!(r.g_p, vec![0.0]);
        }
    }

    #[test]
    fn mass_balance_each_step() {
        let cfg = FomConfig { u0: 0.5, ..small_config(10, 4) };
        let solver = FomSolver::new(cfg.clone()).unwrap();
        let mut s = solver.initial_state();
        for _ in 0..5 {
            s = solver.step(&s).unwrap().0;
            let inflow = s.g_u * cfg.inlet_area();
            let out = solver.outlet_flows(&s.u, s.g_u).unwrap()[0];
            assert!((out - inflow).abs() <= 1e-8 * (inflow.abs() + 1e-30));
        }
    }

    #[test]
    fn single_snapshot_when_stride_spans_run() {
        let mut cfg = small_config(6, 2);
        cfg.time.stride = 5;
        let db = run_fom(&cfg).unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.records[0].t, 0.05);
    }

    #[test]
    fn bad_time_grid_is_a_config_error() {
        let mut cfg = small_config(4, 2);
        cfg.time.dt = 0.03;
        assert!(matches!(FomSolver::new(cfg), Err(Error::Config(_))));
    }
}
