//! Fully connected feedforward network mapping time to outlet pressures.
//!
//! Hidden layers use Softplus, the output layer is affine. Inputs and outputs
//! are normalized to zero mean and unit standard deviation before training;
//! the constants travel with the network. Training is full-batch gradient
//! descent on the mean squared error.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::textio::{fmt_real, matrix_from_str, matrix_to_string, parse_real, read_text, write_text};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Softplus,
    /// Linear hidden layers; used to validate backpropagation.
    Identity,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "softplus" => Some(Activation::Softplus),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Softplus => softplus(x),
            Activation::Identity => x,
        }
    }

    fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::Softplus => sigmoid(x),
            Activation::Identity => T::one(),
        }
    }
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
pub fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub seed: u64,
    /// One network per outlet instead of a single multi-output network.
    pub per_outlet: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            neurons_per_layer: 32,
            activation: Activation::Softplus,
            epochs: 5000,
            learning_rate: 1e-2,
            train_fraction: 0.8,
            seed: 42,
            per_outlet: false,
        }
    }
}

impl NetworkConfig {
    /// Two hidden layers of 150 neurons, 50000 epochs, step 5e-6.
    pub fn paper() -> Self {
        Self {
            neurons_per_layer: 150,
            epochs: 50_000,
            learning_rate: 5e-6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.neurons_per_layer == 0 || self.epochs == 0 {
            return Err(Error::Config("network layer, neuron and epoch counts must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Zero-mean, unit-deviation scaling; a zero deviation is replaced by one.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> Normalization<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Config("cannot normalize an empty sample set".into()))?;
        let dim = first.len();
        let n = T::of_usize(rows.len());
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            check_len("sample width", dim, r.len())?;
            for (m, x) in mean.iter_mut().zip(r) {
                *m += *x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut std = vec![T::zero(); dim];
        for r in rows {
            for k in 0..dim {
                let d = r[k] - mean[k];
                std[k] += d * d;
            }
        }
        for s in std.iter_mut() {
            *s = (*s / n).sqrt();
            if !(*s > T::zero()) {
                *s = T::one();
            }
        }
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (*x - *m) / *s).collect()
    }

    pub fn denormalize(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| *x * *s + *m).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    /// `out x in`.
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    pub layers: Vec<Layer<T>>,
    pub activation: Activation,
    pub input_norm: Normalization<T>,
    pub output_norm: Normalization<T>,
    /// Range of the training inputs; predictions outside are extrapolations.
    pub hull: (T, T),
}

/// Parameter gradients laid out like [`Network::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub w: Vec<Matrix<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Real> Network<T> {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialization.
    pub fn new(sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, out) = (w[0], w[1]);
                let r = 1.0 / (fan_in as f64).sqrt();
                let wv = (0..out * fan_in).map(|_| T::lit(rng.gen_range(-r..=r))).collect();
                let bv = (0..out).map(|_| T::lit(rng.gen_range(-r..=r))).collect();
                Layer { w: Matrix::from_vec(out, fan_in, wv), b: bv }
            })
            .collect();
        Ok(Self {
            layers,
            activation,
            input_norm: Normalization::identity(sizes[0]),
            output_norm: Normalization::identity(sizes[sizes.len() - 1]),
            hull: (T::neg_infinity(), T::infinity()),
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.cols()];
        s.extend(self.layers.iter().map(|l| l.w.rows()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.rows()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.w.rows() * l.w.cols() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.is_finite() && l.b.iter().all(|x| x.is_finite()))
    }

    /// Pre-activations of every layer for one normalized input.
    fn pre_activations(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut y = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let z: Vec<T> = (0..l.w.rows())
                .map(|i| l.w.row(i).iter().zip(&y).fold(l.b[i], |s, (w, v)| s + *w * *v))
                .collect();
            y = if k == last { z.clone() } else { z.iter().map(|v| self.activation.apply(*v)).collect() };
            out.push(z);
        }
        out
    }

    /// Network output in normalized units.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.pre_activations(x).pop().expect("at least one layer")
    }

    /// Outputs of the first hidden layer (after activation).
    pub fn hidden_output(&self, x: &[T]) -> Vec<T> {
        self.pre_activations(x)[0].iter().map(|v| self.activation.apply(*v)).collect()
    }

    /// Physical-unit prediction for a physical input.
    pub fn predict(&self, x: &[T]) -> Vec<T> {
        self.output_norm.denormalize(&self.forward(&self.input_norm.normalize(x)))
    }

    /// Mean squared error over `(x, y)` pairs in normalized units.
    pub fn loss(&self, xs: &[Vec<T>], ys: &[Vec<T>]) -> T {
        if xs.is_empty() {
            return T::zero();
        }
        let mut s = T::zero();
        for (x, y) in xs.iter().zip(ys) {
            for (o, t) in self.forward(x).iter().zip(y) {
                let d = *o - *t;
                s += d * d;
            }
        }
        s / T::of_usize(xs.len() * self.output_dim())
    }

    /// Loss and its gradient by backpropagation.
    pub fn backprop(&self, xs: &[Vec<T>], ys: &[Vec<T>]) -> (T, Gradients<T>) {
        let mut gw: Vec<Matrix<T>> = self.layers.iter().map(|l| Matrix::zeros(l.w.rows(), l.w.cols())).collect();
        let mut gb: Vec<Vec<T>> = self.layers.iter().map(|l| vec![T::zero(); l.b.len()]).collect();
        let scale = T::one() / T::of_usize(xs.len().max(1) * self.output_dim());
        let two = T::lit(2.0);
        let mut loss = T::zero();
        let last = self.layers.len() - 1;
        for (x, y) in xs.iter().zip(ys) {
            let z = self.pre_activations(x);
            let acts: Vec<Vec<T>> = z
                .iter()
                .enumerate()
                .map(|(k, zk)| if k == last { zk.clone() } else { zk.iter().map(|v| self.activation.apply(*v)).collect() })
                .collect();
            let mut delta: Vec<T> = acts[last].iter().zip(y).map(|(o, t)| *o - *t).collect();
            loss += delta.iter().fold(T::zero(), |s, d| s + *d * *d);
            for d in delta.iter_mut() {
                *d *= two * scale;
            }
            for k in (0..=last).rev() {
                let input: &[T] = if k == 0 { x } else { &acts[k - 1] };
                let l = &self.layers[k];
                for i in 0..l.w.rows() {
                    gb[k][i] += delta[i];
                    for j in 0..l.w.cols() {
                        gw[k][(i, j)] += delta[i] * input[j];
                    }
                }
                if k > 0 {
                    delta = (0..l.w.cols())
                        .map(|j| {
                            let s = (0..l.w.rows()).fold(T::zero(), |s, i| s + l.w[(i, j)] * delta[i]);
                            s * self.activation.derivative(z[k - 1][j])
                        })
                        .collect();
                }
            }
        }
        (loss * scale, Gradients { w: gw, b: gb })
    }

    /// Flat parameter `p` in layer order: weights row-major, then biases.
    fn parameter_mut(&mut self, mut p: usize) -> &mut T {
        for l in self.layers.iter_mut() {
            let nw = l.w.rows() * l.w.cols();
            if p < nw {
                let c = l.w.cols();
                return &mut l.w[(p / c, p % c)];
            }
            p -= nw;
            if p < l.b.len() {
                return &mut l.b[p];
            }
            p -= l.b.len();
        }
        panic!("parameter index out of range")
    }

    fn apply_step(&mut self, g: &Gradients<T>, eta: T) {
        for (l, (gw, gb)) in self.layers.iter_mut().zip(g.w.iter().zip(&g.b)) {
            for i in 0..l.w.rows() {
                for j in 0..l.w.cols() {
                    l.w[(i, j)] -= eta * gw[(i, j)];
                }
                l.b[i] -= eta * gb[i];
            }
        }
    }
}

impl<T: Real> Gradients<T> {
    fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}

/// Largest relative deviation between backpropagated and central-difference
/// gradients (step `1e-6`). The denominator is `max(|g_bp|, |g_fd|, 1e-4)`
/// so parameters with vanishing gradients compare absolutely.
pub fn gradient_check<T: Real>(net: &Network<T>, xs: &[Vec<T>], ys: &[Vec<T>]) -> T {
    let (_, g) = net.backprop(xs, ys);
    let analytic = g.flat();
    let h = T::lit(1e-6);
    let floor = T::lit(1e-4);
    let mut probe = net.clone();
    let mut worst = T::zero();
    for (p, ga) in analytic.iter().enumerate() {
        let orig = *probe.parameter_mut(p);
        let (up, down) = (orig + h, orig - h);
        *probe.parameter_mut(p) = up;
        let yp: Vec<Vec<T>> = xs.iter().map(|x| probe.forward(x)).collect();
        *probe.parameter_mut(p) = down;
        let ym: Vec<Vec<T>> = xs.iter().map(|x| probe.forward(x)).collect();
        *probe.parameter_mut(p) = orig;
        // L+ - L- summed as (r+ - r-)(r+ + r-) to limit cancellation
        let mut diff = T::zero();
        for ((a, b), y) in yp.iter().zip(&ym).zip(ys) {
            for k in 0..y.len() {
                let (rp, rm) = (a[k] - y[k], b[k] - y[k]);
                diff += (a[k] - b[k]) * (rp + rm);
            }
        }
        let fd = diff / T::of_usize(xs.len().max(1) * net.output_dim()) / (up - down);
        let den = ga.abs().max(fd.abs()).max(floor);
        worst = worst.max((*ga - fd).abs() / den);
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport<T> {
    pub train_loss: Vec<T>,
    pub test_loss: Vec<T>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl<T: Real> TrainReport<T> {
    pub fn final_train(&self) -> T {
        *self.train_loss.last().unwrap_or(&T::nan())
    }

    pub fn final_test(&self) -> T {
        *self.test_loss.last().unwrap_or(&T::nan())
    }
}

/// Seeded split into training and held-out indices.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, n.saturating_sub(1).max(1));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fits `inputs -> targets`; losses are recorded before each update, so
/// entry `e` is the loss of the parameters after `e` updates.
pub fn train<T: Real>(
    inputs: &[Vec<T>],
    targets: &[Vec<T>],
    cfg: &NetworkConfig,
) -> Result<(Network<T>, TrainReport<T>)> {
    cfg.validate()?;
    check_len("training targets", inputs.len(), targets.len())?;
    if inputs.len() < 2 {
        return Err(Error::Config("training needs at least two samples".into()));
    }
    let in_norm = Normalization::fit(inputs)?;
    let out_norm = Normalization::fit(targets)?;
    let xs: Vec<Vec<T>> = inputs.iter().map(|x| in_norm.normalize(x)).collect();
    let ys: Vec<Vec<T>> = targets.iter().map(|y| out_norm.normalize(y)).collect();
    let (train_idx, test_idx) = split_indices(inputs.len(), cfg.train_fraction, cfg.seed);
    let pick = |v: &[Vec<T>], idx: &[usize]| idx.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
    let (xtr, ytr) = (pick(&xs, &train_idx), pick(&ys, &train_idx));
    let (xte, yte) = (pick(&xs, &test_idx), pick(&ys, &test_idx));

    let mut sizes = vec![inputs[0].len()];
    sizes.extend(std::iter::repeat(cfg.neurons_per_layer).take(cfg.hidden_layers));
    sizes.push(targets[0].len());
    let mut net = Network::new(&sizes, cfg.activation, cfg.seed)?;
    net.input_norm = in_norm;
    net.output_norm = out_norm;
    let lo = inputs.iter().map(|x| x[0]).fold(T::infinity(), T::min);
    let hi = inputs.iter().map(|x| x[0]).fold(T::neg_infinity(), T::max);
    net.hull = (lo, hi);

    let eta = T::lit(cfg.learning_rate);
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(cfg.epochs + 1),
        test_loss: Vec::with_capacity(cfg.epochs + 1),
        train_indices: train_idx,
        test_indices: test_idx,
    };
    for epoch in 0..=cfg.epochs {
        let (loss, grads) = net.backprop(&xtr, &ytr);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("training loss became {loss} at epoch {epoch}")));
        }
        report.train_loss.push(loss);
        report.test_loss.push(net.loss(&xte, &yte));
        if epoch < cfg.epochs {
            net.apply_step(&grads, eta);
        }
    }
    Ok((net, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub values: Vec<T>,
    /// The query time lies outside the training range.
    pub extrapolated: bool,
}

/// Time-to-outlet-pressure surrogate: one multi-output network or one
/// network per outlet.
#[derive(Clone, Debug, PartialEq)]
pub struct OutflowModel<T> {
    pub networks: Vec<Network<T>>,
}

impl<T: Real> OutflowModel<T> {
    pub fn n_outlets(&self) -> usize {
        self.networks.iter().map(|n| n.output_dim()).sum()
    }
}

/// Trains on `g_p[k][j]` sampled at `times[k]`.
pub fn train_outflow<T: Real>(
    times: &[T],
    g_p: &[Vec<T>],
    cfg: &NetworkConfig,
) -> Result<(OutflowModel<T>, Vec<TrainReport<T>>)> {
    check_len("outflow samples", times.len(), g_p.len())?;
    let inputs: Vec<Vec<T>> = times.iter().map(|t| vec![*t]).collect();
    let n_out = g_p.first().map_or(0, |r| r.len());
    if n_out == 0 {
        return Err(Error::Config("outflow samples carry no outlet values".into()));
    }
    let groups: Vec<Vec<usize>> = if cfg.per_outlet {
        (0..n_out).map(|j| vec![j]).collect()
    } else {
        vec![(0..n_out).collect()]
    };
    let mut networks = Vec::new();
    let mut reports = Vec::new();
    for g in groups {
        let targets: Vec<Vec<T>> = g_p.iter().map(|r| g.iter().map(|&j| r[j]).collect()).collect();
        let (net, rep) = train(&inputs, &targets, cfg)?;
        networks.push(net);
        reports.push(rep);
    }
    Ok((OutflowModel { networks }, reports))
}

pub fn predict_outflow<T: Real>(model: &OutflowModel<T>, t: T) -> Prediction<T> {
    let mut values = Vec::with_capacity(model.n_outlets());
    let mut extrapolated = false;
    for net in &model.networks {
        values.extend(net.predict(&[t]));
        let (lo, hi) = net.hull;
        let slack = T::lit(1e-9) * T::one().max(lo.abs()).max(hi.abs());
        extrapolated |= t < lo - slack || t > hi + slack;
    }
    Prediction { values, extrapolated }
}

fn join<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(" ")
}

/// `ROMNN v1 <networks>`, then per network a header block followed by the
/// weight matrix and a one-row bias matrix of each layer.
pub fn model_to_string<T: Real>(model: &OutflowModel<T>) -> String {
    let mut s = format!("ROMNN v1 {}\n", model.networks.len());
    for net in &model.networks {
        let sizes: Vec<String> = net.sizes().iter().map(|n| n.to_string()).collect();
        s.push_str(&format!("layers {}\n", sizes.join(" ")));
        s.push_str(&format!("activation {}\n", net.activation.name()));
        s.push_str(&format!("input_mean {}\n", join(&net.input_norm.mean)));
        s.push_str(&format!("input_std {}\n", join(&net.input_norm.std)));
        s.push_str(&format!("output_mean {}\n", join(&net.output_norm.mean)));
        s.push_str(&format!("output_std {}\n", join(&net.output_norm.std)));
        s.push_str(&format!("hull {} {}\n", fmt_real(net.hull.0), fmt_real(net.hull.1)));
        for l in &net.layers {
            s.push_str(&matrix_to_string(&l.w));
            s.push_str(&matrix_to_string(&Matrix::from_vec(1, l.b.len(), l.b.clone())));
        }
    }
    s
}

pub fn model_from_str<T: Real>(text: &str, path: &Path) -> Result<OutflowModel<T>> {
    let bad = |d: String| Error::format("network model", path, d);
    let lines: Vec<&str> = text.lines().collect();
    let mut pos = 0usize;
    let next = |pos: &mut usize| -> Result<&str> {
        let l = lines.get(*pos).copied().ok_or_else(|| bad("unexpected end of file".into()))?;
        *pos += 1;
        Ok(l)
    };
    let head: Vec<&str> = next(&mut pos)?.split_whitespace().collect();
    if head.len() != 3 || head[0] != "ROMNN" || head[1] != "v1" {
        return Err(bad(format!("unexpected header {:?}", head.join(" "))));
    }
    let count: usize = head[2].parse().map_err(|_| bad("bad network count".into()))?;
    let keyed = |line: &str, key: &str| -> Result<Vec<String>> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(format!("expected {key:?}, found {line:?}")));
        }
        Ok(it.map(str::to_string).collect())
    };
    let reals = |toks: Vec<String>| -> Result<Vec<T>> {
        toks.iter().map(|t| parse_real(t).ok_or_else(|| bad(format!("bad number {t:?}")))).collect()
    };
    let mut networks = Vec::with_capacity(count);
    for _ in 0..count {
        let sizes: Vec<usize> = keyed(next(&mut pos)?, "layers")?
            .iter()
            .map(|t| t.parse().map_err(|_| bad(format!("bad layer size {t:?}"))))
            .collect::<Result<_>>()?;
        let act = keyed(next(&mut pos)?, "activation")?;
        let activation = act
            .first()
            .and_then(|a| Activation::parse(a))
            .ok_or_else(|| bad(format!("unknown activation {act:?}")))?;
        let input_mean = reals(keyed(next(&mut pos)?, "input_mean")?)?;
        let input_std = reals(keyed(next(&mut pos)?, "input_std")?)?;
        let output_mean = reals(keyed(next(&mut pos)?, "output_mean")?)?;
        let output_std = reals(keyed(next(&mut pos)?, "output_std")?)?;
        let hull = reals(keyed(next(&mut pos)?, "hull")?)?;
        if sizes.len() < 2 || hull.len() != 2 {
            return Err(bad("malformed network header".into()));
        }
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let mut take = |rows: usize| -> Result<Matrix<T>> {
                let start = pos;
                pos += 1 + rows;
                if pos > lines.len() {
                    return Err(bad("truncated matrix block".into()));
                }
                matrix_from_str(&lines[start..pos].join("\n"), path)
            };
            let wm = take(w[1])?;
            let bm = take(1)?;
            if wm.rows() != w[1] || wm.cols() != w[0] || bm.cols() != w[1] {
                return Err(bad("layer shapes do not chain".into()));
            }
            layers.push(Layer { w: wm, b: bm.as_slice().to_vec() });
        }
        let (n_in, n_out) = (sizes[0], sizes[sizes.len() - 1]);
        if input_mean.len() != n_in || input_std.len() != n_in || output_mean.len() != n_out || output_std.len() != n_out {
            return Err(bad("normalization constants do not match layer sizes".into()));
        }
        networks.push(Network {
            layers,
            activation,
            input_norm: Normalization { mean: input_mean, std: input_std },
            output_norm: Normalization { mean: output_mean, std: output_std },
            hull: (hull[0], hull[1]),
        });
    }
    Ok(OutflowModel { networks })
}

pub fn write_model<T: Real>(path: &Path, model: &OutflowModel<T>) -> Result<()> {
    write_text(path, &model_to_string(model))
}

pub fn read_model<T: Real>(path: &Path) -> Result<OutflowModel<T>> {
    model_from_str(&read_text(path)?, path)
}
