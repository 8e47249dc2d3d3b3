//! Augmented Lagrangian training with inner misreport optimization.
//!
//! Each minibatch runs projected gradient ascent on cached misreports, takes
//! one Adam step on
//!
//! ```text
//! C_ρ(w) = −(1/B) Σ_ℓ Σ_i p_i(v^ℓ) + Σ_i λ_i rgt_i(w) + (ρ/2) Σ_i rgt_i(w)²
//! rgt_i(w) = (1/B) Σ_ℓ max{u_i(v_i^ℓ; (v'_i^ℓ, v_{-i}^ℓ)) − u_i(v_i^ℓ; v^ℓ), 0}
//! ```
//!
//! with the misreports held fixed, and every `Z` minibatches moves the
//! multipliers by `λ_i ← λ_i + ρ rgt_i`. In sample-based mode the ascent is
//! replaced by the best of `Q` uniform misreports.
//!
//! Misreport rows are always ordered `(profile, bidder)`: row `ℓ·n + i` is
//! bidder `i`'s misreport in profile `ℓ`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::math;
use crate::diffcore::{AdamState, Bindings, Gradients, Graph, Tensor};
use crate::mechanism::{substitute, Mechanism};
use crate::regretnet::{build_network, focus_utility_node, ArchSpec, RegretNet};
use crate::rng::{self, streams};
use crate::valuations::{ProfileBatch, SettingSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    /// Projected gradient ascent on cached misreports.
    Gradient,
    /// Best of `misreport_samples` uniform draws per bidder and profile.
    SampleBased,
}

/// Update rule for misreport ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AscentRule {
    /// `x ← x + γ ∇u`.
    Plain,
    /// Adam with step size `γ`, moments reset for every ascent run.
    Adam,
}

/// Projected ascent settings shared by training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AscentConfig {
    pub rule: AscentRule,
    pub steps: usize,
    pub step_size: f64,
}

/// Per-coordinate ascent state for a flat block of misreports.
#[derive(Debug, Clone)]
pub struct Ascent {
    rule: AscentRule,
    step_size: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Ascent {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(rule: AscentRule, step_size: f64, len: usize) -> Self {
        let moments = if rule == AscentRule::Adam { len } else { 0 };
        Self { rule, step_size, t: 0, m: vec![0.0; moments], v: vec![0.0; moments] }
    }

    /// Moves `x` uphill along `grad`; projection is left to the caller.
    pub fn apply(&mut self, x: &mut [f64], grad: &[f64]) {
        match self.rule {
            AscentRule::Plain => {
                for (x, g) in x.iter_mut().zip(grad) {
                    *x += self.step_size * g;
                }
            }
            AscentRule::Adam => {
                self.t += 1;
                let c1 = 1.0 - math::powi(Self::BETA1, self.t);
                let c2 = 1.0 - math::powi(Self::BETA2, self.t);
                for (k, (x, &g)) in x.iter_mut().zip(grad).enumerate() {
                    self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * g;
                    self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * g * g;
                    *x += self.step_size * (self.m[k] / c1) / (math::sqrt(self.v[k] / c2) + Self::EPS);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub setting: SettingSpec,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub rho_initial: f64,
    pub rho_increment: f64,
    /// `ρ` grows by `rho_increment` after every this many epochs.
    pub rho_every_epochs: usize,
    /// Multipliers are updated once every this many minibatches.
    pub lagrange_period: usize,
    pub misreport_steps: usize,
    pub misreport_step_size: f64,
    pub misreport_rule: AscentRule,
    pub misreport_samples: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: TrainMode,
}

impl TrainConfig {
    /// Full-scale hyperparameters.
    pub fn full_scale(setting: SettingSpec) -> Self {
        Self {
            setting,
            hidden_layers: 2,
            hidden_width: 100,
            train_size: 640_000,
            test_size: 10_000,
            batch_size: 128,
            epochs: 80,
            rho_initial: 1.0,
            rho_increment: 1.0,
            rho_every_epochs: 2,
            lagrange_period: 100,
            misreport_steps: 25,
            misreport_step_size: 0.1,
            misreport_rule: AscentRule::Adam,
            misreport_samples: 100,
            learning_rate: 1e-3,
            seed: 0,
            mode: TrainMode::Gradient,
        }
    }

    /// 5 000 training profiles and 40 epochs. The multiplier period shrinks
    /// so that the multipliers move a comparable number of times per epoch.
    pub fn desk_scale(setting: SettingSpec) -> Self {
        Self { train_size: 5_000, epochs: 40, lagrange_period: 10, ..Self::full_scale(setting) }
    }

    pub fn arch(&self) -> Result<ArchSpec> {
        ArchSpec::for_setting(&self.setting, self.hidden_layers, self.hidden_width)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch()?;
        let positive = [
            ("train_size", self.train_size),
            ("test_size", self.test_size),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("rho_every_epochs", self.rho_every_epochs),
            ("lagrange_period", self.lagrange_period),
            ("misreport_steps", self.misreport_steps),
            ("misreport_samples", self.misreport_samples),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        let reals = [
            ("rho_initial", self.rho_initial),
            ("misreport_step_size", self.misreport_step_size),
            ("learning_rate", self.learning_rate),
        ];
        if let Some((name, v)) = reals.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
        }
        if !(self.rho_increment.is_finite() && self.rho_increment >= 0.0) {
            return Err(Error::Config(format!("rho_increment must be nonnegative, got {}", self.rho_increment)));
        }
        Ok(())
    }

    pub fn ascent(&self) -> AscentConfig {
        AscentConfig { rule: self.misreport_rule, steps: self.misreport_steps, step_size: self.misreport_step_size }
    }

    pub fn minibatches_per_epoch(&self) -> usize {
        self.train_size.div_ceil(self.batch_size)
    }
}

/// Multipliers, penalty and progress counters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LagrangeState {
    pub lambda: Vec<f64>,
    pub rho: f64,
    pub epoch: usize,
    pub minibatch: usize,
}

impl LagrangeState {
    pub fn new(n: usize, rho: f64) -> Self {
        Self { lambda: vec![0.0; n], rho, epoch: 0, minibatch: 0 }
    }

    /// Closes an epoch and applies the `ρ` schedule.
    pub fn finish_epoch(&mut self, config: &TrainConfig) {
        self.epoch += 1;
        if self.epoch % config.rho_every_epochs == 0 {
            self.rho += config.rho_increment;
        }
    }
}

/// `λ_i ← λ_i + ρ rgt_i`.
pub fn multiplier_update(state: &mut LagrangeState, regret: &[f64]) {
    for (l, r) in state.lambda.iter_mut().zip(regret) {
        *l += state.rho * r;
    }
}

/// Current misreport of every bidder in every training profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MisreportCache {
    pub n: usize,
    pub width: usize,
    data: Vec<f64>,
}

impl MisreportCache {
    /// Draws every entry from the setting's own distribution; entry
    /// `(ℓ, i)` depends only on `seed` and `ℓ`.
    pub fn from_distribution(spec: &SettingSpec, profiles: usize, seed: u64) -> Self {
        let (n, w) = (spec.n, spec.width());
        let mut data = vec![0.0; profiles * n * w];
        for (l, row) in data.chunks_mut(n * w).enumerate() {
            let mut rng = rng::indexed(seed, streams::MISREPORT_INIT, l as u64);
            for i in 0..n {
                spec.sample_bidder(i, &mut rng, &mut row[i * w..(i + 1) * w]);
            }
        }
        Self { n, width: w, data }
    }

    pub fn profiles(&self) -> usize {
        self.data.len() / (self.n * self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Misreport rows for the given profiles, `(profile, bidder)` order.
    pub fn gather(&self, profiles: &[usize]) -> Vec<f64> {
        let rw = self.n * self.width;
        let mut out = Vec::with_capacity(profiles.len() * rw);
        for &l in profiles {
            out.extend_from_slice(&self.data[l * rw..(l + 1) * rw]);
        }
        out
    }

    pub fn scatter(&mut self, profiles: &[usize], rows: &[f64]) {
        let rw = self.n * self.width;
        for (k, &l) in profiles.iter().enumerate() {
            self.data[l * rw..(l + 1) * rw].copy_from_slice(&rows[k * rw..(k + 1) * rw]);
        }
    }
}

/// `(profile, bidder)` row layout for `rows` truthful profiles.
pub fn focus_layout(rows: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    let profile = (0..rows * n).map(|k| k / n).collect();
    let focus = (0..rows * n).map(|k| k % n).collect();
    (profile, focus)
}

/// True valuation block of each focus bidder, `(profile, bidder)` order.
pub fn focus_values(truthful: &ProfileBatch) -> Vec<f64> {
    truthful.data().to_vec()
}

/// Projected ascent on every misreport in `misreports` (`(profile, bidder)`
/// rows of `truthful`).
pub fn optimize_misreports<M: Mechanism + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    truthful: &ProfileBatch,
    misreports: &mut [f64],
    ascent: &AscentConfig,
) -> Result<()> {
    let (n, w) = (truthful.n, truthful.width);
    let (profile, focus) = focus_layout(truthful.rows(), n);
    let values = focus_values(truthful);
    let mut state = Ascent::new(ascent.rule, ascent.step_size, misreports.len());
    for _ in 0..ascent.steps {
        let bids = substitute(truthful, &profile, &focus, misreports);
        let fu = mech.focus_utility(&values, &bids, &focus, true)?;
        state.apply(misreports, &fu.grad);
        for (k, block) in misreports.chunks_mut(w).enumerate() {
            spec.project(k % n, block);
        }
    }
    Ok(())
}

/// Per-row utility gains `u(misreport) − u(truth)`, `(profile, bidder)` order.
pub fn utility_gains<M: Mechanism + ?Sized>(mech: &M, truthful: &ProfileBatch, misreports: &[f64]) -> Result<Vec<f64>> {
    let n = truthful.n;
    let (profile, focus) = focus_layout(truthful.rows(), n);
    let values = focus_values(truthful);
    let truth = mech.outcomes(truthful)?.utilities(truthful.data());
    let bids = substitute(truthful, &profile, &focus, misreports);
    let fu = mech.focus_utility(&values, &bids, &focus, false)?;
    Ok(fu.utility.iter().zip(&truth).map(|(m, t)| m - t).collect())
}

/// Mean over profiles of the per-row gains, floored at zero, per bidder.
pub fn mean_floored(gains: &[f64], n: usize) -> Vec<f64> {
    let rows = gains.len() / n;
    let mut out = vec![0.0; n];
    for row in gains.chunks(n) {
        for (o, g) in out.iter_mut().zip(row) {
            *o += g.max(0.0);
        }
    }
    for o in &mut out {
        *o /= rows as f64;
    }
    out
}

/// Empirical ex post regret of each bidder at the given misreports.
pub fn empirical_regret<M: Mechanism + ?Sized>(mech: &M, truthful: &ProfileBatch, misreports: &[f64]) -> Result<Vec<f64>> {
    Ok(mean_floored(&utility_gains(mech, truthful, misreports)?, truthful.n))
}

/// For every `(profile, bidder)`, the best of `samples` misreports drawn
/// uniformly from the bidder's support, together with its gain.
pub fn best_sampled_misreports<M: Mechanism + ?Sized, R: Rng + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    truthful: &ProfileBatch,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, w) = (truthful.n, truthful.width);
    let pairs = truthful.rows() * n;
    let mut best = truthful.data().to_vec();
    let mut best_gain = vec![0.0; pairs];
    let truth = mech.outcomes(truthful)?.utilities(truthful.data());
    let (profile, focus) = focus_layout(truthful.rows(), n);
    let values = focus_values(truthful);
    let mut draw = vec![0.0; pairs * w];
    for _ in 0..samples {
        for (k, block) in draw.chunks_mut(w).enumerate() {
            spec.sample_bidder_uniform(k % n, rng, block);
        }
        let bids = substitute(truthful, &profile, &focus, &draw);
        let fu = mech.focus_utility(&values, &bids, &focus, false)?;
        for k in 0..pairs {
            let gain = fu.utility[k] - truth[k];
            if gain > best_gain[k] {
                best_gain[k] = gain;
                best[k * w..(k + 1) * w].copy_from_slice(&draw[k * w..(k + 1) * w]);
            }
        }
    }
    Ok((best, best_gain))
}

/// Regret estimated from `samples` uniform misreports per bidder and profile.
pub fn sample_based_regret<M: Mechanism + ?Sized, R: Rng + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    truthful: &ProfileBatch,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::Config("at least one misreport sample is required".into()));
    }
    let (_, gains) = best_sampled_misreports(mech, spec, truthful, samples, rng)?;
    Ok(mean_floored(&gains, truthful.n))
}

/// Loss value and batch statistics of one Lagrangian evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub revenue: f64,
    pub regret: Vec<f64>,
}

/// `C_ρ` and its gradient with respect to every parameter, misreports fixed.
pub fn lagrangian_and_grad(
    net: &RegretNet,
    truthful: &ProfileBatch,
    misreports: &[f64],
    state: &LagrangeState,
) -> Result<(StepStats, Gradients)> {
    let (n, w) = (net.arch.n, net.arch.width());
    let b = truthful.rows();
    let (profile, focus) = focus_layout(b, n);
    let mis = substitute(truthful, &profile, &focus, misreports);
    let mut masked = vec![0.0; b * n * n * w];
    let mut onehot = vec![0.0; b * n * n];
    for k in 0..b * n {
        let (l, i) = (k / n, k % n);
        let src = &truthful.row(l)[i * w..(i + 1) * w];
        masked[k * n * w + i * w..k * n * w + (i + 1) * w].copy_from_slice(src);
        onehot[k * n + i] = 1.0;
    }
    let bids_t = truthful.to_tensor();
    let mis_t = mis.to_tensor();
    let masked_t = Tensor::matrix(b * n, n * w, masked)?;
    let onehot_t = Tensor::matrix(b * n, n, onehot)?;
    let lambda_t = Tensor::vector(state.lambda.clone());

    let mut g = Graph::new();
    let x = g.input("bids");
    let truth = build_network(&mut g, &net.arch, x);
    let xm = g.input("mis_bids");
    let misn = build_network(&mut g, &net.arch, xm);

    let zb = g.mul(truth.allocation, x);
    let zb = g.reshape_rows(zb, &[n, w]);
    let value = g.sum_axis(zb, 2);
    let u_true = g.sub(value, truth.payments);
    let u_mis = focus_utility_node(&mut g, misn, "mis_values", "mis_onehot");
    let u_mis = g.reshape(u_mis, &[b, n]);
    let gain = g.sub(u_mis, u_true);
    let gain = g.relu(gain);
    let rgt_sum = g.sum_axis(gain, 0);
    let rgt = g.scale(rgt_sum, 1.0 / b as f64);

    let total_pay = g.sum(truth.payments);
    let revenue = g.scale(total_pay, 1.0 / b as f64);
    let lam = g.input("lambda");
    let lin = g.dot(lam, rgt);
    let sq = g.dot(rgt, rgt);
    let quad = g.scale(sq, 0.5 * state.rho);
    let neg_rev = g.neg(revenue);
    let partial = g.add(neg_rev, lin);
    let loss = g.add(partial, quad);

    let mut bind = Bindings::new()
        .with("bids", &bids_t)
        .with("mis_bids", &mis_t)
        .with("mis_values", &masked_t)
        .with("mis_onehot", &onehot_t)
        .with("lambda", &lambda_t);
    net.params.bind(&mut bind);
    let ev = g.forward(&bind, &[loss, revenue, rgt])?;
    let names = net.params.names();
    let grads = ev.backward(loss, &names)?;
    let stats = StepStats {
        loss: ev.value(loss).item().expect("scalar"),
        revenue: ev.value(revenue).item().expect("scalar"),
        regret: ev.value(rgt).data().to_vec(),
    };
    Ok((stats, grads))
}

/// One Adam step on `C_ρ` at fixed misreports.
pub fn lagrangian_step(
    net: &mut RegretNet,
    adam: &mut AdamState,
    truthful: &ProfileBatch,
    misreports: &[f64],
    state: &LagrangeState,
) -> Result<StepStats> {
    let (stats, grads) = lagrangian_and_grad(net, truthful, misreports, state)?;
    if !stats.loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {} at minibatch {}", stats.loss, state.minibatch)));
    }
    if let Some((name, _)) = grads.iter().find(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of {name} at minibatch {}", state.minibatch)));
    }
    adam.step(&mut net.params, &grads)?;
    Ok(stats)
}

/// Monotonic wall clock, supplied by the caller.
pub trait Clock {
    fn elapsed_s(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_s(&self) -> f64 {
        0.0
    }
}

/// Averages over the minibatches of one epoch.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub rev: f64,
    pub rgt_mean: f64,
    pub rgt_per_bidder: Vec<f64>,
    pub lambda: Vec<f64>,
    pub rho: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub net: RegretNet,
    pub state: LagrangeState,
    pub history: Vec<EpochRecord>,
}

/// A failed run with the last parameters that produced finite values.
#[derive(Debug)]
pub struct TrainAbort {
    pub error: Error,
    pub last_good: Trained,
}

/// Training profiles of a run, drawn from the setting with the run's seed.
pub fn training_set(config: &TrainConfig) -> ProfileBatch {
    config.setting.sample_batch(config.train_size, &mut rng::stream(config.seed, streams::TRAIN_DATA))
}

/// Held-out profiles of a run.
pub fn test_set(config: &TrainConfig) -> ProfileBatch {
    config.setting.sample_batch(config.test_size, &mut rng::stream(config.seed, streams::TEST_DATA))
}

/// Why a run stopped early.
#[derive(Debug)]
pub enum TrainError {
    /// The configuration was rejected before training started.
    Invalid(Error),
    /// A step produced non-finite values or failed.
    Aborted(Box<TrainAbort>),
}

impl TrainError {
    pub fn error(&self) -> &Error {
        match self {
            TrainError::Invalid(e) => e,
            TrainError::Aborted(a) => &a.error,
        }
    }
}

impl From<Error> for TrainError {
    fn from(e: Error) -> Self {
        TrainError::Invalid(e)
    }
}

pub fn train(config: &TrainConfig, clock: &dyn Clock) -> core::result::Result<Trained, TrainError> {
    train_with(config, clock, &mut |_| {})
}

/// Runs the full schedule, calling `on_epoch` after every epoch.
pub fn train_with(
    config: &TrainConfig,
    clock: &dyn Clock,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> core::result::Result<Trained, TrainError> {
    config.validate()?;
    let arch = config.arch()?;
    let spec = &config.setting;
    let data = training_set(config);
    let mut cache = MisreportCache::from_distribution(spec, config.train_size, config.seed);
    let mut net = RegretNet::init(arch, config.seed);
    let mut adam = AdamState::new(config.learning_rate);
    let mut state = LagrangeState::new(arch.n, config.rho_initial);
    let mut history = Vec::with_capacity(config.epochs);
    let mut shuffle = rng::stream(config.seed, streams::SHUFFLE);
    let mut sampler = rng::stream(config.seed, streams::MISREPORT_SAMPLES);
    let mut order: Vec<usize> = (0..config.train_size).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut rev = 0.0;
        let mut rgt = vec![0.0; arch.n];
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let checkpoint = net.params.clone();
            let step = (|| -> Result<()> {
                let truthful = data.select(chunk);
                let misreports = match config.mode {
                    TrainMode::Gradient => {
                        let mut mis = cache.gather(chunk);
                        optimize_misreports(&net, spec, &truthful, &mut mis, &config.ascent())?;
                        cache.scatter(chunk, &mis);
                        mis
                    }
                    TrainMode::SampleBased => {
                        best_sampled_misreports(&net, spec, &truthful, config.misreport_samples, &mut sampler)?.0
                    }
                };
                let stats = lagrangian_step(&mut net, &mut adam, &truthful, &misreports, &state)?;
                rev += stats.revenue;
                for (a, r) in rgt.iter_mut().zip(&stats.regret) {
                    *a += r;
                }
                state.minibatch += 1;
                if state.minibatch % config.lagrange_period == 0 {
                    let now = empirical_regret(&net, &truthful, &misreports)?;
                    multiplier_update(&mut state, &now);
                }
                if !net.params.is_finite() {
                    return Err(Error::NonFinite(format!("parameters after minibatch {}", state.minibatch)));
                }
                Ok(())
            })();
            if let Err(error) = step {
                net.params = checkpoint;
                return Err(TrainError::Aborted(Box::new(TrainAbort {
                    error,
                    last_good: Trained { net, state, history },
                })));
            }
            batches += 1;
        }
        let inv = 1.0 / batches as f64;
        let rgt: Vec<f64> = rgt.iter().map(|r| r * inv).collect();
        let record = EpochRecord {
            epoch: state.epoch + 1,
            rev: rev * inv,
            rgt_mean: rgt.iter().sum::<f64>() / arch.n as f64,
            rgt_per_bidder: rgt,
            lambda: state.lambda.clone(),
            rho: state.rho,
            wall_time_s: clock.elapsed_s(),
        };
        state.finish_epoch(config);
        on_epoch(&record);
        history.push(record);
    }
    Ok(Trained { net, state, history })
}
