//! RochetNet: a single-bidder menu network.
//!
//! The induced utility is `u(v) = max{max_j (w_j · v + β_j), 0}`; each
//! linear piece is a menu option with allocation `w_j` and price `−β_j`.
//! Slopes are `w = sigmoid(α)`, so every option is a lottery over items. In
//! unit-demand mode an option's slopes are rescaled to sum to at most one:
//! `w_j = sigmoid(α_j) · sigmoid(σ_j) / max(1, Σ_k sigmoid(α_jk))`.
//!
//! Parameters are stored transposed (`menu.alpha` is `m × J`) so scores are a
//! single `B × m` by `m × J` product.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::diffcore::{AdamState, Bindings, Graph, NodeId, ParamStore, Tensor};
use crate::math;
use crate::mechanism::{BatchOutcome, Mechanism};
use crate::rng::{self, streams};
use crate::valuations::{ProfileBatch, SettingSpec, ValuationClass};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MenuMode {
    Additive,
    UnitDemand,
}

/// One menu option.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MenuEntry {
    pub allocation: Vec<f64>,
    /// Utility intercept `β_j`; the price is `−β_j`.
    pub intercept: f64,
}

impl MenuEntry {
    pub fn price(&self) -> f64 {
        -self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenuNet {
    pub m: usize,
    pub mode: MenuMode,
    pub kappa: f64,
    pub params: ParamStore,
    /// Cached effective menu, refreshed by [`MenuNet::refresh`].
    menu: Vec<MenuEntry>,
}

fn mode_for(class: ValuationClass) -> Result<MenuMode> {
    match class {
        ValuationClass::Additive => Ok(MenuMode::Additive),
        ValuationClass::UnitDemand => Ok(MenuMode::UnitDemand),
        ValuationClass::Combinatorial => Err(Error::Unsupported("menu networks take item values".into())),
    }
}

impl MenuNet {
    /// Random menu of `entries` options. Slopes start near `1/2`, prices
    /// spread over `[0, price_scale]`.
    pub fn init(m: usize, entries: usize, mode: MenuMode, kappa: f64, price_scale: f64, seed: u64) -> Result<Self> {
        if m == 0 || entries == 0 || !(kappa > 0.0) {
            return Err(Error::Config(format!("menu needs m, J, κ > 0 (got {m}, {entries}, {kappa})")));
        }
        let mut rng = rng::stream(seed, streams::PARAM_INIT);
        let alpha: Vec<f64> = (0..m * entries).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..entries).map(|_| -price_scale * rng.gen::<f64>()).collect();
        let mut params = ParamStore::new();
        params.insert("menu.alpha", Tensor::matrix(m, entries, alpha)?);
        params.insert("menu.beta", Tensor::vector(beta));
        if mode == MenuMode::UnitDemand {
            let sigma: Vec<f64> = (0..entries).map(|_| rng.gen_range(-1.0..1.0)).collect();
            params.insert("menu.scale", Tensor::vector(sigma));
        }
        Self::from_params(m, mode, kappa, params)
    }

    pub fn from_params(m: usize, mode: MenuMode, kappa: f64, params: ParamStore) -> Result<Self> {
        let alpha = params.get("menu.alpha").ok_or_else(|| Error::InvalidTensor("missing menu.alpha".into()))?;
        if alpha.rank() != 2 || alpha.shape()[0] != m {
            return Err(Error::InvalidTensor(format!("menu.alpha must be {m} × J, got {:?}", alpha.shape())));
        }
        let j = alpha.shape()[1];
        let beta = params.get("menu.beta").ok_or_else(|| Error::InvalidTensor("missing menu.beta".into()))?;
        if beta.shape() != [j] {
            return Err(Error::InvalidTensor(format!("menu.beta must have {j} entries")));
        }
        if mode == MenuMode::UnitDemand && params.get("menu.scale").map(|t| t.shape() != [j]).unwrap_or(true) {
            return Err(Error::InvalidTensor(format!("unit-demand menus need menu.scale with {j} entries")));
        }
        let mut net = Self { m, mode, kappa, params, menu: Vec::new() };
        net.refresh();
        Ok(net)
    }

    pub fn entries(&self) -> usize {
        self.params.get("menu.beta").map(|t| t.len()).unwrap_or(0)
    }

    pub fn menu(&self) -> &[MenuEntry] {
        &self.menu
    }

    /// Recomputes the effective menu after a parameter change.
    pub fn refresh(&mut self) {
        let j = self.entries();
        let alpha = self.params.get("menu.alpha").expect("validated").data();
        let beta = self.params.get("menu.beta").expect("validated").data();
        let scale = self.params.get("menu.scale").map(|t| t.data());
        self.menu = (0..j)
            .map(|e| {
                let mut w: Vec<f64> = (0..self.m).map(|k| math::sigmoid(alpha[k * j + e])).collect();
                if let (MenuMode::UnitDemand, Some(s)) = (self.mode, scale) {
                    let factor = math::sigmoid(s[e]) / w.iter().sum::<f64>().max(1.0);
                    for x in &mut w {
                        *x *= factor;
                    }
                }
                MenuEntry { allocation: w, intercept: beta[e] }
            })
            .collect();
    }

    /// Index of the chosen option (lowest index among ties), or `None` for
    /// the zero option, together with the utility.
    pub fn choose(&self, v: &[f64]) -> (Option<usize>, f64) {
        let mut best = (None, 0.0);
        let mut best_u = f64::NEG_INFINITY;
        for (e, entry) in self.menu.iter().enumerate() {
            let u = entry.allocation.iter().zip(v).map(|(w, x)| w * x).sum::<f64>() + entry.intercept;
            if u > best_u {
                best_u = u;
                best = (Some(e), u);
            }
        }
        if best_u < 0.0 {
            return (None, 0.0);
        }
        best
    }

    pub fn utility(&self, v: &[f64]) -> f64 {
        self.choose(v).1
    }

    /// Allocation and payment of the option chosen at bid `b`.
    pub fn mechanism(&self, b: &[f64]) -> (Vec<f64>, f64) {
        match self.choose(b).0 {
            Some(e) => (self.menu[e].allocation.clone(), self.menu[e].price()),
            None => (vec![0.0; self.m], 0.0),
        }
    }

    /// Appends the effective slopes (`m × J`) to `g`.
    fn slopes(&self, g: &mut Graph) -> NodeId {
        let alpha = g.input("menu.alpha");
        let s = g.sigmoid(alpha);
        match self.mode {
            MenuMode::Additive => s,
            MenuMode::UnitDemand => {
                let total = g.sum_axis(s, 0);
                let one = g.scalar(1.0);
                let denom = g.maximum(total, one);
                let raw = g.input("menu.scale");
                let scale = g.sigmoid(raw);
                let factor = g.div(scale, denom);
                g.mul(s, factor)
            }
        }
    }

    /// Negated mean revenue with softmax-weighted gradients, and its
    /// parameter gradients.
    pub fn smoothed_loss_and_grad(&self, batch: &ProfileBatch) -> Result<(f64, crate::diffcore::Gradients)> {
        let (loss, grads) = self.smoothed_loss_inner(batch, true)?;
        Ok((loss, grads.expect("requested")))
    }

    pub fn smoothed_revenue_loss(&self, batch: &ProfileBatch) -> Result<f64> {
        Ok(self.smoothed_loss_inner(batch, false)?.0)
    }

    fn smoothed_loss_inner(&self, batch: &ProfileBatch, grad: bool) -> Result<(f64, Option<crate::diffcore::Gradients>)> {
        if batch.n != 1 || batch.width != self.m {
            return Err(Error::InvalidTensor(format!("menu expects one bidder with {} items", self.m)));
        }
        let b = batch.rows();
        let v_t = batch.to_tensor();
        let mut g = Graph::new();
        let v = g.input("v");
        let w = self.slopes(&mut g);
        let beta = g.input("menu.beta");
        let vw = g.matmul(v, w);
        let scores = g.add(vw, beta);
        let with_zero = g.pad(scores, 1, 0.0);
        let u = g.max_axis(with_zero, 1);
        let sharp = g.scale(with_zero, self.kappa);
        let weights = g.softmax(sharp, 1);
        let weights = g.slice(weights, 1, 0, self.entries());
        // ∇̃u · v = Σ_j softmax_j · (w_j · v).
        let weighted = g.mul(weights, vw);
        let grad_dot_v = g.sum_axis(weighted, 1);
        let pay = g.sub(grad_dot_v, u);
        let total = g.sum(pay);
        let loss = g.scale(total, -1.0 / b as f64);
        let mut bind = Bindings::new().with("v", &v_t);
        self.params.bind(&mut bind);
        let ev = g.forward(&bind, &[loss])?;
        let value = ev.value(loss).item().expect("scalar");
        let grads = if grad { Some(ev.backward(loss, &self.params.names())?) } else { None };
        Ok((value, grads))
    }
}

impl Mechanism for MenuNet {
    fn n(&self) -> usize {
        1
    }

    fn width(&self) -> usize {
        self.m
    }

    fn class(&self) -> ValuationClass {
        match self.mode {
            MenuMode::Additive => ValuationClass::Additive,
            MenuMode::UnitDemand => ValuationClass::UnitDemand,
        }
    }

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        if bids.n != 1 || bids.width != self.m {
            return Err(Error::InvalidTensor(format!("menu expects one bidder with {} items", self.m)));
        }
        let mut out = BatchOutcome::zeros(bids.rows(), 1, self.m);
        for r in 0..bids.rows() {
            let (z, p) = self.mechanism(bids.row(r));
            out.allocation[r * self.m..(r + 1) * self.m].copy_from_slice(&z);
            out.payments[r] = p;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RochetConfig {
    pub entries: usize,
    pub kappa: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl RochetConfig {
    pub fn full_scale() -> Self {
        Self { entries: 1000, kappa: 1000.0, learning_rate: 1e-3, batch_size: 128, train_size: 640_000, epochs: 1, seed: 0 }
    }
}

/// Trains a menu on samples from a single-bidder setting and returns it
/// with the loss after each epoch.
pub fn train_rochetnet(spec: &SettingSpec, config: &RochetConfig) -> Result<(MenuNet, Vec<f64>)> {
    if spec.n != 1 {
        return Err(Error::Unsupported(format!("menu networks need a single bidder, setting has {}", spec.n)));
    }
    if config.batch_size == 0 || config.train_size == 0 || config.epochs == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Config("batch_size, train_size, epochs and learning_rate must be positive".into()));
    }
    let mode = mode_for(spec.class)?;
    let price_scale = spec.support_box(0).iter().map(|&(_, hi)| if hi.is_finite() { hi } else { 1.0 }).sum::<f64>();
    let mut net = MenuNet::init(spec.m, config.entries, mode, config.kappa, price_scale, config.seed)?;
    let data = spec.sample_batch(config.train_size, &mut rng::stream(config.seed, streams::TRAIN_DATA));
    let mut adam = AdamState::new(config.learning_rate);
    let mut order: Vec<usize> = (0..config.train_size).collect();
    let mut shuffle = rng::stream(config.seed, streams::SHUFFLE);
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut sum = 0.0;
        let mut count = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = data.select(chunk);
            let (loss, grads) = net.smoothed_loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("menu loss is {loss}")));
            }
            adam.step(&mut net.params, &grads)?;
            sum += loss;
            count += 1;
        }
        net.refresh();
        losses.push(sum / count as f64);
    }
    net.refresh();
    Ok((net, losses))
}
