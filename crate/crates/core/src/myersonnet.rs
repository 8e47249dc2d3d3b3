//! MyersonNet: single-item auctions built from monotone virtual-value
//! transforms and a second-price auction with zero reserve in transformed
//! space.
//!
//! Each bidder's transform is `φ(b) = min_k max_j (e^{α_kj} b + β_kj)`, with
//! closed-form inverse `φ⁻¹(y) = max_k min_j e^{−α_kj} (y − β_kj)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::diffcore::{AdamState, Bindings, Graph, NodeId, ParamStore, Tensor};
use crate::math;
use crate::mechanism::{BatchOutcome, Mechanism};
use crate::rng::{self, streams};
use crate::valuations::{ProfileBatch, SettingSpec, ValuationClass};
use crate::{Error, Result};

/// Bound on `|α|`.
pub const ALPHA_BOUND: f64 = 10.0;

/// `K` groups of `J` increasing lines.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VirtualTransform {
    pub groups: usize,
    pub lines: usize,
    /// `K × J` row-major.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl VirtualTransform {
    pub fn new(groups: usize, lines: usize, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if groups == 0 || lines == 0 || alpha.len() != groups * lines || beta.len() != groups * lines {
            return Err(Error::InvalidTensor(format!("transform needs {groups} × {lines} slopes and intercepts")));
        }
        let alpha = alpha.into_iter().map(|a| a.clamp(-ALPHA_BOUND, ALPHA_BOUND)).collect();
        Ok(Self { groups, lines, alpha, beta })
    }

    pub fn identity() -> Self {
        Self { groups: 1, lines: 1, alpha: vec![0.0], beta: vec![0.0] }
    }

    /// A single line `slope · b + intercept`.
    pub fn linear(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope > 0.0) {
            return Err(Error::Config("slopes must be positive".into()));
        }
        Self::new(1, 1, vec![math::ln(slope)], vec![intercept])
    }

    pub fn phi(&self, b: f64) -> f64 {
        let mut out = f64::INFINITY;
        for k in 0..self.groups {
            let mut inner = f64::NEG_INFINITY;
            for j in 0..self.lines {
                let idx = k * self.lines + j;
                inner = inner.max(math::exp(self.alpha[idx]) * b + self.beta[idx]);
            }
            out = out.min(inner);
        }
        out
    }

    pub fn phi_inverse(&self, y: f64) -> f64 {
        let mut out = f64::NEG_INFINITY;
        for k in 0..self.groups {
            let mut inner = f64::INFINITY;
            for j in 0..self.lines {
                let idx = k * self.lines + j;
                inner = inner.min(math::exp(-self.alpha[idx]) * (y - self.beta[idx]));
            }
            out = out.max(inner);
        }
        out
    }

    /// Breakpoints of the piecewise-linear transform inside `[lo, hi]` as
    /// `(b, φ(b))`, including both ends.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut xs = vec![lo, hi];
        let n = self.alpha.len();
        for a in 0..n {
            for c in a + 1..n {
                let (sa, sc) = (math::exp(self.alpha[a]), math::exp(self.alpha[c]));
                if (sa - sc).abs() > 1e-15 {
                    let x = (self.beta[c] - self.beta[a]) / (sa - sc);
                    if x > lo && x < hi {
                        xs.push(x);
                    }
                }
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        // Keep points where the active slope changes.
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &x in &xs {
            let y = self.phi(x);
            if let [.., (x1, y1), (x0, y0)] = out.as_slice() {
                let s0 = (y0 - y1) / (x0 - x1);
                let s1 = (y - y0) / (x - x0);
                if (s0 - s1).abs() < 1e-12 {
                    out.pop();
                }
            }
            if out.last().map(|(px, _)| (x - px).abs() > 1e-15).unwrap_or(true) {
                out.push((x, y));
            }
        }
        out
    }
}

/// Result of the exact auction on virtual bids.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaOutcome {
    pub winner: Option<usize>,
    /// Conditional payment in virtual space for every bidder:
    /// `max{max_{j≠i} b̄_j, 0}`.
    pub virtual_payments: Vec<f64>,
}

/// Second-price auction with zero reserve on virtual bids; lowest index wins
/// ties.
pub fn spa0_exact(virtual_bids: &[f64]) -> SpaOutcome {
    let mut winner = None;
    let mut best = 0.0;
    for (i, &b) in virtual_bids.iter().enumerate() {
        if b > best {
            best = b;
            winner = Some(i);
        }
    }
    let virtual_payments = (0..virtual_bids.len())
        .map(|i| virtual_bids.iter().enumerate().filter(|(j, _)| *j != i).fold(0.0f64, |a, (_, &b)| a.max(b)))
        .collect();
    SpaOutcome { winner, virtual_payments }
}

/// Softmax allocation over bidders and a dummy with virtual bid 0.
pub fn spa0_soft(virtual_bids: &[f64], kappa: f64) -> Vec<f64> {
    let mx = virtual_bids.iter().fold(0.0f64, |a, &b| a.max(b));
    let e: Vec<f64> = virtual_bids.iter().chain(core::iter::once(&0.0)).map(|&b| math::exp(kappa * (b - mx))).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Per-bidder transforms with the exact auction rule.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MyersonNet {
    pub transforms: Vec<VirtualTransform>,
}

impl MyersonNet {
    pub fn identity(n: usize) -> Self {
        Self { transforms: vec![VirtualTransform::identity(); n] }
    }

    /// `(winner, price)` on bids `b`; the price is in value space.
    pub fn run(&self, b: &[f64]) -> (Option<usize>, f64) {
        let virt: Vec<f64> = self.transforms.iter().zip(b).map(|(t, &x)| t.phi(x)).collect();
        let out = spa0_exact(&virt);
        match out.winner {
            Some(w) => (Some(w), self.transforms[w].phi_inverse(out.virtual_payments[w])),
            None => (None, 0.0),
        }
    }

    pub fn to_params(&self) -> ParamStore {
        let mut p = ParamStore::new();
        for (i, t) in self.transforms.iter().enumerate() {
            p.insert(&format!("myerson.b{i}.alpha"), Tensor::matrix(t.groups, t.lines, t.alpha.clone()).expect("shape"));
            p.insert(&format!("myerson.b{i}.beta"), Tensor::matrix(t.groups, t.lines, t.beta.clone()).expect("shape"));
        }
        p
    }

    pub fn from_params(p: &ParamStore, n: usize, groups: usize, lines: usize) -> Result<Self> {
        let transforms = (0..n)
            .map(|i| {
                let a = p.get(&format!("myerson.b{i}.alpha")).ok_or_else(|| Error::InvalidTensor("alpha".into()))?;
                let b = p.get(&format!("myerson.b{i}.beta")).ok_or_else(|| Error::InvalidTensor("beta".into()))?;
                VirtualTransform::new(groups, lines, a.data().to_vec(), b.data().to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(Self { transforms })
    }
}

impl Mechanism for MyersonNet {
    fn n(&self) -> usize {
        self.transforms.len()
    }

    fn width(&self) -> usize {
        1
    }

    fn class(&self) -> ValuationClass {
        ValuationClass::Additive
    }

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        let n = self.n();
        if bids.n != n || bids.width != 1 {
            return Err(Error::InvalidTensor(format!("expected {n} single-item bids")));
        }
        let mut out = BatchOutcome::zeros(bids.rows(), n, 1);
        for r in 0..bids.rows() {
            if let (Some(w), price) = self.run(bids.row(r)) {
                out.allocation[r * n + w] = 1.0;
                out.payments[r * n + w] = price;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MyersonConfig {
    pub groups: usize,
    pub lines: usize,
    pub kappa: f64,
    pub learning_rate: f64,
    pub train_size: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
}

impl MyersonConfig {
    pub fn standard() -> Self {
        Self { groups: 5, lines: 10, kappa: 1e3, learning_rate: 1e-2, train_size: 1000, batch_size: 1000, steps: 20_000, seed: 0 }
    }
}

/// `[B]` virtual values of one bidder's column `b` (`[B, 1, 1]`).
fn phi_node(g: &mut Graph, b: NodeId, i: usize) -> (NodeId, NodeId, NodeId) {
    let alpha = g.input(&format!("myerson.b{i}.alpha"));
    let beta = g.input(&format!("myerson.b{i}.beta"));
    let slope = g.exp(alpha);
    let lin = g.mul(b, slope);
    let lin = g.add(lin, beta);
    let inner = g.max_axis(lin, 2);
    (g.min_axis(inner, 1), alpha, beta)
}

fn phi_inv_node(g: &mut Graph, y: NodeId, alpha: NodeId, beta: NodeId) -> NodeId {
    let neg = g.neg(alpha);
    let inv_slope = g.exp(neg);
    let shifted = g.sub(y, beta);
    let lines = g.mul(shifted, inv_slope);
    let inner = g.min_axis(lines, 2);
    g.max_axis(inner, 1)
}

/// Negated smoothed revenue on `batch` and its gradient.
pub fn smoothed_loss_and_grad(
    params: &ParamStore,
    batch: &ProfileBatch,
    kappa: f64,
) -> Result<(f64, crate::diffcore::Gradients)> {
    let (n, rows) = (batch.n, batch.rows());
    let bids = Tensor::new(vec![rows, n], batch.data().to_vec())?;
    let mut g = Graph::new();
    let x = g.input("bids");
    let mut phis = Vec::with_capacity(n);
    let mut handles = Vec::with_capacity(n);
    for i in 0..n {
        let col = g.slice(x, 1, i, 1);
        let col = g.reshape_rows(col, &[1, 1]);
        let (phi, a, b) = phi_node(&mut g, col, i);
        let phi = g.reshape_rows(phi, &[1]);
        phis.push(phi);
        handles.push((a, b));
    }
    let all = g.concat(&phis, 1);
    let sharp = g.scale(all, kappa);
    let soft = softmax_with_zero(&mut g, sharp, n);
    let mut pays = Vec::with_capacity(n);
    for (i, &(a, b)) in handles.iter().enumerate() {
        let others: Vec<Option<usize>> = (0..n).filter(|&j| j != i).map(Some).collect();
        let threshold = if others.is_empty() {
            let zero = g.scale(phis[i], 0.0);
            g.reshape_rows(zero, &[])
        } else {
            let rest = g.gather(all, others, 0.0);
            let rest = g.pad(rest, 1, 0.0);
            g.max_axis(rest, 1)
        };
        let y = g.reshape_rows(threshold, &[1, 1]);
        let t = phi_inv_node(&mut g, y, a, b);
        pays.push(g.reshape_rows(t, &[1]));
    }
    let pay = g.concat(&pays, 1);
    let revenue = g.mul(soft, pay);
    let total = g.sum(revenue);
    let loss = g.scale(total, -1.0 / rows as f64);
    let mut bind = Bindings::new().with("bids", &bids);
    params.bind(&mut bind);
    let ev = g.forward(&bind, &[loss])?;
    let value = ev.value(loss).item().expect("scalar");
    let grads = ev.backward(loss, &params.names())?;
    Ok((value, grads))
}

fn softmax_with_zero(g: &mut Graph, x: NodeId, n: usize) -> NodeId {
    let padded = g.pad(x, 1, 0.0);
    let soft = g.softmax(padded, 1);
    g.slice(soft, 1, 0, n)
}

/// Trains one transform per bidder on samples of a single-item setting.
pub fn train_myersonnet(spec: &SettingSpec, config: &MyersonConfig) -> Result<(MyersonNet, Vec<f64>)> {
    if spec.m != 1 || spec.class != ValuationClass::Additive {
        return Err(Error::Unsupported("MyersonNet needs a single-item setting".into()));
    }
    if config.groups == 0 || config.lines == 0 || config.train_size == 0 || config.batch_size == 0 {
        return Err(Error::Config("groups, lines, train_size and batch_size must be positive".into()));
    }
    let n = spec.n;
    let mut rng = rng::stream(config.seed, streams::PARAM_INIT);
    let init: Vec<VirtualTransform> = (0..n)
        .map(|i| {
            let scale = spec.item_dist(i, 0).map(|d| d.mean()).unwrap_or(1.0);
            let len = config.groups * config.lines;
            let alpha = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let beta = (0..len).map(|_| scale * rng.gen_range(-1.0..0.0)).collect();
            VirtualTransform::new(config.groups, config.lines, alpha, beta)
        })
        .collect::<Result<_>>()?;
    let mut params = MyersonNet { transforms: init }.to_params();
    let data = spec.sample_batch(config.train_size, &mut rng::stream(config.seed, streams::TRAIN_DATA));
    let mut adam = AdamState::new(config.learning_rate);
    let mut losses = Vec::new();
    let batches = config.train_size.div_ceil(config.batch_size);
    let mut order: Vec<usize> = (0..config.train_size).collect();
    let mut shuffle = rng::stream(config.seed, streams::SHUFFLE);
    for step in 0..config.steps {
        let k = step % batches;
        if k == 0 && batches > 1 {
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle);
        }
        let end = ((k + 1) * config.batch_size).min(config.train_size);
        let batch = data.select(&order[k * config.batch_size..end]);
        let (loss, grads) = smoothed_loss_and_grad(&params, &batch, config.kappa)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("MyersonNet loss is {loss} at step {step}")));
        }
        adam.step(&mut params, &grads)?;
        for (name, t) in params.iter_mut() {
            if name.ends_with(".alpha") {
                for a in t.data_mut() {
                    *a = a.clamp(-ALPHA_BOUND, ALPHA_BOUND);
                }
            }
        }
        losses.push(loss);
    }
    let net = MyersonNet::from_params(&params, n, config.groups, config.lines)?;
    Ok((net, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_transform() {
        let t = VirtualTransform::identity();
        assert_eq!(t.phi(0.37), 0.37);
        assert_eq!(t.phi_inverse(0.37), 0.37);
    }

    #[test]
    fn uniform_virtual_value_and_reserve() {
        let t = VirtualTransform::linear(2.0, -1.0).unwrap();
        assert_abs_diff_eq!(t.phi(0.8), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(t.phi_inverse(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn spa0_rules() {
        let none = spa0_exact(&[-1.0, -2.0]);
        assert_eq!(none.winner, None);
        let out = spa0_exact(&[0.5, 0.2, -0.1]);
        assert_eq!(out.winner, Some(0));
        assert_abs_diff_eq!(out.virtual_payments[0], 0.2);
    }

    #[test]
    fn soft_allocation() {
        let even = spa0_soft(&[0.0, 0.0, 0.0], 1e3);
        for p in even {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
        let lead = spa0_soft(&[0.6, 0.3, 0.1], 1e3);
        assert!(lead[0] > 0.999);
    }

    #[test]
    fn alpha_is_clamped() {
        let t = VirtualTransform::new(1, 2, vec![50.0, -50.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(t.alpha, vec![ALPHA_BOUND, -ALPHA_BOUND]);
    }
}
