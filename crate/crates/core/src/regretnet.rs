//! RegretNet: allocation and payment networks that are feasible and
//! individually rational by construction.
//!
//! Both networks are fully connected tanh MLPs over the flattened bid
//! profile. The allocation network ends in one or more score heads that are
//! turned into feasible allocations:
//!
//! * additive bidders: a softmax over bidders (plus a dummy) for every item;
//! * unit-demand bidders: the elementwise minimum of a softmax over bidders
//!   and a softmax over items, each with a dummy, which is doubly stochastic;
//! * combinatorial bidders: the minimum of a softmax over each bidder's
//!   bundles and, for every item, a softmax over all (bidder, bundle) pairs
//!   that contain the item.
//!
//! Dummy scores are the constant 0. The payment network produces fractions
//! `p̃ ∈ (0, 1)` and charges `p_i = p̃_i ⟨b_i, z_i⟩`.
//!
//! Parameter names: `alloc.l{k}.w`, `alloc.l{k}.b` for hidden layers,
//! `alloc.h{h}.w`, `alloc.h{h}.b` for score heads, and `pay.l{k}.*`,
//! `pay.out.*` for the payment network. Weights are `in × out`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::diffcore::{Bindings, Graph, NodeId, ParamStore, Tensor};
use crate::math;
use crate::mechanism::{check_focus, AuctionOutcome, BatchOutcome, FocusUtility, Mechanism};
use crate::rng::{self, streams};
use crate::valuations::{ProfileBatch, SettingSpec, ValuationClass, ValuationProfile, MAX_COMBINATORIAL_ITEMS};
use crate::{Error, Result};

/// Network shape: `hidden_layers` tanh layers of `hidden_width` units in each
/// of the allocation and payment networks.
///
/// Both networks see `(b − input_offset) / input_scale`; the allocation and
/// payment rules themselves use the raw bids.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArchSpec {
    pub class: ValuationClass,
    pub n: usize,
    pub m: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    #[serde(default)]
    pub input_offset: f64,
    #[serde(default = "unit")]
    pub input_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl ArchSpec {
    pub fn new(class: ValuationClass, n: usize, m: usize, hidden_layers: usize, hidden_width: usize) -> Result<Self> {
        if n == 0 || m == 0 || hidden_layers == 0 || hidden_width == 0 {
            return Err(Error::Config(format!(
                "architecture needs positive n, m, layers and width (got {n}, {m}, {hidden_layers}, {hidden_width})"
            )));
        }
        if class == ValuationClass::Combinatorial && m > MAX_COMBINATORIAL_ITEMS {
            return Err(Error::Capacity(format!(
                "combinatorial bidders support at most {MAX_COMBINATORIAL_ITEMS} items, got {m}"
            )));
        }
        Ok(Self { class, n, m, hidden_layers, hidden_width, input_offset: 0.0, input_scale: 1.0 })
    }

    /// Input standardization maps the hull of the bidders' supports onto
    /// `[0, 1]`; an unbounded upper end is replaced by twice the mean.
    pub fn for_setting(spec: &SettingSpec, hidden_layers: usize, hidden_width: usize) -> Result<Self> {
        let mut arch = Self::new(spec.class, spec.n, spec.m, hidden_layers, hidden_width)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..spec.n {
            for (c, &(a, b)) in spec.support_box(i).iter().enumerate() {
                lo = lo.min(a);
                hi = hi.max(if b.is_finite() { b } else { 2.0 * spec.mean(i, c) });
            }
        }
        if lo.is_finite() && hi.is_finite() && hi > lo {
            arch.input_offset = lo;
            arch.input_scale = hi - lo;
        }
        Ok(arch)
    }

    /// Per-bidder bid width.
    pub fn width(&self) -> usize {
        self.class.width(self.m)
    }

    pub fn input_dim(&self) -> usize {
        self.n * self.width()
    }

    /// Number of score heads of the allocation network.
    pub fn heads(&self) -> usize {
        match self.class {
            ValuationClass::Additive => 1,
            ValuationClass::UnitDemand => 2,
            ValuationClass::Combinatorial => 1 + self.m,
        }
    }

    /// `(name, shape)` of every parameter, in storage order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let d = self.input_dim();
        let k = self.hidden_width;
        for net in ["alloc", "pay"] {
            for l in 0..self.hidden_layers {
                let fan_in = if l == 0 { d } else { k };
                out.push((format!("{net}.l{l}.w"), vec![fan_in, k]));
                out.push((format!("{net}.l{l}.b"), vec![k]));
            }
            if net == "alloc" {
                for h in 0..self.heads() {
                    out.push((format!("alloc.h{h}.w"), vec![k, d]));
                    out.push((format!("alloc.h{h}.b"), vec![d]));
                }
            } else {
                out.push(("pay.out.w".into(), vec![k, self.n]));
                out.push(("pay.out.b".into(), vec![self.n]));
            }
        }
        out
    }
}

/// Glorot-uniform weights and zero biases.
pub fn init_params(arch: &ArchSpec, seed: u64) -> ParamStore {
    let mut rng = rng::stream(seed, streams::PARAM_INIT);
    let mut store = ParamStore::new();
    for (name, shape) in arch.param_shapes() {
        let len = shape.iter().product();
        let data = if shape.len() == 2 {
            let limit = math::sqrt(6.0 / (shape[0] + shape[1]) as f64);
            (0..len).map(|_| rng.gen_range(-limit..limit)).collect()
        } else {
            vec![0.0; len]
        };
        store.insert(&name, Tensor::new(shape, data).expect("positive shape"));
    }
    store
}

/// Nodes produced by [`build_network`].
#[derive(Debug, Clone, Copy)]
pub struct NetworkNodes {
    /// `B × (n · width)` allocation probabilities.
    pub allocation: NodeId,
    /// `B × n` payment fractions.
    pub pay_fraction: NodeId,
    /// `B × n` payments.
    pub payments: NodeId,
}

fn mlp(g: &mut Graph, net: &str, layers: usize, x: NodeId) -> NodeId {
    let mut h = x;
    for l in 0..layers {
        let w = g.input(&format!("{net}.l{l}.w"));
        let b = g.input(&format!("{net}.l{l}.b"));
        let a = g.linear(h, w, b);
        h = g.tanh(a);
    }
    h
}

/// Appends both networks to `g`, reading parameters from inputs named as in
/// [`ArchSpec::param_shapes`].
pub fn build_network(g: &mut Graph, arch: &ArchSpec, bids: NodeId) -> NetworkNodes {
    let w = arch.width();
    let shifted = g.offset(bids, -arch.input_offset);
    let x = g.scale(shifted, 1.0 / arch.input_scale);
    let hidden = mlp(g, "alloc", arch.hidden_layers, x);
    let heads: Vec<NodeId> = (0..arch.heads())
        .map(|h| {
            let wn = g.input(&format!("alloc.h{h}.w"));
            let bn = g.input(&format!("alloc.h{h}.b"));
            g.linear(hidden, wn, bn)
        })
        .collect();
    let allocation = allocation_layer(g, arch.class, arch.n, arch.m, &heads);

    let hidden = mlp(g, "pay", arch.hidden_layers, x);
    let wn = g.input("pay.out.w");
    let bn = g.input("pay.out.b");
    let logits = g.linear(hidden, wn, bn);
    let pay_fraction = g.sigmoid(logits);
    let zb = g.mul(allocation, bids);
    let zb = g.reshape_rows(zb, &[arch.n, w]);
    let value = g.sum_axis(zb, 2);
    let payments = g.mul(pay_fraction, value);
    NetworkNodes { allocation, pay_fraction, payments }
}

/// Softmax along `axis` of a rank-3 tensor with one zero-score dummy slot.
fn softmax_with_dummy(g: &mut Graph, x: NodeId, axis: usize, len: usize) -> NodeId {
    let padded = g.pad(x, axis, 0.0);
    let soft = g.softmax(padded, axis);
    g.slice(soft, axis, 0, len)
}

/// For item `j`, the flat `(bidder, bundle)` indices whose bundle contains `j`.
pub fn bundles_containing(n: usize, m: usize, item: usize) -> Vec<usize> {
    let k = (1usize << m) - 1;
    (0..n).flat_map(|i| (0..k).filter(move |c| (c + 1) & (1 << item) != 0).map(move |c| i * k + c)).collect()
}

/// Maps score heads (each `B × (n · width)`) to a feasible allocation.
pub fn allocation_layer(g: &mut Graph, class: ValuationClass, n: usize, m: usize, heads: &[NodeId]) -> NodeId {
    let w = class.width(m);
    match class {
        ValuationClass::Additive => {
            let s = g.reshape_rows(heads[0], &[n, m]);
            let z = softmax_with_dummy(g, s, 1, n);
            g.reshape_rows(z, &[n * m])
        }
        ValuationClass::UnitDemand => {
            let s = g.reshape_rows(heads[0], &[n, m]);
            let by_bidders = softmax_with_dummy(g, s, 1, n);
            let s2 = g.reshape_rows(heads[1], &[n, m]);
            let by_items = softmax_with_dummy(g, s2, 2, m);
            let z = g.minimum(by_bidders, by_items);
            g.reshape_rows(z, &[n * m])
        }
        ValuationClass::Combinatorial => {
            let s = g.reshape_rows(heads[0], &[n, w]);
            let by_bundles = softmax_with_dummy(g, s, 2, w);
            let mut z = g.reshape_rows(by_bundles, &[n * w]);
            for item in 0..m {
                let members = bundles_containing(n, m, item);
                let len = members.len();
                let mut back = vec![None; n * w];
                for (pos, &f) in members.iter().enumerate() {
                    back[f] = Some(pos);
                }
                let picked = g.gather(heads[1 + item], members.into_iter().map(Some).collect(), 0.0);
                let padded = g.pad(picked, 1, 0.0);
                let soft = g.softmax(padded, 1);
                let soft = g.slice(soft, 1, 0, len);
                let full = g.gather(soft, back, 1.0);
                z = g.minimum(z, full);
            }
            z
        }
    }
}

/// A RegretNet mechanism: architecture plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretNet {
    pub arch: ArchSpec,
    pub params: ParamStore,
}

impl RegretNet {
    pub fn new(arch: ArchSpec, params: ParamStore) -> Result<Self> {
        let expected = arch.param_shapes();
        if expected.len() != params.len() {
            return Err(Error::InvalidTensor(format!(
                "architecture has {} parameter tensors, store has {}",
                expected.len(),
                params.len()
            )));
        }
        for (name, shape) in &expected {
            match params.get(name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(Error::InvalidTensor(format!("{name}: expected {shape:?}, found {:?}", t.shape())))
                }
                None => return Err(Error::InvalidTensor(format!("missing parameter {name}"))),
            }
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("parameters contain NaN or infinity".into()));
        }
        if !(arch.input_scale.is_finite() && arch.input_scale > 0.0 && arch.input_offset.is_finite()) {
            return Err(Error::Config(format!(
                "input standardization needs a positive scale, got offset {} and scale {}",
                arch.input_offset, arch.input_scale
            )));
        }
        Ok(Self { arch, params })
    }

    pub fn init(arch: ArchSpec, seed: u64) -> Self {
        let params = init_params(&arch, seed);
        Self { arch, params }
    }

    fn check_bids(&self, bids: &ProfileBatch) -> Result<()> {
        if bids.n != self.arch.n || bids.width != self.arch.width() {
            return Err(Error::InvalidTensor(format!(
                "bids have {} bidders × {}, network expects {} × {}",
                bids.n,
                bids.width,
                self.arch.n,
                self.arch.width()
            )));
        }
        Ok(())
    }

    /// Allocations and payments at the given bids.
    pub fn forward(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        self.check_bids(bids)?;
        let mut g = Graph::new();
        let x = g.input("bids");
        let nodes = build_network(&mut g, &self.arch, x);
        let bids_t = bids.to_tensor();
        let mut b = Bindings::new().with("bids", &bids_t);
        self.params.bind(&mut b);
        let mut ev = g.forward(&b, &[nodes.allocation, nodes.payments])?;
        let allocation = ev.take(nodes.allocation).into_data();
        let payments = ev.take(nodes.payments).into_data();
        if allocation.iter().chain(&payments).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(BatchOutcome { n: self.arch.n, width: self.arch.width(), allocation, payments })
    }

    pub fn forward_one(&self, bids: &ValuationProfile) -> Result<AuctionOutcome> {
        let batch = ProfileBatch::new(bids.n, bids.width, bids.class, bids.values.clone())?;
        Ok(self.forward(&batch)?.outcome(0))
    }
}

impl Mechanism for RegretNet {
    fn n(&self) -> usize {
        self.arch.n
    }

    fn width(&self) -> usize {
        self.arch.width()
    }

    fn class(&self) -> ValuationClass {
        self.arch.class
    }

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        self.forward(bids)
    }

    fn focus_utility(&self, values: &[f64], bids: &ProfileBatch, focus: &[usize], with_grad: bool) -> Result<FocusUtility> {
        check_focus(self, values, bids, focus)?;
        let (n, w) = (self.arch.n, self.arch.width());
        let rows = bids.rows();
        let mut masked = vec![0.0; rows * n * w];
        let mut onehot = vec![0.0; rows * n];
        for (r, &i) in focus.iter().enumerate() {
            let start = r * n * w + i * w;
            masked[start..start + w].copy_from_slice(&values[r * w..(r + 1) * w]);
            onehot[r * n + i] = 1.0;
        }
        let bids_t = bids.to_tensor();
        let masked_t = Tensor::matrix(rows, n * w, masked)?;
        let onehot_t = Tensor::matrix(rows, n, onehot)?;

        let mut g = Graph::new();
        let x = g.input("bids");
        let nodes = build_network(&mut g, &self.arch, x);
        let u = focus_utility_node(&mut g, nodes, "focus_values", "focus_onehot");
        let total = g.sum(u);

        let mut b = Bindings::new().with("bids", &bids_t).with("focus_values", &masked_t).with("focus_onehot", &onehot_t);
        self.params.bind(&mut b);
        let ev = g.forward(&b, &[u, total])?;
        let utility = ev.value(u).data().to_vec();
        let grad = if with_grad {
            let grads = ev.backward(total, &["bids"])?;
            let full = grads.get("bids").expect("requested gradient");
            let mut out = vec![0.0; rows * w];
            for (r, &i) in focus.iter().enumerate() {
                let start = r * n * w + i * w;
                out[r * w..(r + 1) * w].copy_from_slice(&full.data()[start..start + w]);
            }
            out
        } else {
            Vec::new()
        };
        if utility.iter().chain(&grad).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("utility or its gradient".into()));
        }
        Ok(FocusUtility { utility, grad })
    }
}

/// Per-row utility `⟨v, z⟩ − ⟨onehot, p⟩`, where the inputs `values` (masked
/// to the focus block) and `onehot` select the focus bidder.
pub fn focus_utility_node(g: &mut Graph, nodes: NetworkNodes, values: &str, onehot: &str) -> NodeId {
    let v = g.input(values);
    let oh = g.input(onehot);
    let zv = g.mul(nodes.allocation, v);
    let value = g.sum_axis(zv, 1);
    let po = g.mul(nodes.payments, oh);
    let paid = g.sum_axis(po, 1);
    g.sub(value, paid)
}

/// `u_i = ⟨v_i, z_i⟩ − p_i` for every bidder.
pub fn utility(values: &ValuationProfile, outcome: &AuctionOutcome) -> Result<Vec<f64>> {
    if values.n != outcome.n || values.width != outcome.width {
        return Err(Error::InvalidTensor(format!(
            "valuations are {} × {}, outcome is {} × {}",
            values.n, values.width, outcome.n, outcome.width
        )));
    }
    Ok((0..values.n)
        .map(|i| {
            let z = outcome.allocation_row(i);
            values.bidder(i).iter().zip(z).map(|(v, z)| v * z).sum::<f64>() - outcome.payments[i]
        })
        .collect())
}

fn eval_layer(class: ValuationClass, n: usize, m: usize, heads: &[&[f64]]) -> Result<Vec<f64>> {
    let d = n * class.width(m);
    let tensors: Vec<Tensor> = heads
        .iter()
        .map(|h| {
            if h.len() != d {
                return Err(Error::InvalidTensor(format!("score head has {} entries, expected {d}", h.len())));
            }
            Tensor::matrix(1, d, h.to_vec())
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = (0..tensors.len()).map(|h| format!("s{h}")).collect();
    let mut g = Graph::new();
    let nodes: Vec<NodeId> = names.iter().map(|s| g.input(s)).collect();
    let z = allocation_layer(&mut g, class, n, m, &nodes);
    let mut b = Bindings::new();
    for (name, t) in names.iter().zip(&tensors) {
        b.bind(name, t);
    }
    let mut ev = g.forward(&b, &[z])?;
    Ok(ev.take(z).into_data())
}

/// Unit-demand allocation from row scores `s` (softmax over bidders) and
/// `s2` (softmax over items), both `n × m` row-major.
pub fn phi_ds(s: &[f64], s2: &[f64], n: usize, m: usize) -> Result<Vec<f64>> {
    eval_layer(ValuationClass::UnitDemand, n, m, &[s, s2])
}

/// Combinatorial allocation from bidder scores and one score table per item,
/// each `n × (2^m − 1)`.
pub fn phi_cf(s: &[f64], item_scores: &[Vec<f64>], n: usize, m: usize) -> Result<Vec<f64>> {
    if item_scores.len() != m {
        return Err(Error::InvalidTensor(format!("expected {m} item score tables, got {}", item_scores.len())));
    }
    let mut heads: Vec<&[f64]> = vec![s];
    heads.extend(item_scores.iter().map(|v| v.as_slice()));
    eval_layer(ValuationClass::Combinatorial, n, m, &heads)
}

fn log_ratio(z: f64, total: f64) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::InvalidTensor("allocation has a zero entry; floor it before recovering scores".into()));
    }
    if total >= 1.0 {
        return Err(Error::InvalidTensor(format!("allocation sum {total} leaves no slack for the dummy")));
    }
    Ok(math::ln(z) - math::ln(1.0 - total))
}

/// Scores `(s, s2)` with `phi_ds(s, s2) = z` for a strictly positive `n × m`
/// matrix whose row and column sums are below 1.
pub fn recover_ds_scores(z: &[f64], n: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if z.len() != n * m {
        return Err(Error::InvalidTensor(format!("expected {} entries, got {}", n * m, z.len())));
    }
    let col: Vec<f64> = (0..m).map(|j| (0..n).map(|i| z[i * m + j]).sum()).collect();
    let row: Vec<f64> = (0..n).map(|i| z[i * m..(i + 1) * m].iter().sum()).collect();
    let mut s = vec![0.0; n * m];
    let mut s2 = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            s[i * m + j] = log_ratio(z[i * m + j], col[j])?;
            s2[i * m + j] = log_ratio(z[i * m + j], row[i])?;
        }
    }
    Ok((s, s2))
}

/// Scores `(s, s^{(1..m)})` with `phi_cf = z` for a strictly positive
/// combinatorial-feasible `n × (2^m − 1)` allocation with slack.
pub fn recover_cf_scores(z: &[f64], n: usize, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = (1usize << m) - 1;
    if z.len() != n * k {
        return Err(Error::InvalidTensor(format!("expected {} entries, got {}", n * k, z.len())));
    }
    let mut s = vec![0.0; n * k];
    for i in 0..n {
        let total: f64 = z[i * k..(i + 1) * k].iter().sum();
        for c in 0..k {
            s[i * k + c] = log_ratio(z[i * k + c], total)?;
        }
    }
    let mut items = Vec::with_capacity(m);
    for j in 0..m {
        let members = bundles_containing(n, m, j);
        let total: f64 = members.iter().map(|&f| z[f]).sum();
        let mut sj = vec![0.0; n * k];
        for &f in &members {
            sj[f] = log_ratio(z[f], total)?;
        }
        items.push(sj);
    }
    Ok((s, items))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn arch(class: ValuationClass, n: usize, m: usize) -> ArchSpec {
        ArchSpec::new(class, n, m, 2, 8).unwrap()
    }

    fn zero_heads(net: &mut RegretNet) {
        let names: Vec<String> = net.params.names().iter().filter(|s| s.starts_with("alloc.h")).map(|s| (*s).into()).collect();
        for name in names {
            for x in net.params.get_mut(&name).unwrap().data_mut() {
                *x = 0.0;
            }
        }
    }

    #[test]
    fn additive_zero_scores_split_evenly_with_dummy() {
        let mut net = RegretNet::init(arch(ValuationClass::Additive, 3, 2), 1);
        zero_heads(&mut net);
        let bids = ProfileBatch::new(3, 2, ValuationClass::Additive, vec![0.3, 0.9, 0.1, 0.4, 0.7, 0.2]).unwrap();
        let out = net.forward(&bids).unwrap();
        for z in &out.allocation {
            assert_abs_diff_eq!(*z, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn param_shapes_match_init() {
        let a = arch(ValuationClass::Combinatorial, 2, 2);
        let p = init_params(&a, 3);
        assert!(RegretNet::new(a, p.clone()).is_ok());
        assert_eq!(p.get("alloc.l0.w").unwrap().shape(), &[6, 8]);
        assert_eq!(p.get("alloc.h2.w").unwrap().shape(), &[8, 6]);
        assert_eq!(p.get("pay.out.w").unwrap().shape(), &[8, 2]);
        assert_eq!(p.get("alloc.l1.b").unwrap().data(), &[0.0; 8]);
    }

    #[test]
    fn rejects_mismatched_bids() {
        let net = RegretNet::init(arch(ValuationClass::Additive, 2, 2), 1);
        let bids = ProfileBatch::new(1, 2, ValuationClass::Additive, vec![0.1, 0.2]).unwrap();
        assert!(net.forward(&bids).is_err());
    }

    #[test]
    fn hand_utility() {
        let v = ValuationProfile::new(1, 2, ValuationClass::Additive, vec![1.0, 0.0]).unwrap();
        let out = AuctionOutcome { n: 1, width: 2, allocation: vec![0.5, 0.5], payments: vec![0.2] };
        assert_abs_diff_eq!(utility(&v, &out).unwrap()[0], 0.3, epsilon = 1e-15);
        let none = AuctionOutcome { n: 1, width: 2, allocation: vec![0.0, 0.0], payments: vec![0.0] };
        assert_eq!(utility(&v, &none).unwrap(), vec![0.0]);
    }

    #[test]
    fn ds_round_trip_symmetric() {
        let z = vec![0.25; 4];
        let (s, s2) = recover_ds_scores(&z, 2, 2).unwrap();
        let back = phi_ds(&s, &s2, 2, 2).unwrap();
        for (a, b) in back.iter().zip(&z) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn recover_rejects_zero_and_full() {
        assert!(recover_ds_scores(&[0.0, 0.1, 0.1, 0.1], 2, 2).is_err());
        assert!(recover_ds_scores(&[0.5, 0.5, 0.1, 0.1], 2, 2).is_err());
    }

    #[test]
    fn bundle_membership() {
        // Two items: bundles {1}, {2}, {1,2} at columns 0, 1, 2.
        assert_eq!(bundles_containing(2, 2, 0), vec![0, 2, 3, 5]);
        assert_eq!(bundles_containing(2, 2, 1), vec![1, 2, 4, 5]);
    }
}
