//! Test-time metrics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffcore::ParamStore;
use crate::math;
use crate::mechanism::{substitute, Mechanism};
use crate::regretnet::ArchSpec;
use crate::rng::{self, streams};
use crate::training::{Ascent, AscentRule, TrainConfig};
use crate::valuations::{ProfileBatch, SettingSpec, ValuationClass};
use crate::{Error, Result};

/// Multi-restart projected gradient ascent settings for regret estimation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegretConfig {
    pub rule: AscentRule,
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Upper bound on misreport rows evaluated together.
    pub chunk_rows: usize,
}

impl RegretConfig {
    pub fn full_scale() -> Self {
        Self { rule: AscentRule::Adam, restarts: 1000, steps: 2000, step_size: 0.1, seed: 0, chunk_rows: 4096 }
    }

    pub fn desk_scale() -> Self {
        Self { restarts: 100, steps: 500, ..Self::full_scale() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretEstimate {
    pub per_bidder: Vec<f64>,
    pub mean: f64,
    /// Best gain of every `(profile, bidder)`, floored at zero.
    pub per_profile: Vec<f64>,
}

/// Initial misreports for `(profile, bidder)` drawn from the setting.
///
/// Restart `k` of pair `(ℓ, i)` only depends on `seed`, `ℓ·n + i` and `k`,
/// so increasing the restart count keeps the earlier restarts.
fn restart_points(spec: &SettingSpec, profile: usize, bidder: usize, restarts: usize, seed: u64) -> Vec<f64> {
    let w = spec.width();
    let mut rng = rng::indexed(seed, streams::EVAL_RESTARTS, (profile * spec.n + bidder) as u64);
    let mut out = vec![0.0; restarts * w];
    for block in out.chunks_mut(w) {
        spec.sample_bidder(bidder, &mut rng, block);
    }
    out
}

/// Regret of each bidder: for every profile and bidder, the largest utility
/// gain found along `restarts` ascent trajectories of `steps` projected
/// gradient steps, floored at zero and averaged over profiles.
pub fn estimate_regret<M: Mechanism + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    profiles: &ProfileBatch,
    config: &RegretConfig,
) -> Result<RegretEstimate> {
    if config.restarts == 0 || config.chunk_rows == 0 {
        return Err(Error::Config("regret estimation needs at least one restart".into()));
    }
    let (n, w) = (profiles.n, profiles.width);
    let rows = profiles.rows();
    let truth = mech.outcomes(profiles)?.utilities(profiles.data());
    let mut best = vec![0.0f64; rows * n];

    // Work items are whole (profile, bidder) pairs so a pair never straddles
    // two chunks.
    let pairs_per_chunk = (config.chunk_rows / config.restarts).max(1);
    let all_pairs: Vec<(usize, usize)> = (0..rows).flat_map(|l| (0..n).map(move |i| (l, i))).collect();
    for chunk in all_pairs.chunks(pairs_per_chunk) {
        let total = chunk.len() * config.restarts;
        let mut profile_idx = Vec::with_capacity(total);
        let mut focus = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total * w);
        let mut blocks = Vec::with_capacity(total * w);
        let mut baseline = Vec::with_capacity(total);
        for &(l, i) in chunk {
            let starts = restart_points(spec, l, i, config.restarts, config.seed);
            for k in 0..config.restarts {
                profile_idx.push(l);
                focus.push(i);
                values.extend_from_slice(&profiles.row(l)[i * w..(i + 1) * w]);
                let mut block = starts[k * w..(k + 1) * w].to_vec();
                spec.project(i, &mut block);
                blocks.extend_from_slice(&block);
                baseline.push(truth[l * n + i]);
            }
        }
        let mut gains = vec![f64::NEG_INFINITY; total];
        let mut ascent = Ascent::new(config.rule, config.step_size, blocks.len());
        for step in 0..=config.steps {
            let bids = substitute(profiles, &profile_idx, &focus, &blocks);
            let last = step == config.steps;
            let fu = mech.focus_utility(&values, &bids, &focus, !last)?;
            for (g, (u, b)) in gains.iter_mut().zip(fu.utility.iter().zip(&baseline)) {
                *g = g.max(u - b);
            }
            if last {
                break;
            }
            ascent.apply(&mut blocks, &fu.grad);
            for (r, block) in blocks.chunks_mut(w).enumerate() {
                spec.project(focus[r], block);
            }
        }
        for (c, &(l, i)) in chunk.iter().enumerate() {
            let g = gains[c * config.restarts..(c + 1) * config.restarts].iter().fold(0.0f64, |a, &b| a.max(b));
            best[l * n + i] = g;
        }
    }
    let mut per_bidder = vec![0.0; n];
    for row in best.chunks(n) {
        for (p, g) in per_bidder.iter_mut().zip(row) {
            *p += g;
        }
    }
    for p in &mut per_bidder {
        *p /= rows as f64;
    }
    let mean = per_bidder.iter().sum::<f64>() / n as f64;
    Ok(RegretEstimate { per_bidder, mean, per_profile: best })
}

/// Trajectories of the ascent for one `(profile, bidder)`: `restarts`
/// sequences of `steps + 1` misreport blocks.
pub fn misreport_trace<M: Mechanism + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    profiles: &ProfileBatch,
    profile: usize,
    bidder: usize,
    config: &RegretConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let w = profiles.width;
    let single = profiles.select(&[profile]);
    let r = config.restarts;
    let mut blocks = restart_points(spec, profile, bidder, r, config.seed);
    for block in blocks.chunks_mut(w) {
        spec.project(bidder, block);
    }
    let rows = vec![0; r];
    let focus = vec![bidder; r];
    let values: Vec<f64> = (0..r).flat_map(|_| single.row(0)[bidder * w..(bidder + 1) * w].to_vec()).collect();
    let mut traces: Vec<Vec<Vec<f64>>> = blocks.chunks(w).map(|b| vec![b.to_vec()]).collect();
    let mut ascent = Ascent::new(config.rule, config.step_size, blocks.len());
    for _ in 0..config.steps {
        let bids = substitute(&single, &rows, &focus, &blocks);
        let fu = mech.focus_utility(&values, &bids, &focus, true)?;
        ascent.apply(&mut blocks, &fu.grad);
        for (k, block) in blocks.chunks_mut(w).enumerate() {
            spec.project(bidder, block);
            traces[k].push(block.to_vec());
        }
    }
    Ok(traces)
}

/// Mean and standard error of the revenue under truthful bidding.
pub fn revenue<M: Mechanism + ?Sized>(mech: &M, profiles: &ProfileBatch) -> Result<(f64, f64)> {
    let revs = mech.outcomes(profiles)?.revenues();
    Ok(mean_stderr(&revs))
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let len = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / len;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (len - 1.0);
    (mean, math::sqrt(var / len))
}

/// Average negative-utility mass `(1/Ln) Σ_ℓ Σ_i max{−u_i(v^ℓ), 0}`.
pub fn ir_violation<M: Mechanism + ?Sized>(mech: &M, profiles: &ProfileBatch) -> Result<f64> {
    let u = mech.outcomes(profiles)?.utilities(profiles.data());
    Ok(u.iter().map(|x| (-x).max(0.0)).sum::<f64>() / u.len() as f64)
}

/// Quantities entering the covering-number bound proxy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundInputs {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub alloc_params: usize,
    pub pay_params: usize,
    /// L1 norm of all parameters.
    pub weight_norm: f64,
    pub sample_size: usize,
    pub n: usize,
    pub m: usize,
    pub class: ValuationClass,
}

impl BoundInputs {
    pub fn from_params(arch: &ArchSpec, params: &ParamStore, sample_size: usize) -> Self {
        Self {
            hidden_layers: arch.hidden_layers,
            hidden_width: arch.hidden_width,
            alloc_params: params.num_scalars_with_prefix("alloc."),
            pay_params: params.num_scalars_with_prefix("pay."),
            weight_norm: params.l1_norm(),
            sample_size,
            n: arch.n,
            m: arch.m,
            class: arch.class,
        }
    }
}

/// `√(R (d_a + d_p) ln(L W d) / L)` with `d = max{K, mn}`, or
/// `d = max{K, n 2^m}` for combinatorial bidders. Universal constants are
/// omitted, so this is a proxy rather than a bound.
pub fn delta_bound(inputs: &BoundInputs) -> Result<f64> {
    let b = inputs;
    if b.hidden_layers == 0 || b.hidden_width == 0 || b.sample_size == 0 || b.n == 0 || b.m == 0 {
        return Err(Error::Config("bound inputs must be positive".into()));
    }
    if !(b.weight_norm.is_finite() && b.weight_norm > 0.0) {
        return Err(Error::Config("weight norm must be positive".into()));
    }
    let dim = match b.class {
        ValuationClass::Additive | ValuationClass::UnitDemand => (b.m * b.n) as f64,
        ValuationClass::Combinatorial => b.n as f64 * math::powi(2.0, b.m as i32),
    }
    .max(b.hidden_width as f64);
    let l = b.sample_size as f64;
    let params = (b.alloc_params + b.pay_params) as f64;
    let log_term = math::ln(l * b.weight_norm * dim);
    Ok(math::sqrt(b.hidden_layers as f64 * params * log_term.max(0.0) / l))
}

/// Everything reported for one evaluated mechanism.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub setting: String,
    pub mechanism: String,
    /// `desk` or `full`.
    pub scale: String,
    pub test_size: usize,
    pub revenue: f64,
    pub revenue_stderr: f64,
    pub regret_per_bidder: Vec<f64>,
    pub regret_mean: f64,
    /// Number of test profiles used for regret estimation.
    pub regret_profiles: usize,
    pub regret_config: Option<RegretConfig>,
    pub ir_violation: f64,
    pub bound_proxy: Option<f64>,
    pub train_config: Option<TrainConfig>,
    /// Named auxiliary values, e.g. baseline revenues.
    pub extra: BTreeMap<String, f64>,
}

/// Revenue and IR on all of `test`, regret on its first `regret_profiles`
/// rows.
pub fn evaluate<M: Mechanism + ?Sized>(
    mech: &M,
    spec: &SettingSpec,
    test: &ProfileBatch,
    regret_profiles: usize,
    config: &RegretConfig,
) -> Result<MetricsReport> {
    let (rev, se) = revenue(mech, test)?;
    let ir = ir_violation(mech, test)?;
    let k = regret_profiles.min(test.rows()).max(1);
    let rgt = estimate_regret(mech, spec, &test.range(0, k), config)?;
    Ok(MetricsReport {
        setting: String::from(spec.id.as_str()),
        mechanism: String::new(),
        scale: String::new(),
        test_size: test.rows(),
        revenue: rev,
        revenue_stderr: se,
        regret_per_bidder: rgt.per_bidder,
        regret_mean: rgt.mean,
        regret_profiles: k,
        regret_config: Some(*config),
        ir_violation: ir,
        bound_proxy: None,
        train_config: None,
        extra: BTreeMap::new(),
    })
}

/// Points of a regular grid over `bounds` with `points` values per axis,
/// flattened into blocks of `bounds.len()`.
pub fn uniform_grid(bounds: &[(f64, f64)], points: usize) -> Vec<f64> {
    let d = bounds.len();
    let total = points.pow(d as u32);
    let mut out = Vec::with_capacity(total * d);
    for mut k in 0..total {
        for &(lo, hi) in bounds {
            let t = if points > 1 { (k % points) as f64 / (points - 1) as f64 } else { 0.5 };
            out.push(lo + t * (hi - lo));
            k /= points;
        }
    }
    out
}

/// Exact regret against a finite set of misreports: for every profile and
/// bidder, the largest gain over the blocks in `candidates`, floored at zero.
pub fn grid_regret<M: Mechanism + ?Sized>(mech: &M, profiles: &ProfileBatch, candidates: &[f64]) -> Result<RegretEstimate> {
    let (n, w, rows) = (profiles.n, profiles.width, profiles.rows());
    if candidates.is_empty() || candidates.len() % w != 0 {
        return Err(Error::InvalidTensor(format!("candidate misreports must be blocks of {w}")));
    }
    let count = candidates.len() / w;
    let truth = mech.outcomes(profiles)?.utilities(profiles.data());
    let mut best = vec![0.0f64; rows * n];
    for l in 0..rows {
        for i in 0..n {
            let idx = vec![l; count];
            let focus = vec![i; count];
            let bids = substitute(profiles, &idx, &focus, candidates);
            let values: Vec<f64> = (0..count).flat_map(|_| profiles.row(l)[i * w..(i + 1) * w].iter().copied()).collect();
            let fu = mech.focus_utility(&values, &bids, &focus, false)?;
            let base = truth[l * n + i];
            best[l * n + i] = fu.utility.iter().fold(0.0f64, |a, u| a.max(u - base));
        }
    }
    let mut per_bidder = vec![0.0; n];
    for row in best.chunks(n) {
        for (p, g) in per_bidder.iter_mut().zip(row) {
            *p += g / rows as f64;
        }
    }
    let mean = per_bidder.iter().sum::<f64>() / n as f64;
    Ok(RegretEstimate { per_bidder, mean, per_profile: best })
}
