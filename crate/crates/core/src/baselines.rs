//! Reference auctions: second-price with reserve (per item or for the grand
//! bundle), posted prices, and Myerson's optimal single-item auction for
//! regular distributions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mechanism::{BatchOutcome, Mechanism};
use crate::myersonnet::{MyersonNet, VirtualTransform};
use crate::rng::{self, streams};
use crate::valuations::{bundle_value, ProfileBatch, ScalarDist, SettingSpec, ValuationClass};
use crate::{Error, Result};

/// Grid spacing of [`optimize_reserve`] callers in this module.
pub const RESERVE_GRID_STEP: f64 = 1e-3;

/// Profiles drawn per generator in the Monte-Carlo helpers.
const CHUNK: usize = 1 << 16;

/// Highest bidder at or above `reserve` wins and pays the larger of the
/// reserve and the second-highest bid. Lowest index wins ties.
pub fn myerson_single_item(bids: &[f64], reserve: f64) -> (Option<usize>, f64) {
    let mut winner = None;
    let mut top = f64::NEG_INFINITY;
    for (i, &b) in bids.iter().enumerate() {
        if b >= reserve && b > top {
            top = b;
            winner = Some(i);
        }
    }
    match winner {
        None => (None, 0.0),
        Some(w) => {
            let second = bids.iter().enumerate().filter(|(j, _)| *j != w).fold(reserve, |a, (_, &b)| a.max(b));
            (Some(w), second)
        }
    }
}

/// Myerson virtual value `v − (1 − F(v)) / f(v)` for the regular
/// distributions with a linear virtual value.
pub fn regular_virtual_transform(dist: &ScalarDist) -> Result<VirtualTransform> {
    match *dist {
        // 2v − hi
        ScalarDist::Uniform { hi, .. } => VirtualTransform::linear(2.0, -hi),
        // v − mean
        ScalarDist::Exponential { mean } => VirtualTransform::linear(1.0, -mean),
        ScalarDist::UniformMixture { .. } => {
            Err(Error::Unsupported("mixture distributions are irregular and need ironing".into()))
        }
    }
}

/// Myerson's optimal auction for a single-item setting with regular
/// independent bidders: SPA-0 on the exact virtual values.
pub fn myerson_optimal(spec: &SettingSpec) -> Result<MyersonNet> {
    if !spec.is_single_item() {
        return Err(Error::Unsupported(format!("{} is not a single-item setting", spec.id)));
    }
    let transforms = (0..spec.n)
        .map(|i| {
            let dist = spec.item_dist(i, 0).ok_or_else(|| Error::Unsupported("correlated values".into()))?;
            regular_virtual_transform(&dist)
        })
        .collect::<Result<_>>()?;
    Ok(MyersonNet { transforms })
}

/// Highest and second-highest values of a scalar auction per sample. A
/// single bidder has second-highest value zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReserveSamples {
    pub top: Vec<f64>,
    pub second: Vec<f64>,
}

impl ReserveSamples {
    pub fn push(&mut self, values: impl IntoIterator<Item = f64>) {
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for v in values {
            if v > a {
                b = a;
                a = v;
            } else if v > b {
                b = v;
            }
        }
        self.top.push(a);
        self.second.push(b);
    }

    pub fn len(&self) -> usize {
        self.top.len()
    }

    pub fn is_empty(&self) -> bool {
        self.top.is_empty()
    }

    /// Mean revenue of the second-price auction with `reserve`.
    pub fn revenue(&self, reserve: f64) -> f64 {
        let total: f64 =
            self.top.iter().zip(&self.second).filter(|(t, _)| **t >= reserve).map(|(_, s)| s.max(reserve)).sum();
        total / self.len() as f64
    }
}

/// Grid search for the reserve maximizing the mean second-price revenue over
/// reserves `lo, lo + step, …, ≤ hi`. Returns `(reserve, revenue)`.
///
/// Revenue at reserve `r` is `Σ_{s ≥ r} s + r · (#{t ≥ r} − #{s ≥ r})`,
/// evaluated with sorted arrays and suffix sums.
pub fn optimize_reserve(samples: &ReserveSamples, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Config("reserve optimization needs samples".into()));
    }
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid reserve grid [{lo}, {hi}] step {step}")));
    }
    let sort = |xs: &[f64]| {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let tops = sort(&samples.top);
    let seconds = sort(&samples.second);
    let mut suffix = vec![0.0; seconds.len() + 1];
    for k in (0..seconds.len()).rev() {
        suffix[k] = suffix[k + 1] + seconds[k];
    }
    let len = samples.len();
    let count = ((hi - lo) / step + 1e-9) as usize + 1;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..count {
        let r = lo + k as f64 * step;
        let t_idx = tops.partition_point(|&t| t < r);
        let s_idx = seconds.partition_point(|&s| s < r);
        let above_top = len - t_idx;
        let above_second = len - s_idx;
        let rev = (suffix[s_idx] + r * (above_top - above_second) as f64) / len as f64;
        if rev > best.1 {
            best = (r, rev);
        }
    }
    Ok(best)
}

/// Calls `f` on consecutive batches totalling `samples` profiles. Batch `k`
/// uses its own generator, so results do not depend on the batch layout of
/// the caller.
pub fn for_each_batch(
    spec: &SettingSpec,
    samples: usize,
    seed: u64,
    mut f: impl FnMut(&ProfileBatch),
) {
    let mut done = 0;
    let mut k = 0u64;
    while done < samples {
        let rows = CHUNK.min(samples - done);
        let mut rng = rng::indexed(seed, streams::BASELINE, k);
        f(&spec.sample_batch(rows, &mut rng));
        done += rows;
        k += 1;
    }
}

fn upper_support(spec: &SettingSpec, value: impl Fn(&[(f64, f64)]) -> f64) -> f64 {
    (0..spec.n).map(|i| value(&spec.support_box(i))).fold(0.0, f64::max)
}

/// Upper end of the reserve grid; unbounded supports are cut at the largest
/// sampled value.
fn grid_top(bound: f64, samples: &ReserveSamples) -> f64 {
    if bound.is_finite() {
        bound
    } else {
        samples.top.iter().copied().fold(0.0, f64::max)
    }
}

/// Revenue of a separate optimal-reserve second-price auction per item,
/// estimated from `samples` Monte-Carlo profiles. Also returns the reserves.
pub fn itemwise_myerson(spec: &SettingSpec, samples: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    if spec.class != ValuationClass::Additive {
        return Err(Error::Unsupported("item-wise auctions need additive bidders".into()));
    }
    let (n, m) = (spec.n, spec.m);
    let mut total = 0.0;
    let mut reserves = Vec::with_capacity(m);
    for item in 0..m {
        let mut s = ReserveSamples::default();
        for_each_batch(spec, samples, seed, |batch| {
            for r in 0..batch.rows() {
                let row = batch.row(r);
                s.push((0..n).map(|i| row[i * m + item]));
            }
        });
        let hi = grid_top(upper_support(spec, |b| b[item].1), &s);
        let (reserve, rev) = optimize_reserve(&s, 0.0, hi, RESERVE_GRID_STEP)?;
        total += rev;
        reserves.push(reserve);
    }
    Ok((total, reserves))
}

pub fn itemwise_myerson_revenue(spec: &SettingSpec, samples: usize, seed: u64) -> Result<f64> {
    Ok(itemwise_myerson(spec, samples, seed)?.0)
}

/// Revenue and reserve of an optimal-reserve second-price auction for the
/// grand bundle.
pub fn bundled_myerson(spec: &SettingSpec, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let (n, w) = (spec.n, spec.width());
    let full = (1u32 << spec.m) - 1;
    let mut s = ReserveSamples::default();
    for_each_batch(spec, samples, seed, |batch| {
        for r in 0..batch.rows() {
            let row = batch.row(r);
            s.push((0..n).map(|i| bundle_value(spec.class, &row[i * w..(i + 1) * w], full)));
        }
    });
    let bound = match spec.class {
        ValuationClass::Additive => upper_support(spec, |b| b.iter().map(|x| x.1).sum()),
        ValuationClass::UnitDemand => upper_support(spec, |b| b.iter().map(|x| x.1).fold(0.0, f64::max)),
        ValuationClass::Combinatorial => upper_support(spec, |b| b[b.len() - 1].1),
    };
    let hi = grid_top(bound, &s);
    let (reserve, rev) = optimize_reserve(&s, 0.0, hi, RESERVE_GRID_STEP)?;
    Ok((rev, reserve))
}

pub fn bundled_myerson_revenue(spec: &SettingSpec, samples: usize, seed: u64) -> Result<f64> {
    Ok(bundled_myerson(spec, samples, seed)?.0)
}

/// Mean revenue of a per-item second-price auction without reserve, i.e.
/// the sum over items of the second-highest value.
pub fn spa_revenue(spec: &SettingSpec, samples: usize, seed: u64) -> Result<f64> {
    if spec.n < 2 {
        return Err(Error::Config("a second-price auction needs at least two bidders".into()));
    }
    if spec.class != ValuationClass::Additive {
        return Err(Error::Unsupported("item-wise auctions need additive bidders".into()));
    }
    let (n, m) = (spec.n, spec.m);
    let mut total = 0.0;
    for_each_batch(spec, samples, seed, |batch| {
        for r in 0..batch.rows() {
            let row = batch.row(r);
            for item in 0..m {
                let mut s = ReserveSamples::default();
                s.push((0..n).map(|i| row[i * m + item]));
                total += s.second[0];
            }
        }
    });
    Ok(total / samples as f64)
}

/// Monte-Carlo revenue of any mechanism on fresh samples.
pub fn monte_carlo_revenue<M: Mechanism + ?Sized>(mech: &M, spec: &SettingSpec, samples: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    let mut err = None;
    for_each_batch(spec, samples, seed, |batch| match mech.outcomes(batch) {
        Ok(out) => total += out.revenues().iter().sum::<f64>(),
        Err(e) => err = Some(e),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total / samples as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PriceScope {
    PerItem,
    GrandBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PostedPriceRule {
    pub price: f64,
    pub scope: PriceScope,
}

impl PostedPriceRule {
    pub fn new(price: f64, scope: PriceScope) -> Result<Self> {
        if !(price >= 0.0) || !price.is_finite() {
            return Err(Error::Config(format!("posted price must be a finite non-negative number, got {price}")));
        }
        Ok(Self { price, scope })
    }
}

/// Second-price auction with a reserve, either separately for every item or
/// for the grand bundle. With one bidder this is a posted price.
#[derive(Debug, Clone, PartialEq)]
pub struct ReserveAuction {
    pub n: usize,
    pub m: usize,
    pub class: ValuationClass,
    pub rule: PostedPriceRule,
}

impl ReserveAuction {
    pub fn new(spec: &SettingSpec, rule: PostedPriceRule) -> Result<Self> {
        if rule.scope == PriceScope::PerItem && spec.class != ValuationClass::Additive {
            return Err(Error::Unsupported("per-item prices need additive bidders".into()));
        }
        Ok(Self { n: spec.n, m: spec.m, class: spec.class, rule })
    }
}

impl Mechanism for ReserveAuction {
    fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.class.width(self.m)
    }

    fn class(&self) -> ValuationClass {
        self.class
    }

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        let (n, m, w) = (self.n, self.m, self.width());
        if bids.n != n || bids.width != w {
            return Err(Error::InvalidTensor(format!("expected {n} bidders with {w} values each")));
        }
        let mut out = BatchOutcome::zeros(bids.rows(), n, w);
        let full = (1u32 << m) - 1;
        for r in 0..bids.rows() {
            let row = bids.row(r);
            match self.rule.scope {
                PriceScope::PerItem => {
                    for item in 0..m {
                        let item_bids: Vec<f64> = (0..n).map(|i| row[i * w + item]).collect();
                        if let (Some(win), price) = myerson_single_item(&item_bids, self.rule.price) {
                            out.allocation[(r * n + win) * w + item] = 1.0;
                            out.payments[r * n + win] += price;
                        }
                    }
                }
                PriceScope::GrandBundle => {
                    let values: Vec<f64> =
                        (0..n).map(|i| bundle_value(self.class, &row[i * w..(i + 1) * w], full)).collect();
                    if let (Some(win), price) = myerson_single_item(&values, self.rule.price) {
                        let z = &mut out.allocation[(r * n + win) * w..(r * n + win + 1) * w];
                        match self.class {
                            ValuationClass::Additive => z.fill(1.0),
                            ValuationClass::UnitDemand => {
                                let block = &row[win * w..(win + 1) * w];
                                let best = (0..w).fold(0, |b, j| if block[j] > block[b] { j } else { b });
                                z[best] = 1.0;
                            }
                            ValuationClass::Combinatorial => z[w - 1] = 1.0,
                        }
                        out.payments[r * n + win] = price;
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reserve_rule() {
        assert_eq!(myerson_single_item(&[0.9, 0.6], 0.5), (Some(0), 0.6));
        assert_eq!(myerson_single_item(&[0.3, 0.2], 0.5), (None, 0.0));
        assert_eq!(myerson_single_item(&[0.7, 0.2], 0.5), (Some(0), 0.5));
    }

    #[test]
    fn suffix_sum_revenue_matches_direct() {
        let mut s = ReserveSamples::default();
        for (a, b) in [(0.9, 0.2), (0.4, 0.35), (0.8, 0.75), (0.1, 0.0)] {
            s.push([a, b]);
        }
        let (r, rev) = optimize_reserve(&s, 0.0, 1.0, 0.01).unwrap();
        assert_abs_diff_eq!(rev, s.revenue(r), epsilon = 1e-12);
        for k in 0..=100 {
            assert!(s.revenue(k as f64 * 0.01) <= rev + 1e-12);
        }
    }

    #[test]
    fn empty_samples_error() {
        assert!(optimize_reserve(&ReserveSamples::default(), 0.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn uniform_virtual_value() {
        let t = regular_virtual_transform(&ScalarDist::Uniform { lo: 0.0, hi: 3.0 }).unwrap();
        assert_abs_diff_eq!(t.phi(2.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.phi_inverse(0.0), 1.5, epsilon = 1e-12);
    }
}
