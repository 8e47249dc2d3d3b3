//! Valuation distributions and valuation semantics.
//!
//! Profiles are stored row-major as `n × width` where `width` is the number of
//! items (additive, unit-demand) or the number of non-empty bundles
//! `2^m − 1` (combinatorial). Bundle columns are ordered by bitmask: column
//! `c` holds the bundle whose item bitmask is `c + 1`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::diffcore::Tensor;
use crate::math;
use crate::{Error, Result};

/// Largest item count for which combinatorial bundle tables are built.
pub const MAX_COMBINATORIAL_ITEMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValuationClass {
    Additive,
    UnitDemand,
    Combinatorial,
}

impl ValuationClass {
    /// Per-bidder bid width for `m` items.
    pub fn width(self, m: usize) -> usize {
        match self {
            ValuationClass::Additive | ValuationClass::UnitDemand => m,
            ValuationClass::Combinatorial => (1usize << m) - 1,
        }
    }
}

/// Benchmark settings. `I`–`XI` are the multi-item settings; the remaining
/// ids are the single-item distributions used for MyersonNet and baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SettingId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
    XI,
    SymmetricUniform,
    AsymmetricUniform,
    Exponential,
    Irregular,
    Custom,
}

impl SettingId {
    pub const ALL: [SettingId; 15] = [
        SettingId::I,
        SettingId::II,
        SettingId::III,
        SettingId::IV,
        SettingId::V,
        SettingId::VI,
        SettingId::VII,
        SettingId::VIII,
        SettingId::IX,
        SettingId::X,
        SettingId::XI,
        SettingId::SymmetricUniform,
        SettingId::AsymmetricUniform,
        SettingId::Exponential,
        SettingId::Irregular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SettingId::I => "I",
            SettingId::II => "II",
            SettingId::III => "III",
            SettingId::IV => "IV",
            SettingId::V => "V",
            SettingId::VI => "VI",
            SettingId::VII => "VII",
            SettingId::VIII => "VIII",
            SettingId::IX => "IX",
            SettingId::X => "X",
            SettingId::XI => "XI",
            SettingId::SymmetricUniform => "symmetric-uniform",
            SettingId::AsymmetricUniform => "asymmetric-uniform",
            SettingId::Exponential => "exponential",
            SettingId::Irregular => "irregular",
            SettingId::Custom => "custom",
        }
    }

    pub fn spec(self) -> Result<SettingSpec> {
        SettingSpec::from_id(self)
    }
}

impl fmt::Display for SettingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SettingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        SettingId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(&lower))
            .or(match lower.as_str() {
                "uniform" => Some(SettingId::SymmetricUniform),
                "asymmetric" => Some(SettingId::AsymmetricUniform),
                "exp" => Some(SettingId::Exponential),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown setting `{s}`")))
    }
}

/// A one-dimensional value distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ScalarDist {
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
    /// With probability `weight` draw `U[lo1, hi1]`, otherwise `U[lo2, hi2]`.
    UniformMixture { weight: f64, lo1: f64, hi1: f64, lo2: f64, hi2: f64 },
}

impl ScalarDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarDist::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            ScalarDist::Exponential { mean } => -mean * math::ln(1.0 - rng.gen::<f64>()),
            ScalarDist::UniformMixture { weight, lo1, hi1, lo2, hi2 } => {
                let pick: f64 = rng.gen();
                let u: f64 = rng.gen();
                if pick < weight {
                    lo1 + (hi1 - lo1) * u
                } else {
                    lo2 + (hi2 - lo2) * u
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarDist::Exponential { mean } => mean,
            ScalarDist::UniformMixture { weight, lo1, hi1, lo2, hi2 } => {
                weight * 0.5 * (lo1 + hi1) + (1.0 - weight) * 0.5 * (lo2 + hi2)
            }
        }
    }

    /// Support interval; the upper end is infinite for the exponential.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ScalarDist::Uniform { lo, hi } => (lo, hi),
            ScalarDist::Exponential { .. } => (0.0, f64::INFINITY),
            ScalarDist::UniformMixture { lo1, hi1, lo2, hi2, .. } => (lo1.min(lo2), hi1.max(hi2)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let unif = |lo: f64, hi: f64| ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        match *self {
            ScalarDist::Uniform { lo, hi } => unif(lo, hi),
            ScalarDist::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - math::exp(-x / mean)
                }
            }
            ScalarDist::UniformMixture { weight, lo1, hi1, lo2, hi2 } => {
                weight * unif(lo1, hi1) + (1.0 - weight) * unif(lo2, hi2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
enum Generator {
    /// Independent draws per bidder and item.
    Independent(Vec<Vec<ScalarDist>>),
    /// Uniform on the simplex `{v ≥ 0, Σ v ≤ 1}` (one bidder).
    Triangle,
    /// Two-item combinatorial: item values uniform on `items[i]`, bundle value
    /// equals the sum plus `U[synergy.0, synergy.1]`.
    Complements { items: Vec<(f64, f64)>, synergy: (f64, f64) },
}

/// One benchmark setting: bidders, items, valuation class and distribution.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SettingSpec {
    pub id: SettingId,
    pub n: usize,
    pub m: usize,
    pub class: ValuationClass,
    generator: Generator,
}

fn uniform_grid(n: usize, m: usize, lo: f64, hi: f64) -> Vec<Vec<ScalarDist>> {
    vec![vec![ScalarDist::Uniform { lo, hi }; m]; n]
}

impl SettingSpec {
    pub fn from_id(id: SettingId) -> Result<Self> {
        use SettingId::*;
        use ValuationClass::*;
        let indep = |id, n, m, class, lo, hi| Self {
            id,
            n,
            m,
            class,
            generator: Generator::Independent(uniform_grid(n, m, lo, hi)),
        };
        Ok(match id {
            I => indep(I, 1, 2, Additive, 0.0, 1.0),
            II => Self {
                id,
                n: 1,
                m: 2,
                class: Additive,
                generator: Generator::Independent(vec![vec![
                    ScalarDist::Uniform { lo: 4.0, hi: 16.0 },
                    ScalarDist::Uniform { lo: 4.0, hi: 7.0 },
                ]]),
            },
            III => Self { id, n: 1, m: 2, class: Additive, generator: Generator::Triangle },
            IV => indep(IV, 1, 2, UnitDemand, 0.0, 1.0),
            V => indep(V, 1, 2, UnitDemand, 2.0, 3.0),
            VI => indep(VI, 2, 2, Additive, 0.0, 1.0),
            VII => Self {
                id,
                n: 2,
                m: 2,
                class: Combinatorial,
                generator: Generator::Complements { items: vec![(1.0, 2.0), (1.0, 2.0)], synergy: (-1.0, 1.0) },
            },
            VIII => Self {
                id,
                n: 2,
                m: 2,
                class: Combinatorial,
                generator: Generator::Complements { items: vec![(1.0, 2.0), (1.0, 5.0)], synergy: (-1.0, 1.0) },
            },
            IX => indep(IX, 1, 10, Additive, 0.0, 1.0),
            X => indep(X, 3, 10, Additive, 0.0, 1.0),
            XI => indep(XI, 5, 10, Additive, 0.0, 1.0),
            SymmetricUniform => indep(SymmetricUniform, 3, 1, Additive, 0.0, 1.0),
            AsymmetricUniform => Self {
                id,
                n: 5,
                m: 1,
                class: Additive,
                generator: Generator::Independent(
                    (1..=5).map(|i| vec![ScalarDist::Uniform { lo: 0.0, hi: i as f64 }]).collect(),
                ),
            },
            Exponential => Self {
                id,
                n: 3,
                m: 1,
                class: Additive,
                generator: Generator::Independent(vec![vec![ScalarDist::Exponential { mean: 3.0 }]; 3]),
            },
            Irregular => Self {
                id,
                n: 3,
                m: 1,
                class: Additive,
                generator: Generator::Independent(vec![
                    vec![ScalarDist::UniformMixture { weight: 0.75, lo1: 0.0, hi1: 3.0, lo2: 3.0, hi2: 8.0 }];
                    3
                ]),
            },
            Custom => return Err(Error::Config("custom settings are built with SettingSpec::independent".into())),
        })
    }

    /// Independent i.i.d. values for every bidder and item.
    pub fn independent(n: usize, m: usize, class: ValuationClass, dist: ScalarDist) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Config("a setting needs at least one bidder and one item".into()));
        }
        if class == ValuationClass::Combinatorial {
            return Err(Error::Config("combinatorial settings need a bundle generator".into()));
        }
        Ok(Self { id: SettingId::Custom, n, m, class, generator: Generator::Independent(vec![vec![dist; m]; n]) })
    }

    /// Per-bidder bid width.
    pub fn width(&self) -> usize {
        self.class.width(self.m)
    }

    /// Width of a flattened profile row (`n · width`).
    pub fn row_width(&self) -> usize {
        self.n * self.width()
    }

    pub fn is_single_item(&self) -> bool {
        self.m == 1
    }

    /// Marginal distribution of bidder `i`'s value for item `j`, when the
    /// setting draws items independently.
    pub fn item_dist(&self, bidder: usize, item: usize) -> Option<ScalarDist> {
        match &self.generator {
            Generator::Independent(d) => d.get(bidder).and_then(|r| r.get(item)).copied(),
            _ => None,
        }
    }

    /// Draws bidder `i`'s valuation block into `out` (length `width`).
    pub fn sample_bidder<R: Rng + ?Sized>(&self, bidder: usize, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width());
        match &self.generator {
            Generator::Independent(dists) => {
                for (o, d) in out.iter_mut().zip(&dists[bidder]) {
                    *o = d.sample(rng);
                }
            }
            Generator::Triangle => {
                let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                out[0] = a;
                out[1] = b;
            }
            Generator::Complements { items, synergy } => {
                let (lo, hi) = items[bidder];
                let v1 = lo + (hi - lo) * rng.gen::<f64>();
                let v2 = lo + (hi - lo) * rng.gen::<f64>();
                let c = synergy.0 + (synergy.1 - synergy.0) * rng.gen::<f64>();
                out[0] = v1;
                out[1] = v2;
                out[2] = v1 + v2 + c;
            }
        }
    }

    /// Draws bidder `i`'s block uniformly from its support. For the
    /// exponential (unbounded support) this falls back to the distribution.
    pub fn sample_bidder_uniform<R: Rng + ?Sized>(&self, bidder: usize, rng: &mut R, out: &mut [f64]) {
        match &self.generator {
            Generator::Independent(dists) => {
                for (o, d) in out.iter_mut().zip(&dists[bidder]) {
                    *o = match d.support() {
                        (lo, hi) if hi.is_finite() => lo + (hi - lo) * rng.gen::<f64>(),
                        _ => d.sample(rng),
                    };
                }
            }
            // Both remaining generators are uniform on their support.
            _ => self.sample_bidder(bidder, rng, out),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ValuationProfile {
        let w = self.width();
        let mut values = vec![0.0; self.n * w];
        for i in 0..self.n {
            self.sample_bidder(i, rng, &mut values[i * w..(i + 1) * w]);
        }
        ValuationProfile { n: self.n, width: w, class: self.class, values }
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> ProfileBatch {
        let w = self.width();
        let rw = self.n * w;
        let mut data = vec![0.0; count * rw];
        for row in data.chunks_mut(rw) {
            for i in 0..self.n {
                self.sample_bidder(i, rng, &mut row[i * w..(i + 1) * w]);
            }
        }
        ProfileBatch { n: self.n, width: w, class: self.class, data }
    }

    /// Maps bidder `i`'s block onto its valuation support.
    ///
    /// Boxes are clamped coordinatewise, the triangle uses the Euclidean
    /// projection, and combinatorial blocks clamp the items first and then the
    /// bundle value into its feasible band around the item sum.
    pub fn project(&self, bidder: usize, block: &mut [f64]) {
        match &self.generator {
            Generator::Independent(dists) => {
                for (x, d) in block.iter_mut().zip(&dists[bidder]) {
                    let (lo, hi) = d.support();
                    *x = x.clamp(lo, hi);
                }
            }
            Generator::Triangle => project_capped_simplex(block),
            Generator::Complements { items, synergy } => {
                let (lo, hi) = items[bidder];
                block[0] = block[0].clamp(lo, hi);
                block[1] = block[1].clamp(lo, hi);
                let s = block[0] + block[1];
                block[2] = block[2].clamp(s + synergy.0, s + synergy.1);
            }
        }
    }

    /// Whether `block` lies in bidder `i`'s support (with slack `tol`).
    pub fn in_support(&self, bidder: usize, block: &[f64], tol: f64) -> bool {
        match &self.generator {
            Generator::Independent(dists) => block.iter().zip(&dists[bidder]).all(|(&x, d)| {
                let (lo, hi) = d.support();
                x >= lo - tol && x <= hi + tol
            }),
            Generator::Triangle => block.iter().all(|&x| x >= -tol) && block.iter().sum::<f64>() <= 1.0 + tol,
            Generator::Complements { items, synergy } => {
                let (lo, hi) = items[bidder];
                let s = block[0] + block[1];
                block[..2].iter().all(|&x| x >= lo - tol && x <= hi + tol)
                    && block[2] >= s + synergy.0 - tol
                    && block[2] <= s + synergy.1 + tol
            }
        }
    }

    /// Coordinatewise bounding box of bidder `i`'s support.
    pub fn support_box(&self, bidder: usize) -> Vec<(f64, f64)> {
        match &self.generator {
            Generator::Independent(dists) => dists[bidder].iter().map(|d| d.support()).collect(),
            Generator::Triangle => vec![(0.0, 1.0); 2],
            Generator::Complements { items, synergy } => {
                let (lo, hi) = items[bidder];
                vec![(lo, hi), (lo, hi), (2.0 * lo + synergy.0, 2.0 * hi + synergy.1)]
            }
        }
    }

    /// Analytic mean of column `col` of bidder `i`'s block.
    pub fn mean(&self, bidder: usize, col: usize) -> f64 {
        match &self.generator {
            Generator::Independent(dists) => dists[bidder][col].mean(),
            Generator::Triangle => 1.0 / 3.0,
            Generator::Complements { items, synergy } => {
                let (lo, hi) = items[bidder];
                let item = 0.5 * (lo + hi);
                if col < 2 {
                    item
                } else {
                    2.0 * item + 0.5 * (synergy.0 + synergy.1)
                }
            }
        }
    }
}

/// Euclidean projection onto `{x ≥ 0, Σ x ≤ 1}`.
pub fn project_capped_simplex(x: &mut [f64]) {
    let clipped_sum: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if clipped_sum <= 1.0 {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        return;
    }
    // Projection onto the probability simplex (sort-based threshold).
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

/// One draw of every bidder's valuation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValuationProfile {
    pub n: usize,
    pub width: usize,
    pub class: ValuationClass,
    pub values: Vec<f64>,
}

impl ValuationProfile {
    pub fn new(n: usize, width: usize, class: ValuationClass, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * width {
            return Err(Error::InvalidTensor(format!(
                "profile with {n} bidders of width {width} needs {} values, got {}",
                n * width,
                values.len()
            )));
        }
        Ok(Self { n, width, class, values })
    }

    pub fn bidder(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    /// Bidder `i`'s value for the bundle with item bitmask `bundle`.
    pub fn bundle_value(&self, bidder: usize, bundle: u32) -> f64 {
        bundle_value(self.class, self.bidder(bidder), bundle)
    }
}

/// Value of the bundle with item bitmask `bundle` (bit `j` = item `j`).
///
/// Additive values sum, unit-demand values take the best item, combinatorial
/// values read the stored table. The empty bundle is worth zero.
pub fn bundle_value(class: ValuationClass, row: &[f64], bundle: u32) -> f64 {
    if bundle == 0 {
        return 0.0;
    }
    let items = || (0..32).filter(move |j| bundle & (1 << j) != 0).map(|j| row[j as usize]);
    match class {
        ValuationClass::Additive => items().sum(),
        ValuationClass::UnitDemand => items().fold(f64::NEG_INFINITY, f64::max),
        ValuationClass::Combinatorial => row[bundle as usize - 1],
    }
}

/// Expected value of a (randomized) allocation row: `Σ_k v_k z_k` over items
/// or bundles.
pub fn expected_utility_value(valuation_row: &[f64], allocation_row: &[f64]) -> Result<f64> {
    if valuation_row.len() != allocation_row.len() {
        return Err(Error::InvalidTensor(format!(
            "valuation row has {} entries, allocation row has {}",
            valuation_row.len(),
            allocation_row.len()
        )));
    }
    Ok(valuation_row.iter().zip(allocation_row).map(|(v, z)| v * z).sum())
}

/// Human-readable bundle label, e.g. `{1,2}` (items 1-based).
pub fn bundle_label(bundle: u32) -> String {
    let mut s = String::from("{");
    let mut first = true;
    for j in 0..32 {
        if bundle & (1 << j) != 0 {
            if !first {
                s.push(',');
            }
            s.push_str(&format!("{}", j + 1));
            first = false;
        }
    }
    s.push('}');
    s
}

/// A batch of profiles, row-major `rows × (n · width)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProfileBatch {
    pub n: usize,
    pub width: usize,
    pub class: ValuationClass,
    data: Vec<f64>,
}

impl ProfileBatch {
    pub fn new(n: usize, width: usize, class: ValuationClass, data: Vec<f64>) -> Result<Self> {
        if n == 0 || width == 0 || data.len() % (n * width) != 0 {
            return Err(Error::InvalidTensor(format!(
                "{} values do not form rows of {n} bidders × {width}",
                data.len()
            )));
        }
        Ok(Self { n, width, class, data })
    }

    pub fn row_width(&self) -> usize {
        self.n * self.width
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.row_width()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let rw = self.row_width();
        &self.data[r * rw..(r + 1) * rw]
    }

    pub fn profile(&self, r: usize) -> ValuationProfile {
        ValuationProfile { n: self.n, width: self.width, class: self.class, values: self.row(r).to_vec() }
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> ProfileBatch {
        let mut data = Vec::with_capacity(indices.len() * self.row_width());
        for &r in indices {
            data.extend_from_slice(self.row(r));
        }
        ProfileBatch { n: self.n, width: self.width, class: self.class, data }
    }

    /// Rows `start..start + len`.
    pub fn range(&self, start: usize, len: usize) -> ProfileBatch {
        let rw = self.row_width();
        ProfileBatch { n: self.n, width: self.width, class: self.class, data: self.data[start * rw..(start + len) * rw].to_vec() }
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::matrix(self.rows(), self.row_width(), self.data.clone()).expect("non-empty batch")
    }
}
