//! The discretized optimal-auction linear program for additive bidders.
//!
//! Every bidder's value for every item takes one of `D` bin centers, so
//! there are `D^{mn}` profiles. Variables are the allocation probabilities
//! `z_p{p}_b{i}_i{j}` and payments `pay_p{p}_b{i}` of every profile. The
//! model is never materialized: constraints are generated on demand in a
//! fixed order (per profile: IR, then IC, then item feasibility).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Default cap on the number of LP variables.
pub const DEFAULT_VARIABLE_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LpCounts {
    pub profiles: u64,
    pub variables: u64,
    pub ic: u64,
    pub ir: u64,
    pub feasibility: u64,
}

impl LpCounts {
    /// `n, m, D` → counts, or an error on overflow.
    pub fn new(n: usize, m: usize, d: usize) -> Result<Self> {
        if n == 0 || m == 0 || d == 0 {
            return Err(Error::Config("LP needs n, m, D ≥ 1".into()));
        }
        let overflow = || Error::Capacity(format!("LP counts overflow for n={n}, m={m}, D={d}"));
        let (n64, m64, d64) = (n as u64, m as u64, d as u64);
        let exp = u32::try_from(m * n).map_err(|_| overflow())?;
        let profiles = d64.checked_pow(exp).ok_or_else(overflow)?;
        let misreports = d64.checked_pow(m as u32).ok_or_else(overflow)? - 1;
        let per_profile = n64.checked_add(n64.checked_mul(m64).ok_or_else(overflow)?).ok_or_else(overflow)?;
        Ok(Self {
            profiles,
            variables: profiles.checked_mul(per_profile).ok_or_else(overflow)?,
            ic: profiles.checked_mul(n64.checked_mul(misreports).ok_or_else(overflow)?).ok_or_else(overflow)?,
            ir: profiles.checked_mul(n64).ok_or_else(overflow)?,
            feasibility: profiles.checked_mul(m64).ok_or_else(overflow)?,
        })
    }

    pub fn ic_ir(&self) -> u64 {
        self.ic + self.ir
    }

    pub fn constraints(&self) -> u64 {
        self.ic + self.ir + self.feasibility
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    Alloc { profile: u64, bidder: usize, item: usize },
    Pay { profile: u64, bidder: usize },
}

impl VarId {
    pub fn name(&self) -> String {
        match *self {
            VarId::Alloc { profile, bidder, item } => format!("z_p{profile}_b{bidder}_i{item}"),
            VarId::Pay { profile, bidder } => format!("pay_p{profile}_b{bidder}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Ir { profile: u64, bidder: usize },
    Ic { profile: u64, bidder: usize, misreport: u64 },
    Feasibility { profile: u64, item: usize },
}

impl ConstraintKind {
    pub fn name(&self) -> String {
        match *self {
            ConstraintKind::Ir { profile, bidder } => format!("ir_p{profile}_b{bidder}"),
            ConstraintKind::Ic { profile, bidder, misreport } => format!("ic_p{profile}_b{bidder}_r{misreport}"),
            ConstraintKind::Feasibility { profile, item } => format!("feas_p{profile}_i{item}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LpModel {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// Value support `[lo, hi]` shared by every bidder and item.
    pub support: (f64, f64),
    pub counts: LpCounts,
}

/// Checks the size against `variable_cap` and returns the lazy model.
pub fn build_lp(n: usize, m: usize, d: usize, support: (f64, f64), variable_cap: u64) -> Result<LpModel> {
    let counts = LpCounts::new(n, m, d)?;
    if !(support.0.is_finite() && support.1.is_finite() && support.1 > support.0) {
        return Err(Error::Config(format!("LP support must be a finite interval, got {support:?}")));
    }
    if counts.variables > variable_cap {
        return Err(Error::Capacity(format!(
            "LP with n={n}, m={m}, D={d} has {} variables and {} IC+IR constraints ({} IC, {} IR, {} feasibility), above the cap of {variable_cap} variables",
            counts.variables,
            counts.ic_ir(),
            counts.ic,
            counts.ir,
            counts.feasibility
        )));
    }
    Ok(LpModel { n, m, d, support, counts })
}

/// Bin center `k` of `D` bins on `[lo, hi]`.
pub fn bin_center(k: usize, d: usize, support: (f64, f64)) -> f64 {
    support.0 + (k as f64 + 0.5) / d as f64 * (support.1 - support.0)
}

/// Index of the nearest bin center; exact midpoints go to the lower bin.
pub fn round_index(x: f64, d: usize, support: (f64, f64)) -> usize {
    let t = (x - support.0) / (support.1 - support.0) * d as f64 - 0.5;
    let k = math::ceil(t - 0.5);
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(d - 1)
    }
}

/// Snaps every value to its nearest bin center.
pub fn round_profile(values: &[f64], d: usize, support: (f64, f64)) -> Vec<f64> {
    values.iter().map(|&x| bin_center(round_index(x, d, support), d, support)).collect()
}

impl LpModel {
    fn cells(&self) -> usize {
        self.n * self.m
    }

    /// Base-`D` digits of profile `p`; digit `i·m + j` is bidder `i`'s bin
    /// for item `j`.
    pub fn digits(&self, p: u64) -> Vec<usize> {
        let d = self.d as u64;
        let mut rest = p;
        (0..self.cells())
            .map(|_| {
                let k = (rest % d) as usize;
                rest /= d;
                k
            })
            .collect()
    }

    pub fn profile_index(&self, digits: &[usize]) -> u64 {
        digits.iter().rev().fold(0u64, |acc, &k| acc * self.d as u64 + k as u64)
    }

    /// Grid profile nearest to a continuous profile (`n × m`, row-major).
    pub fn round_to_profile(&self, values: &[f64]) -> Result<u64> {
        if values.len() != self.cells() {
            return Err(Error::InvalidTensor(format!("expected {} values", self.cells())));
        }
        let digits: Vec<usize> = values.iter().map(|&x| round_index(x, self.d, self.support)).collect();
        Ok(self.profile_index(&digits))
    }

    pub fn profile_values(&self, p: u64) -> Vec<f64> {
        self.digits(p).into_iter().map(|k| bin_center(k, self.d, self.support)).collect()
    }

    /// Objective coefficients: every payment weighted by the uniform grid
    /// prior `1 / D^{mn}`. The objective is maximized.
    pub fn objective_coefficient(&self) -> f64 {
        1.0 / self.counts.profiles as f64
    }

    /// All variables in declaration order.
    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.counts.profiles).flat_map(move |profile| {
            let pays = (0..self.n).map(move |bidder| VarId::Pay { profile, bidder });
            let allocs = (0..self.n)
                .flat_map(move |bidder| (0..self.m).map(move |item| VarId::Alloc { profile, bidder, item }));
            pays.chain(allocs)
        })
    }

    /// `Σ_j v_ij z_p,i,j − pay_p,i` as terms scaled by `sign`.
    fn utility_terms(&self, terms: &mut Vec<(VarId, f64)>, profile: u64, bidder: usize, values: &[f64], sign: f64) {
        for (item, &v) in values.iter().enumerate() {
            terms.push((VarId::Alloc { profile, bidder, item }, sign * v));
        }
        terms.push((VarId::Pay { profile, bidder }, -sign));
    }

    /// Constraints of one profile in order: IR per bidder, IC per bidder and
    /// misreport, feasibility per item.
    pub fn profile_constraints(&self, profile: u64) -> Vec<Constraint> {
        let (n, m, d) = (self.n, self.m, self.d);
        let digits = self.digits(profile);
        let values: Vec<f64> = digits.iter().map(|&k| bin_center(k, d, self.support)).collect();
        let own_count = (d as u64).pow(m as u32);
        let mut out = Vec::new();
        for bidder in 0..n {
            let v = &values[bidder * m..(bidder + 1) * m];
            let mut terms = Vec::with_capacity(m + 1);
            self.utility_terms(&mut terms, profile, bidder, v, 1.0);
            out.push(Constraint { kind: ConstraintKind::Ir { profile, bidder }, terms, sense: Sense::Ge, rhs: 0.0 });
        }
        for bidder in 0..n {
            let v = &values[bidder * m..(bidder + 1) * m];
            let own = self.profile_index(&digits[bidder * m..(bidder + 1) * m]);
            for report in 0..own_count {
                if report == own {
                    continue;
                }
                let mut alt = digits.clone();
                let mut rest = report;
                for slot in &mut alt[bidder * m..(bidder + 1) * m] {
                    *slot = (rest % d as u64) as usize;
                    rest /= d as u64;
                }
                let other = self.profile_index(&alt);
                let mut terms = Vec::with_capacity(2 * m + 2);
                self.utility_terms(&mut terms, profile, bidder, v, 1.0);
                self.utility_terms(&mut terms, other, bidder, v, -1.0);
                out.push(Constraint {
                    kind: ConstraintKind::Ic { profile, bidder, misreport: report },
                    terms,
                    sense: Sense::Ge,
                    rhs: 0.0,
                });
            }
        }
        for item in 0..m {
            let terms = (0..n).map(|bidder| (VarId::Alloc { profile, bidder, item }, 1.0)).collect();
            out.push(Constraint { kind: ConstraintKind::Feasibility { profile, item }, terms, sense: Sense::Le, rhs: 1.0 });
        }
        out
    }

    /// Every constraint, streamed profile by profile.
    pub fn constraints(&self) -> impl Iterator<Item = Constraint> + '_ {
        (0..self.counts.profiles).flat_map(move |p| self.profile_constraints(p))
    }

    /// Revenue of a grid mechanism given payments for every profile, under
    /// the uniform grid prior.
    pub fn revenue(&self, payments: &[f64]) -> Result<f64> {
        let expected = self.counts.profiles as usize * self.n;
        if payments.len() != expected {
            return Err(Error::InvalidTensor(format!("expected {expected} payments")));
        }
        Ok(payments.iter().sum::<f64>() * self.objective_coefficient())
    }
}

/// Allocation probabilities lie in `[0, 1]`; payments are free.
pub fn variable_bounds(var: &VarId) -> (f64, f64) {
    match var {
        VarId::Alloc { .. } => (0.0, 1.0),
        VarId::Pay { .. } => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Evaluates `Σ coef · x` for an assignment.
pub fn evaluate_terms(terms: &[(VarId, f64)], value: impl Fn(&VarId) -> f64) -> f64 {
    terms.iter().map(|(v, c)| c * value(v)).sum()
}
