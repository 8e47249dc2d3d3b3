#![allow(dead_code)]

use regretnet_core::mechanism::{check_focus, BatchOutcome, FocusUtility, Mechanism};
use regretnet_core::valuations::{ProfileBatch, ValuationClass};
use regretnet_core::Result;

/// One bidder, one item. The bidder always receives the item and pays
/// `pay(b)`, so the utility of reporting `b` under value `v` is `v − pay(b)`.
pub struct SingleBidder {
    pub pay: fn(f64) -> f64,
    pub dpay: fn(f64) -> f64,
    pub allocate: bool,
}

impl SingleBidder {
    /// Winner pays its bid.
    pub fn first_price() -> Self {
        Self { pay: |b| b, dpay: |_| 1.0, allocate: true }
    }

    /// Utility `−(b − 0.7)²` regardless of value.
    pub fn quadratic_toy() -> Self {
        Self { pay: |b| (b - 0.7) * (b - 0.7), dpay: |b| 2.0 * (b - 0.7), allocate: false }
    }

    /// Charges 0.1 above the bid.
    pub fn overcharge() -> Self {
        Self { pay: |b| b + 0.1, dpay: |_| 1.0, allocate: true }
    }
}

impl Mechanism for SingleBidder {
    fn n(&self) -> usize {
        1
    }

    fn width(&self) -> usize {
        1
    }

    fn class(&self) -> ValuationClass {
        ValuationClass::Additive
    }

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome> {
        let rows = bids.rows();
        let mut out = BatchOutcome::zeros(rows, 1, 1);
        for r in 0..rows {
            let b = bids.row(r)[0];
            out.allocation[r] = if self.allocate { 1.0 } else { 0.0 };
            out.payments[r] = (self.pay)(b);
        }
        Ok(out)
    }

    fn focus_utility(&self, values: &[f64], bids: &ProfileBatch, focus: &[usize], with_grad: bool) -> Result<FocusUtility> {
        check_focus(self, values, bids, focus)?;
        let a = if self.allocate { 1.0 } else { 0.0 };
        let utility = (0..bids.rows()).map(|r| a * values[r] - (self.pay)(bids.row(r)[0])).collect();
        let grad = if with_grad { (0..bids.rows()).map(|r| -(self.dpay)(bids.row(r)[0])).collect() } else { Vec::new() };
        Ok(FocusUtility { utility, grad })
    }
}
