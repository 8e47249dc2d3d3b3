//! The interface shared by every auction in the crate.
//!
//! A mechanism maps a batch of bid profiles to allocations and payments. The
//! regret machinery additionally needs the utility of one focus bidder per
//! row and its gradient with respect to that bidder's bid block.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::valuations::{ProfileBatch, ValuationClass};
use crate::{Error, Result};

/// Allocation and payments for one bid profile.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AuctionOutcome {
    pub n: usize,
    pub width: usize,
    /// Row-major `n × width` allocation probabilities.
    pub allocation: Vec<f64>,
    pub payments: Vec<f64>,
}

impl AuctionOutcome {
    pub fn allocation_row(&self, bidder: usize) -> &[f64] {
        &self.allocation[bidder * self.width..(bidder + 1) * self.width]
    }
}

/// Outcomes for a batch, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub n: usize,
    pub width: usize,
    /// `rows × n × width`.
    pub allocation: Vec<f64>,
    /// `rows × n`.
    pub payments: Vec<f64>,
}

impl BatchOutcome {
    pub fn zeros(rows: usize, n: usize, width: usize) -> Self {
        Self { n, width, allocation: vec![0.0; rows * n * width], payments: vec![0.0; rows * n] }
    }

    pub fn rows(&self) -> usize {
        self.payments.len() / self.n
    }

    pub fn allocation_row(&self, row: usize, bidder: usize) -> &[f64] {
        let start = (row * self.n + bidder) * self.width;
        &self.allocation[start..start + self.width]
    }

    pub fn payment(&self, row: usize, bidder: usize) -> f64 {
        self.payments[row * self.n + bidder]
    }

    pub fn outcome(&self, row: usize) -> AuctionOutcome {
        let aw = self.n * self.width;
        AuctionOutcome {
            n: self.n,
            width: self.width,
            allocation: self.allocation[row * aw..(row + 1) * aw].to_vec(),
            payments: self.payments[row * self.n..(row + 1) * self.n].to_vec(),
        }
    }

    /// Total payment of each row.
    pub fn revenues(&self) -> Vec<f64> {
        self.payments.chunks(self.n).map(|p| p.iter().sum()).collect()
    }

    /// `⟨v, z_i⟩ − p_i` for every row and bidder, with `values` laid out like
    /// the bids (`rows × n × width`).
    pub fn utilities(&self, values: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.payments.len());
        for (k, (zrow, vrow)) in self.allocation.chunks(self.width).zip(values.chunks(self.width)).enumerate() {
            let value: f64 = zrow.iter().zip(vrow).map(|(z, v)| z * v).sum();
            out.push(value - self.payments[k]);
        }
        out
    }
}

/// Focus-bidder utilities for a batch of (possibly misreported) bids.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusUtility {
    /// One utility per row.
    pub utility: Vec<f64>,
    /// `rows × width`: gradient of the row's utility with respect to the
    /// focus bidder's bid block. Empty when not requested.
    pub grad: Vec<f64>,
}

pub trait Mechanism {
    fn n(&self) -> usize;

    fn width(&self) -> usize;

    fn class(&self) -> ValuationClass;

    fn outcomes(&self, bids: &ProfileBatch) -> Result<BatchOutcome>;

    /// Utility of bidder `focus[r]` in row `r`, whose true block is
    /// `values[r]` (`rows × width`), when the bids are `bids[r]`.
    ///
    /// The default implementation reports a zero gradient, which is exact for
    /// mechanisms whose outcomes are locally constant in the bids.
    fn focus_utility(&self, values: &[f64], bids: &ProfileBatch, focus: &[usize], with_grad: bool) -> Result<FocusUtility> {
        check_focus(self, values, bids, focus)?;
        let out = self.outcomes(bids)?;
        let w = self.width();
        let utility = focus
            .iter()
            .enumerate()
            .map(|(r, &i)| {
                let z = out.allocation_row(r, i);
                z.iter().zip(&values[r * w..(r + 1) * w]).map(|(z, v)| z * v).sum::<f64>() - out.payment(r, i)
            })
            .collect();
        let grad = if with_grad { vec![0.0; focus.len() * w] } else { Vec::new() };
        Ok(FocusUtility { utility, grad })
    }
}

/// Validates the argument shapes of [`Mechanism::focus_utility`].
pub fn check_focus<M: Mechanism + ?Sized>(mech: &M, values: &[f64], bids: &ProfileBatch, focus: &[usize]) -> Result<()> {
    let rows = bids.rows();
    if bids.n != mech.n() || bids.width != mech.width() {
        return Err(Error::InvalidTensor(format!(
            "bids have {} bidders × {}, mechanism expects {} × {}",
            bids.n,
            bids.width,
            mech.n(),
            mech.width()
        )));
    }
    if focus.len() != rows || values.len() != rows * mech.width() {
        return Err(Error::InvalidTensor(format!(
            "{rows} bid rows need {rows} focus bidders and {} values, got {} and {}",
            rows * mech.width(),
            focus.len(),
            values.len()
        )));
    }
    if let Some(&bad) = focus.iter().find(|&&i| i >= mech.n()) {
        return Err(Error::InvalidTensor(format!("focus bidder {bad} out of range")));
    }
    Ok(())
}

/// Builds the misreport profiles for `(row, bidder)` pairs: row `r` of the
/// result is `truthful[rows[r]]` with bidder `focus[r]`'s block replaced by
/// `blocks[r]`.
pub fn substitute(truthful: &ProfileBatch, rows: &[usize], focus: &[usize], blocks: &[f64]) -> ProfileBatch {
    let w = truthful.width;
    let mut data = Vec::with_capacity(rows.len() * truthful.row_width());
    for (k, (&r, &i)) in rows.iter().zip(focus).enumerate() {
        let start = data.len();
        data.extend_from_slice(truthful.row(r));
        data[start + i * w..start + (i + 1) * w].copy_from_slice(&blocks[k * w..(k + 1) * w]);
    }
    ProfileBatch::new(truthful.n, w, truthful.class, data).expect("rows copied from a valid batch")
}
