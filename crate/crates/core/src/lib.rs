//! Learning revenue-maximizing auctions as neural networks.
//!
//! The crate contains everything that does not touch the file system:
//!
//! * [`diffcore`]: a small reverse-mode autodiff engine over dense `f64`
//!   tensors plus the Adam update rule.
//! * [`valuations`]: the benchmark valuation distributions and valuation
//!   semantics (additive, unit-demand, combinatorial).
//! * [`regretnet`]: allocation and payment networks that are feasible and
//!   individually rational by construction.
//! * [`training`]: the augmented Lagrangian solver with inner misreport
//!   optimization, and its sample-based variant.
//! * [`evaluation`]: revenue, regret and IR-violation metrics and the
//!   covering-number bound proxy.
//! * [`rochetnet`] and [`myersonnet`]: exactly strategyproof networks for
//!   one bidder / one item.
//! * [`baselines`]: Myerson-style reference auctions.
//! * [`lpexport`]: the discretized linear program, generated lazily.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. With `std`, float intrinsics come from the platform math library
//! and the GEMM kernel may use runtime CPU feature detection.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod diffcore;
mod error;
pub mod evaluation;
pub mod lpexport;
pub mod math;
pub mod mechanism;
pub mod myersonnet;
pub mod regretnet;
pub mod rng;
pub mod rochetnet;
pub mod training;
pub mod valuations;

pub use error::{Error, Result};
