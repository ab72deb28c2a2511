//! Numerical core for closed-loop optimization campaigns.
//!
//! Gaussian-process surrogates, Pareto fronts and hypervolume, analytic and
//! Monte-Carlo acquisition functions with cost-aware fidelity weighting,
//! benchmark functions and space-filling designs. The crate is `no_std` with
//! `alloc`; the `std` feature (on by default) only forwards to dependencies.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod acquisition;
pub mod benchmarks;
pub mod design;
mod error;
pub mod linalg;
pub mod pareto;
pub mod surrogate;

pub use error::{Error, Result};
