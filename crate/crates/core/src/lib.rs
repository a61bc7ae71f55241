//! Core algorithms for differentially private smart-meter aggregation.
//!
//! Meters perturb their readings with gamma-difference noise shares whose sum
//! over a cluster is Laplace distributed, then mask the noisy reading with
//! pairwise-cancelling dummy keys so the aggregator only learns the noisy
//! cluster total. The crate also carries the analysis side: closed-form
//! utility bounds, attack success probabilities, a synthetic household load
//! generator, cluster formation and the start-slot inference adversaries.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `dpmeter` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod error;
pub mod math;
pub mod noise;
pub mod privacy;
pub mod protocol;
pub mod rng;
pub mod secure_agg;
pub mod stats;
pub mod traces;

pub use error::{Error, Result};
