//! Algorithmic core for detecting apnea/bradycardia/desaturation (ABD) events
//! in two-channel neonatal vital-sign recordings.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the clock or threads lives in the `abd-tools` companion crate.
//!
//! Pipeline, bottom up:
//!
//! * [`signal`]: per-patient records of heart rate and SpO2 plus event marks.
//! * [`framing`]: sliding-window feature vectors labeled by their center sample.
//! * [`dataset`]: target encoding, z-score normalization, duplication
//!   balancing and leave-one-out partitions.
//! * [`numerics`]: dense kernels, ridge regression and Frobenius-ball
//!   constrained least squares.
//! * [`pln`], [`svm`], [`ann`]: the three classifiers.
//! * [`metrics`]: confusion counts and the Fowlkes-Mallows index.
//! * [`synth`]: seeded synthetic cohorts.
//! * [`classifier`]: a uniform train/predict front end used by the harness.

#![no_std]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod ann;
pub mod classifier;
pub mod dataset;
mod error;
pub mod framing;
pub mod matrix;
pub mod metrics;
pub mod numerics;
pub mod pln;
pub mod rng;
pub mod signal;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Number of output classes (C1 = event, C2 = no event).
pub const Q: usize = 2;
