//! Point-wise confidence intervals and simultaneous confidence bands for
//! neural survival-curve estimates, via an ensemble-based bootstrap that
//! separates data uncertainty from optimizer noise.
//!
//! The crate provides:
//!
//! * [`dataset`] — right-censored data model, CSV ingestion, train/validation
//!   splitting, bootstrap resampling and standardization;
//! * [`simgen`] — the five synthetic generative settings with exact truth
//!   oracles;
//! * [`hazardnet`] — a from-scratch MLP for the log relative risk g(t, x),
//!   trained by Adam on the case-control-sampled Cox partial likelihood with
//!   patience-based early stopping;
//! * [`survest`] — Breslow baseline hazards, survival curves on a common
//!   grid, and the ensemble log-risk estimator;
//! * [`bands`] — percentile intervals plus naive, KS and proportional-KS
//!   simultaneous bands from bootstrap replicate curves;
//! * [`harness`] — the repetition/coverage experiment driver and report
//!   writer behind the `survband` CLI.

pub mod bands;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod hazardnet;
pub mod plot;
pub mod rng;
pub mod simgen;
pub mod survest;

pub use error::{Error, Result};
