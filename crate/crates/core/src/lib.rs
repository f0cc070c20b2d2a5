//! Workbench for detecting client-perceived call-processing degradation from
//! server-side KPIs.
//!
//! The pipeline: simulate (or ingest) KPI frames with their per-frame mean
//! round-trip time, derive a 3σ cutoff from an unstressed baseline, label each
//! frame by whether its RTT reaches the cutoff, train a set of classifiers on
//! the KPI vectors and score them per stressor scenario.

pub mod config;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod labeling;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod schema;
pub mod sim;
pub mod stressor;

pub use error::{Error, Result};
