//! Zone-level mobile traffic analytics: antenna coverage geometry, zone
//! attribution, app-usage specialization, clustering and statistics.

pub mod analysis;
pub mod calendar;
pub mod cluster;
pub mod coverage;
pub mod error;
pub mod geom;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tags;
pub mod traffic;

pub use error::{Error, Result};
