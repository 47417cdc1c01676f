//! Immune-inspired algorithm toolkit.
//!
//! Four algorithm families built on a shared encoding layer:
//!
//! - [`negsel`]: negative-selection detector generation, censoring against a
//!   self set, stream monitoring, and memory promotion.
//! - [`clonal`]: clonal selection with rank-proportional cloning and
//!   affinity-inverse somatic hypermutation.
//! - [`network`]: idiotypic immune-network recommender driven by antibody
//!   concentration dynamics.
//! - [`dca`]: population-based dendritic cell algorithm classifying antigens
//!   from PAMP/danger/safe signal streams.
//!
//! [`encoding`] holds the shared representations (bit strings, rating
//! profiles, flow records) and affinity measures; [`io`] holds file formats
//! and synthetic-data generators for the two reference workloads
//! (collaborative-filtering recommendation and flow anomaly detection).
//!
//! Everything that draws randomness takes an explicit `u64` seed and uses a
//! counter-based generator, so every run is reproducible bit for bit.

pub mod clonal;
pub mod dca;
pub mod encoding;
pub mod io;
pub mod negsel;
pub mod network;

pub use encoding::{Affinity, BitString, RatingProfile};
