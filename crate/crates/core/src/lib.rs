//! Place networks and lifestyle motifs from device-stay records.
//!
//! The crate follows the data through one pipeline:
//!
//! * [`ingest`] parses stop and POI files and turns dwell-filtered stops into
//!   per-device-day stay sequences.
//! * [`netbuild`] folds stay sequences into an undirected, integer-weighted
//!   network of places.
//! * [`metrics`] computes degree distributions, weighted clustering and
//!   distribution fits; [`refnets`] generates the random and scale-free
//!   reference networks.
//! * [`motifs`] classifies 2- to 4-node connected induced subgraphs, either by
//!   enumerating them in a network or by classifying device-day trajectories.
//! * [`attributes`] attaches NAICS sector labels and canonicalizes attributed
//!   motifs; [`stats`] computes geodesic motif distances and daily series.
//! * [`synth`] generates catalogs and traffic with planted ground truth.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature
//! disabled every loop runs sequentially and results are identical.

pub mod attributes;
mod exec;
pub mod ingest;
pub mod metrics;
pub mod motifs;
pub mod netbuild;
pub mod refnets;
pub mod stats;
pub mod synth;

pub use exec::Exec;
