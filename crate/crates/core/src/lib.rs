//! Quality-diversity search with MAP-Elites.
//!
//! The crate is organised around a dense elite [`archive`], the batched
//! hierarchical MAP-Elites [`engine`], a handful of benchmark [`domains`],
//! the baseline [`controls`] used for comparison, map-quality [`metrics`]
//! with the [`stats`] used to compare treatments, and the [`experiment`]
//! layer that loads configuration files and writes results to disk.

pub mod archive;
pub mod config;
pub mod controls;
pub mod domains;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod heatmap;
pub mod lineage;
pub mod metrics;
pub mod rng;
pub mod stats;

pub use archive::{Archive, CellIndex, DenseMap, Elite, FeatureSpace, InsertOutcome};
pub use domains::{Domain, Evaluation};
pub use engine::{run_map_elites, EngineParams, Execution, RunLog};
pub use error::{Error, Result};
