//! Two-phase segmentation by normalized cuts with an adaptive, EM-estimated
//! similarity and a spatial regularizer on the phase field.
//!
//! The entry points are [`solver::run_ncash1`] and [`solver::run_ncastv`];
//! [`baselines`] holds the fixed-similarity normalized cut for comparison.

pub mod baselines;
pub mod config;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod field;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod similarity;
pub mod solver;
pub mod spatial;

pub use config::{Kernel, Regularizer, SolverConfig};
pub use error::{NcasError, Result};
pub use field::{Features, Input, PointSet, ScalarField};
pub use graph::{Affinity, Neighborhood};
pub use solver::{run_ncash1, run_ncastv, SegmentationResult};
