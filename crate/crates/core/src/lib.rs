//! Training-free toolkit for predicting whether graph-aware models will beat
//! graph-agnostic models on a node-classification dataset: homophily metrics
//! over sparse graphs, analytical node-distinguishability measures on a
//! two-class contextual block model (Bayes error via generalized χ² CDFs,
//! divergences), classifier-based hypothesis-test metrics, and synthetic
//! graph generators.

// `!(x > 0.0)` rejects NaN along with the out-of-range values; the positive
// comparison alone would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod cpm;
pub mod csbmh;
pub mod error;
pub mod gchi2;
pub mod graph;
pub mod homophily;
pub mod stats;
pub mod synthgen;

pub use cpm::{Classifier, CpmConfig, CpmReport, PropConfig, PropReport};
pub use csbmh::{Channel, CsbmhParams, GaussianPair, SweepResult};
pub use error::{Error, Result};
pub use graph::{AggregationKind, FeatureMatrix, Graph, LoadOptions, NodeId, Normalization};
pub use homophily::HomophilyReport;
pub use stats::{Alternative, TTestResult};
pub use synthgen::{CsbmhSample, FeatureSource, HomophilyGenSpec};
