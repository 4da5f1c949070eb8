//! Pairwise-classification clustering for dense embeddings.
//!
//! The pipeline scores every sample with a rank-weighted neighborhood
//! density, pairs each sample with its most similar neighbor of higher
//! density, asks a small MLP whether each pair shares an identity, and reads
//! clusters off the accepted pairs as connected components. At most `n`
//! pairs are ever classified.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, threading
//! and the command line live in the `pairclust` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classifier;
pub mod density;
pub mod error;
pub mod features;
pub mod knn;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod types;

pub use classifier::{LayerDims, MlpClassifier, PairTrainingSet, Relation, SgdConfig};
pub use density::{find_pairs_via_density, original_density, rank_weighted_density, PowerWeighting};
pub use error::{Error, Result};
pub use features::FeatureMode;
pub use knn::{build_knn, BackendRegistry, KnnBackend};
pub use pipeline::{cluster, connected_components, ClusterConfig, EdgeList};
pub use types::{ClusterAssignment, DensityMode, DensityScores, FeatureMatrix, KnnGraph, LabelVector, PairSet};
