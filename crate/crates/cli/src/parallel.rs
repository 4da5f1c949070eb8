//! Row-parallel k-NN backends and batch-parallel inference.
//!
//! Every query row and every classified pair is computed independently, so
//! the parallel versions return exactly what the sequential ones do,
//! whatever the thread count.

use pairclust_core::classifier::Relation;
use pairclust_core::knn::{check_k, exact_rows, BallTree, IvfConfig, IvfIndex};
use pairclust_core::pipeline::PairClassifier;
use pairclust_core::{BackendRegistry, FeatureMatrix, KnnBackend, KnnGraph, MlpClassifier, Result};
use rayon::prelude::*;

use crate::error::CliError;

/// Query rows handed to one task.
const ROW_CHUNK: usize = 256;
/// Pairs handed to one inference task.
const PAIR_CHUNK: usize = 256;

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))
}

/// Runs `query(rows, neighbors, sims)` over row chunks in parallel.
fn search_rows<F>(features: &FeatureMatrix, k: usize, query: F) -> Result<KnnGraph>
where
    F: Fn(std::ops::Range<usize>, &mut [u32], &mut [f32]) + Sync,
{
    check_k(features, k)?;
    let n = features.n();
    let mut neighbors = vec![0u32; n * k];
    let mut sims = vec![0f32; n * k];
    if k > 0 {
        neighbors.par_chunks_mut(ROW_CHUNK * k).zip(sims.par_chunks_mut(ROW_CHUNK * k)).enumerate().for_each(
            |(c, (nb, s))| {
                let start = c * ROW_CHUNK;
                query(start..start + nb.len() / k, nb, s);
            },
        );
    }
    KnnGraph::new(n, k, neighbors, sims)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ParallelExact;

impl KnnBackend for ParallelExact {
    fn name(&self) -> &str {
        "exact"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        search_rows(features, k, |rows, nb, s| exact_rows(features, k, rows, nb, s))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParallelBallTree {
    pub leaf_size: usize,
}

impl KnnBackend for ParallelBallTree {
    fn name(&self) -> &str {
        "balltree"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        check_k(features, k)?;
        let tree = BallTree::build(features, self.leaf_size);
        search_rows(features, k, |rows, nb, s| tree.query_rows(features, k, rows, nb, s))
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ParallelIvf {
    pub config: IvfConfig,
}

impl KnnBackend for ParallelIvf {
    fn name(&self) -> &str {
        "ivf"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        check_k(features, k)?;
        let index = IvfIndex::build(features, &self.config);
        search_rows(features, k, |rows, nb, s| index.query_rows(features, k, self.config.probes, rows, nb, s))
    }
}

/// `exact`, `balltree` and `ivf`, each running on the current rayon pool.
pub fn parallel_registry() -> BackendRegistry {
    let mut reg = BackendRegistry::empty();
    reg.register(Box::new(ParallelExact));
    reg.register(Box::new(ParallelBallTree { leaf_size: pairclust_core::knn::BallTreeBackend::default().leaf_size }));
    reg.register(Box::new(ParallelIvf::default()));
    reg
}

/// Splits each classifier batch across the current rayon pool.
pub struct ParallelClassifier<'a>(pub &'a MlpClassifier);

impl PairClassifier for ParallelClassifier<'_> {
    fn input_dim(&self) -> usize {
        self.0.input_dim()
    }

    fn classify(&self, batch: &[f64]) -> Result<Vec<Relation>> {
        let width = self.0.input_dim();
        let parts: Vec<Vec<Relation>> =
            batch.par_chunks(PAIR_CHUNK * width).map(|chunk| self.0.classify(chunk)).collect::<Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    }
}
