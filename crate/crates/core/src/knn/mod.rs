//! k-nearest-neighbor graphs under inner-product similarity.
//!
//! Every backend writes rows through [`TopK`], so the neighbor order is the
//! same total order everywhere: similarity descending, then index ascending.
//! Row ranges are independent; callers may split `0..n` across workers and
//! stitch the slices back together without changing the result.
//!
//! `exact` and `balltree` return the exact graph. `ivf` is approximate and
//! trades recall for sub-quadratic cost on large inputs.

mod ball_tree;
mod ivf;

use alloc::boxed::Box;
use alloc::collections::BinaryHeap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

pub use ball_tree::BallTree;
pub use ivf::{IvfConfig, IvfIndex};

use crate::error::{Error, Result};
use crate::types::{similarity, FeatureMatrix, KnnGraph};

/// Query rows per block in the exact scan.
const QUERY_BLOCK: usize = 32;
/// Database rows per block in the exact scan.
const DB_BLOCK: usize = 512;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    sim: f32,
    index: u32,
}

impl Candidate {
    /// `Less` when `self` ranks ahead of `other`.
    #[inline]
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other.sim.total_cmp(&self.sim).then(self.index.cmp(&other.index))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Heap order: the worst-ranked candidate is the maximum.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Bounded selection of the best `k` candidates.
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    pub(crate) fn reset(&mut self) {
        self.heap.clear();
    }

    #[inline]
    pub(crate) fn push(&mut self, sim: f32, index: u32) {
        let cand = Candidate { sim, index };
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand.rank_cmp(worst) == Ordering::Less {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    /// Similarity of the current k-th candidate once the buffer is full.
    #[inline]
    pub(crate) fn threshold(&self) -> Option<f32> {
        if self.heap.len() < self.k {
            None
        } else {
            self.heap.peek().map(|c| c.sim)
        }
    }

    /// Drains the buffer into `neighbors`/`sims` in rank order.
    pub(crate) fn write_sorted(&mut self, neighbors: &mut [u32], sims: &mut [f32]) {
        let sorted = core::mem::take(&mut self.heap).into_sorted_vec();
        for (slot, c) in sorted.iter().enumerate() {
            neighbors[slot] = c.index;
            sims[slot] = c.sim;
        }
    }
}

/// Rejects `k > n - 1`; every backend validates with this.
pub fn check_k(features: &FeatureMatrix, k: usize) -> Result<()> {
    let max = features.n() - 1;
    if k > max {
        return Err(Error::KTooLarge { k, max });
    }
    Ok(())
}

/// Fills the output rows for queries `rows` by a blocked exhaustive scan.
///
/// `neighbors` and `sims` hold exactly `rows.len() * k` slots.
pub fn exact_rows(features: &FeatureMatrix, k: usize, rows: Range<usize>, neighbors: &mut [u32], sims: &mut [f32]) {
    let n = features.n();
    debug_assert_eq!(neighbors.len(), rows.len() * k);
    debug_assert_eq!(sims.len(), rows.len() * k);
    if k == 0 {
        return;
    }
    let mut heaps: Vec<TopK> = Vec::new();
    let mut q0 = rows.start;
    while q0 < rows.end {
        let q1 = (q0 + QUERY_BLOCK).min(rows.end);
        heaps.clear();
        heaps.extend((q0..q1).map(|_| TopK::new(k)));
        let mut db0 = 0;
        while db0 < n {
            let db1 = (db0 + DB_BLOCK).min(n);
            for (q, heap) in (q0..q1).zip(heaps.iter_mut()) {
                let query = features.row(q);
                for j in db0..db1 {
                    if j != q {
                        heap.push(similarity(query, features.row(j)), j as u32);
                    }
                }
            }
            db0 = db1;
        }
        for (q, heap) in (q0..q1).zip(heaps.iter_mut()) {
            let off = (q - rows.start) * k;
            heap.write_sorted(&mut neighbors[off..off + k], &mut sims[off..off + k]);
        }
        q0 = q1;
    }
}

/// Exact k-NN graph: for each sample, the `k` other samples with the largest
/// inner products, most similar first, ties broken by ascending index.
pub fn build_knn(features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
    check_k(features, k)?;
    let n = features.n();
    let mut neighbors = vec![0u32; n * k];
    let mut sims = vec![0f32; n * k];
    exact_rows(features, k, 0..n, &mut neighbors, &mut sims);
    KnnGraph::new(n, k, neighbors, sims)
}

/// A source of k-NN graphs. Exact backends must reproduce [`build_knn`]
/// bit for bit; approximate ones only need to satisfy the graph invariants.
pub trait KnnBackend: Send + Sync {
    fn name(&self) -> &str;

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph>;
}

/// The blocked exhaustive scan.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactBackend;

impl KnnBackend for ExactBackend {
    fn name(&self) -> &str {
        "exact"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        build_knn(features, k)
    }
}

/// Exact search through a [`BallTree`]; sub-quadratic on clustered data.
#[derive(Debug, Clone, Copy)]
pub struct BallTreeBackend {
    pub leaf_size: usize,
}

impl Default for BallTreeBackend {
    fn default() -> Self {
        Self { leaf_size: ball_tree::DEFAULT_LEAF_SIZE }
    }
}

impl KnnBackend for BallTreeBackend {
    fn name(&self) -> &str {
        "balltree"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        check_k(features, k)?;
        let tree = BallTree::build(features, self.leaf_size);
        let n = features.n();
        let mut neighbors = vec![0u32; n * k];
        let mut sims = vec![0f32; n * k];
        tree.query_rows(features, k, 0..n, &mut neighbors, &mut sims);
        KnnGraph::new(n, k, neighbors, sims)
    }
}

/// Approximate search through an [`IvfIndex`] rebuilt on every call.
#[derive(Debug, Clone, Copy, Default)]
pub struct IvfBackend {
    pub config: IvfConfig,
}

impl KnnBackend for IvfBackend {
    fn name(&self) -> &str {
        "ivf"
    }

    fn search(&self, features: &FeatureMatrix, k: usize) -> Result<KnnGraph> {
        check_k(features, k)?;
        let index = IvfIndex::build(features, &self.config);
        let n = features.n();
        let mut neighbors = vec![0u32; n * k];
        let mut sims = vec![0f32; n * k];
        index.query_rows(features, k, self.config.probes, 0..n, &mut neighbors, &mut sims);
        KnnGraph::new(n, k, neighbors, sims)
    }
}

/// Name-indexed set of k-NN backends.
pub struct BackendRegistry {
    backends: Vec<Box<dyn KnnBackend>>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self { backends: Vec::new() }
    }

    /// Registers a backend, replacing any existing one with the same name.
    pub fn register(&mut self, backend: Box<dyn KnnBackend>) {
        self.backends.retain(|b| b.name() != backend.name());
        self.backends.push(backend);
    }

    pub fn get(&self, name: &str) -> Result<&dyn KnnBackend> {
        self.backends
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownBackend(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.backends.iter().map(|b| b.name())
    }
}

impl Default for BackendRegistry {
    /// `exact`, `balltree` and `ivf`.
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(ExactBackend));
        reg.register(Box::new(BallTreeBackend::default()));
        reg.register(Box::new(IvfBackend::default()));
        reg
    }
}

/// Looks up `backend` in `registry` and runs it.
pub fn knn_search_pluggable(
    features: &FeatureMatrix,
    k: usize,
    backend: &str,
    registry: &BackendRegistry,
) -> Result<KnnGraph> {
    registry.get(backend)?.search(features, k)
}
