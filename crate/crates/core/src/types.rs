//! Domain types shared by every stage of the pipeline.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared read-only between workers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rows with a norm below this are rejected by [`FeatureMatrix::normalize`].
pub const MIN_ROW_NORM: f64 = 1e-12;

/// Dense `n x d` row-major embedding store.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidShape(format!("n = {n} and d = {d} must both be >= 1")));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidShape(format!("n = {n} exceeds the u32 index range")));
        }
        if data.len() != n * d {
            return Err(Error::InvalidShape(format!("expected {} values for {n} x {d}, got {}", n * d, data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { n, d, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::InvalidShape(format!("row {i} has length {}, expected {d}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Scales every row to unit L2 norm so that inner product equals cosine
    /// similarity. Norms are computed in f64.
    pub fn normalize(&self) -> Result<Self> {
        let mut data = self.data.clone();
        for (i, row) in data.chunks_exact_mut(self.d).enumerate() {
            let norm = libm::sqrt(row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>());
            if norm < MIN_ROW_NORM {
                return Err(Error::ZeroNormRow(i));
            }
            for v in row.iter_mut() {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
        Ok(Self { n: self.n, d: self.d, data })
    }
}

/// Inner-product similarity of two feature rows.
///
/// f32 products are exact in f64 and are summed in eight lanes with a fixed
/// reduction order, so every caller that goes through this function sees
/// bit-identical similarities.
#[inline]
pub fn similarity(a: &[f32], b: &[f32]) -> f32 {
    const LANES: usize = 8;
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let mut tail = 0.0f64;
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += f64::from(x) * f64::from(y);
    }
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += f64::from(x[l]) * f64::from(y[l]);
        }
    }
    let sum = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    (sum + tail) as f32
}

/// Ground-truth class ids, one per sample. Ids need not be contiguous but
/// must be non-negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<i64>,
}

impl LabelVector {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l < 0) {
            return Err(Error::InvalidLabel { index, label });
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> i64 {
        self.labels[i]
    }

    /// Number of distinct class ids.
    pub fn num_classes(&self) -> usize {
        let mut sorted = self.labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len()
    }
}

/// Per-sample top-k neighbor lists, most similar first.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    neighbors: Vec<u32>,
    sims: Vec<f32>,
}

impl KnnGraph {
    /// Validates and wraps row-major `n x k` neighbor indices and similarities.
    pub fn new(n: usize, k: usize, neighbors: Vec<u32>, sims: Vec<f32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("n must be >= 1".into()));
        }
        if k > n - 1 {
            return Err(Error::KTooLarge { k, max: n - 1 });
        }
        if neighbors.len() != n * k || sims.len() != n * k {
            return Err(Error::InvalidGraph(format!(
                "expected {} entries, got {} neighbors and {} sims",
                n * k,
                neighbors.len(),
                sims.len()
            )));
        }
        let graph = Self { n, k, neighbors, sims };
        let mut scratch = Vec::with_capacity(k);
        for i in 0..n {
            let idx = graph.neighbors(i);
            let s = graph.sims(i);
            scratch.clear();
            for (&j, &sim) in idx.iter().zip(s) {
                if j as usize >= n {
                    return Err(Error::InvalidGraph(format!("row {i}: neighbor {j} out of range")));
                }
                if j as usize == i {
                    return Err(Error::InvalidGraph(format!("row {i} lists itself")));
                }
                if !sim.is_finite() {
                    return Err(Error::InvalidGraph(format!("row {i}: non-finite similarity")));
                }
                scratch.push(j);
            }
            for w in 0..k.saturating_sub(1) {
                let ordered = s[w] > s[w + 1] || (s[w] == s[w + 1] && idx[w] < idx[w + 1]);
                if !ordered {
                    return Err(Error::InvalidGraph(format!("row {i} is not sorted at position {w}")));
                }
            }
            scratch.sort_unstable();
            if scratch.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("row {i} repeats a neighbor")));
            }
        }
        Ok(graph)
    }

    /// A graph with no neighbors (`k = 0`).
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, 0, Vec::new(), Vec::new())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn sims(&self, i: usize) -> &[f32] {
        &self.sims[i * self.k..(i + 1) * self.k]
    }

    pub fn neighbor_slice(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn sim_slice(&self) -> &[f32] {
        &self.sims
    }
}

/// How a [`DensityScores`] vector was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    Original,
    RankWeighted { power: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityScores {
    pub values: Vec<f64>,
    pub mode: DensityMode,
}

impl DensityScores {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Directed candidate pairs `(sample, higher-density neighbor)`, sorted by
/// sample index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pub pairs: Vec<(u32, u32)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A partition of `0..n` into clusters with ids `0..num_clusters`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    assignment: Vec<u32>,
    num_clusters: usize,
}

impl ClusterAssignment {
    /// Accepts any cluster ids and relabels them contiguously in order of
    /// first appearance.
    pub fn from_raw<T: Copy + Ord>(raw: &[T]) -> Self {
        let mut ids = BTreeMap::new();
        let assignment = raw
            .iter()
            .map(|&c| {
                let next = ids.len() as u32;
                *ids.entry(c).or_insert(next)
            })
            .collect();
        Self { assignment, num_clusters: ids.len() }
    }

    /// Wraps ids that must already be exactly `0..num_clusters`.
    pub fn new(assignment: Vec<u32>) -> Result<Self> {
        let num_clusters = assignment.iter().max().map_or(0, |&m| m as usize + 1);
        let mut seen = vec![false; num_clusters];
        for &c in &assignment {
            seen[c as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidShape(format!("cluster id {missing} is unused")));
        }
        Ok(Self { assignment, num_clusters })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.assignment
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_clusters];
        for &c in &self.assignment {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn num_singletons(&self) -> usize {
        self.cluster_sizes().iter().filter(|&&s| s == 1).count()
    }
}
