//! Naive reference implementations used as test oracles.
//!
//! Each one is written independently of the optimized code it checks: full
//! sorts instead of heaps, quadratic loops instead of contingency tables,
//! union-find instead of BFS, scalar loops instead of the batched MLP.

#![allow(dead_code, clippy::needless_range_loop)]

use pairclust_core::classifier::{LayerDims, MlpClassifier};
use pairclust_core::types::{similarity, FeatureMatrix, KnnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Unit-norm Gaussian rows.
pub fn random_unit_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        data.extend(row.iter().map(|v| (v / norm) as f32));
    }
    FeatureMatrix::new(n, d, data).unwrap()
}

/// Rows drawn from a handful of directions, so many similarities tie.
pub fn random_tied_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let distinct = rng.random_range(1..=n.min(6));
    let base = random_unit_features(rng, distinct, d);
    let rows: Vec<Vec<f32>> = (0..n).map(|_| base.row(rng.random_range(0..distinct)).to_vec()).collect();
    FeatureMatrix::from_rows(&rows).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All `n - 1` candidates of every row, fully sorted by similarity
/// descending then index ascending, truncated to `k`.
pub fn brute_knn(features: &FeatureMatrix, k: usize) -> (Vec<u32>, Vec<f32>) {
    let n = features.n();
    let mut neighbors = Vec::with_capacity(n * k);
    let mut sims = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut all: Vec<(f32, u32)> =
            (0..n).filter(|&j| j != i).map(|j| (similarity(features.row(i), features.row(j)), j as u32)).collect();
        all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(s, j) in &all[..k] {
            neighbors.push(j);
            sims.push(s);
        }
    }
    (neighbors, sims)
}

/// A valid graph over random similarities, not derived from any features.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, k: usize) -> KnnGraph {
    let mut neighbors = Vec::with_capacity(n * k);
    let mut sims = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut others: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
        for s in 0..k {
            let pick = rng.random_range(s..others.len());
            others.swap(s, pick);
        }
        let mut row: Vec<(f32, u32)> = others[..k]
            .iter()
            .map(|&j| {
                // Coarse values so that ties occur.
                let s = (rng.random_range(-8i32..=16) as f32) / 16.0;
                (s, j)
            })
            .collect();
        row.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (s, j) in row {
            neighbors.push(j);
            sims.push(s);
        }
    }
    KnnGraph::new(n, k, neighbors, sims).unwrap()
}

pub fn naive_original_density(graph: &KnnGraph) -> Vec<f64> {
    let mut out = vec![0.0; graph.n()];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..graph.k() {
            *o += f64::from(graph.sims(i)[j]);
        }
    }
    out
}

/// Per-row scan for the first neighbor that beats `x` under
/// "higher density, lower index on ties".
pub fn naive_pairs(graph: &KnnGraph, density: &[f64]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for x in 0..graph.n() {
        for &y in graph.neighbors(x) {
            let yu = y as usize;
            let higher = density[yu] > density[x] || (density[yu] == density[x] && yu < x);
            if higher {
                out.push((x as u32, y));
                break;
            }
        }
    }
    out
}

pub fn naive_weighted_neighbor(features: &FeatureMatrix, graph: &KnnGraph, i: usize) -> Vec<f64> {
    let d = features.d();
    let mut out: Vec<f64> = features.row(i).iter().map(|&v| f64::from(v)).collect();
    for r in 0..graph.k() {
        let j = graph.neighbors(i)[r] as usize;
        let s = f64::from(graph.sims(i)[r]);
        for c in 0..d {
            out[c] += s * f64::from(features.row(j)[c]);
        }
    }
    out
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Component ids numbered by smallest member.
    pub fn labels(&mut self) -> Vec<u32> {
        let n = self.parent.len();
        let mut id_of_root = vec![u32::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if id_of_root[r] == u32::MAX {
                    id_of_root[r] = next;
                    next += 1;
                }
                id_of_root[r]
            })
            .collect()
    }
}

/// `(true positives, predicted positives, actual positives)` by enumerating
/// every unordered pair.
pub fn brute_pair_counts<A: PartialEq, B: PartialEq>(predicted: &[A], truth: &[B]) -> (u128, u128, u128) {
    let (mut tp, mut pp, mut ap) = (0u128, 0u128, 0u128);
    for i in 0..predicted.len() {
        for j in i + 1..predicted.len() {
            let same_cluster = predicted[i] == predicted[j];
            let same_class = truth[i] == truth[j];
            pp += same_cluster as u128;
            ap += same_class as u128;
            tp += (same_cluster && same_class) as u128;
        }
    }
    (tp, pp, ap)
}

/// Per-sample BCubed precision and recall.
pub fn brute_bcubed<A: PartialEq, B: PartialEq>(predicted: &[A], truth: &[B]) -> (f64, f64) {
    let n = predicted.len();
    let (mut p, mut r) = (0.0, 0.0);
    for i in 0..n {
        let cluster: Vec<usize> = (0..n).filter(|&j| predicted[j] == predicted[i]).collect();
        let class: Vec<usize> = (0..n).filter(|&j| truth[j] == truth[i]).collect();
        let both = cluster.iter().filter(|&&j| truth[j] == truth[i]).count() as f64;
        p += both / cluster.len() as f64;
        r += both / class.len() as f64;
    }
    (p / n as f64, r / n as f64)
}

/// Element-by-element forward pass over the flat parameter layout
/// `W1 b1 W2 b2 W3 b3`, weights row-major `(out, in)`.
pub fn scalar_forward(model: &MlpClassifier, x: &[f64]) -> [f64; 2] {
    let LayerDims { input, hidden1, hidden2 } = model.dims();
    let p = model.parameters();
    let mut at = 0;
    let mut layer = |x: &[f64], fan_in: usize, fan_out: usize, relu: bool| -> Vec<f64> {
        let w = &p[at..at + fan_in * fan_out];
        let b = &p[at + fan_in * fan_out..at + fan_in * fan_out + fan_out];
        at += fan_in * fan_out + fan_out;
        (0..fan_out)
            .map(|o| {
                let mut z = b[o];
                for i in 0..fan_in {
                    z += w[o * fan_in + i] * x[i];
                }
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    };
    let h1 = layer(x, input, hidden1, true);
    let h2 = layer(&h1, hidden1, hidden2, true);
    let out = layer(&h2, hidden2, 2, false);
    [out[0], out[1]]
}
