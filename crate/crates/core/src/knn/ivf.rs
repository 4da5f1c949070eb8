use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TopK;
use crate::types::{similarity, FeatureMatrix};

/// Inverted-file settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IvfConfig {
    /// Number of lists; `None` picks `ceil(sqrt(n))`, which balances the
    /// centroid scan against the list scan.
    pub lists: Option<usize>,
    /// Lists scanned per query, nearest centroid first.
    pub probes: usize,
    /// Lloyd iterations of spherical k-means.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for IvfConfig {
    fn default() -> Self {
        Self { lists: None, probes: 8, iterations: 8, seed: 0 }
    }
}

/// Rows bucketed by their most similar k-means centroid.
///
/// Queries only look inside the `probes` lists whose centroids are most
/// similar, so results are approximate unless every list is probed. Cost is
/// `O(n^1.5 d)` for both build and search with the default list count.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    d: usize,
    centroids: Vec<f32>,
    offsets: Vec<usize>,
    members: Vec<u32>,
}

impl IvfIndex {
    pub fn build(features: &FeatureMatrix, config: &IvfConfig) -> Self {
        let n = features.n();
        let d = features.d();
        let lists = config.lists.unwrap_or_else(|| ceil_sqrt(n)).clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut centroids = Vec::with_capacity(lists * d);
        let mut seeds = index::sample(&mut rng, n, lists).into_vec();
        seeds.sort_unstable();
        for i in seeds {
            centroids.extend_from_slice(features.row(i));
        }

        let mut assignment = vec![0u32; n];
        let mut sums = vec![0.0f64; lists * d];
        let mut counts = vec![0usize; lists];
        for _ in 0..config.iterations {
            assign(features, &centroids, &mut assignment);
            sums.fill(0.0);
            counts.fill(0);
            for (i, &c) in assignment.iter().enumerate() {
                let c = c as usize;
                counts[c] += 1;
                for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(features.row(i)) {
                    *s += f64::from(v);
                }
            }
            for c in 0..lists {
                let sum = &sums[c * d..(c + 1) * d];
                let norm = libm::sqrt(sum.iter().map(|v| v * v).sum());
                // Empty or degenerate lists keep their previous centroid.
                if counts[c] > 0 && norm > 1e-12 {
                    for (o, &s) in centroids[c * d..(c + 1) * d].iter_mut().zip(sum) {
                        *o = (s / norm) as f32;
                    }
                }
            }
        }
        assign(features, &centroids, &mut assignment);

        let mut offsets = vec![0usize; lists + 1];
        for &c in &assignment {
            offsets[c as usize + 1] += 1;
        }
        for c in 0..lists {
            offsets[c + 1] += offsets[c];
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; n];
        for (i, &c) in assignment.iter().enumerate() {
            members[fill[c as usize]] = i as u32;
            fill[c as usize] += 1;
        }
        Self { d, centroids, offsets, members }
    }

    pub fn num_lists(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Same output contract as [`super::exact_rows`]. At least `probes`
    /// lists are scanned, and more if that is needed to find `k`
    /// candidates. `features` must be the matrix the index was built from.
    pub fn query_rows(
        &self,
        features: &FeatureMatrix,
        k: usize,
        probes: usize,
        rows: Range<usize>,
        neighbors: &mut [u32],
        sims: &mut [f32],
    ) {
        if k == 0 {
            return;
        }
        let lists = self.num_lists();
        let mut top = TopK::new(k);
        let mut order: Vec<(f32, u32)> = Vec::with_capacity(lists);
        for q in rows.clone() {
            let query = features.row(q);
            order.clear();
            order.extend(
                self.centroids
                    .chunks_exact(self.d)
                    .enumerate()
                    .map(|(c, centroid)| (similarity(query, centroid), c as u32)),
            );
            order.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            top.reset();
            let mut seen = 0;
            for (rank, &(_, c)) in order.iter().enumerate() {
                if rank >= probes && seen >= k {
                    break;
                }
                let c = c as usize;
                for &p in &self.members[self.offsets[c]..self.offsets[c + 1]] {
                    if p as usize != q {
                        top.push(similarity(query, features.row(p as usize)), p);
                        seen += 1;
                    }
                }
            }
            let off = (q - rows.start) * k;
            top.write_sorted(&mut neighbors[off..off + k], &mut sims[off..off + k]);
        }
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r < n {
        r += 1;
    }
    r
}

fn assign(features: &FeatureMatrix, centroids: &[f32], out: &mut [u32]) {
    let d = features.d();
    for (i, slot) in out.iter_mut().enumerate() {
        let row = features.row(i);
        let mut best = (f32::NEG_INFINITY, 0u32);
        for (c, centroid) in centroids.chunks_exact(d).enumerate() {
            let s = similarity(row, centroid);
            if s > best.0 {
                best = (s, c as u32);
            }
        }
        *slot = best.1;
    }
}
