//! Neighborhood density and density-guided pair selection.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{DensityMode, DensityScores, KnnGraph, PairSet};

/// Power rank weighting `w(j) = (k - j)^p` for neighbor ranks `j = 1..=k`.
///
/// `0^0` is taken as 1, so `p = 0` weights every neighbor equally. For `p > 0`
/// the last neighbor (`j = k`) has weight 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWeighting {
    k: usize,
    p: f64,
}

impl PowerWeighting {
    pub fn new(k: usize, p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidConfig("power must be finite and non-negative".into()));
        }
        Ok(Self { k, p })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    /// Weight of the neighbor at 1-based rank `j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        if self.p == 0.0 {
            1.0
        } else {
            libm::pow((self.k - j) as f64, self.p)
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (1..=self.k).map(|j| self.weight(j)).collect()
    }
}

/// Sum of each sample's top-k neighbor similarities.
pub fn original_density(graph: &KnnGraph) -> DensityScores {
    let values = (0..graph.n()).map(|i| graph.sims(i).iter().map(|&s| f64::from(s)).sum()).collect();
    DensityScores { values, mode: DensityMode::Original }
}

/// Rank-weighted density: similarities summed with weights that decay with
/// neighbor rank, so far neighbors (often outliers) count less.
pub fn rank_weighted_density(graph: &KnnGraph, weighting: &PowerWeighting) -> Result<DensityScores> {
    if weighting.k != graph.k() {
        return Err(Error::WeightingMismatch { weighting: weighting.k, graph: graph.k() });
    }
    let w = weighting.weights();
    let values =
        (0..graph.n()).map(|i| graph.sims(i).iter().zip(&w).map(|(&s, &wj)| wj * f64::from(s)).sum()).collect();
    Ok(DensityScores { values, mode: DensityMode::RankWeighted { power: weighting.p } })
}

/// Total order used for "higher density": density first, then the lower
/// index wins ties. Acyclic by construction. `-0.0` and `0.0` tie; NaN
/// (never produced from finite similarities) sorts by bit pattern.
#[inline]
pub fn density_order(density: &[f64], a: usize, b: usize) -> Ordering {
    let (x, y) = (density[a], density[b]);
    x.partial_cmp(&y).unwrap_or_else(|| x.total_cmp(&y)).then(b.cmp(&a))
}

/// Pairs every sample with its most similar neighbor of higher density.
/// Samples without such a neighbor contribute nothing, so at most `n` pairs
/// come out, sorted by sample index.
pub fn find_pairs_via_density(graph: &KnnGraph, density: &DensityScores) -> Result<PairSet> {
    if density.len() != graph.n() {
        return Err(Error::LengthMismatch { expected: graph.n(), actual: density.len() });
    }
    let d = &density.values;
    let pairs = (0..graph.n())
        .filter_map(|x| {
            graph
                .neighbors(x)
                .iter()
                .find(|&&y| density_order(d, y as usize, x) == Ordering::Greater)
                .map(|&y| (x as u32, y))
        })
        .collect();
    Ok(PairSet { pairs })
}
