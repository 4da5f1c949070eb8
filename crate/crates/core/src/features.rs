//! Context-enriched sample features and pair features for the classifier.
//!
//! The weighted-neighbor feature of sample `i` is its own feature plus the
//! similarity-weighted sum of its k-NN features. It is not re-normalized
//! unless asked to: its magnitude carries how strongly the neighborhood
//! agrees.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::types::{FeatureMatrix, KnnGraph, MIN_ROW_NORM};

/// Which per-sample features are concatenated into a pair feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMode {
    /// `[f_a, f_b]`
    Original,
    /// `[f'_a, f'_b]`
    WeightedNeighbor,
    /// `[f_a, f'_a, f_b, f'_b]`
    Combined,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [FeatureMode::Original, FeatureMode::WeightedNeighbor, FeatureMode::Combined];

    /// Length of a pair feature for `d`-dimensional embeddings.
    pub fn input_dim(self, d: usize) -> usize {
        match self {
            FeatureMode::Original | FeatureMode::WeightedNeighbor => 2 * d,
            FeatureMode::Combined => 4 * d,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Original => "original",
            FeatureMode::WeightedNeighbor => "weighted-neighbor",
            FeatureMode::Combined => "combined",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(FeatureMode::Original),
            "weighted-neighbor" => Ok(FeatureMode::WeightedNeighbor),
            "combined" => Ok(FeatureMode::Combined),
            other => Err(Error::InvalidConfig(alloc::format!("unknown feature mode `{other}`"))),
        }
    }
}

fn check_graph(features: &FeatureMatrix, graph: &KnnGraph) -> Result<()> {
    if graph.n() != features.n() {
        return Err(Error::LengthMismatch { expected: features.n(), actual: graph.n() });
    }
    Ok(())
}

fn accumulate(features: &FeatureMatrix, graph: &KnnGraph, i: usize, acc: &mut [f64]) {
    for (a, &v) in acc.iter_mut().zip(features.row(i)) {
        *a = f64::from(v);
    }
    for (&j, &s) in graph.neighbors(i).iter().zip(graph.sims(i)) {
        let s = f64::from(s);
        for (a, &v) in acc.iter_mut().zip(features.row(j as usize)) {
            *a += s * f64::from(v);
        }
    }
}

/// `f'_i = f_i + sum_j s_ij f_ij` over the k neighbors of `i`.
pub fn weighted_neighbor_feature(features: &FeatureMatrix, graph: &KnnGraph, i: usize) -> Result<Vec<f32>> {
    check_graph(features, graph)?;
    if i >= features.n() {
        return Err(Error::IndexOutOfRange { index: i, n: features.n() });
    }
    let mut acc = vec![0.0f64; features.d()];
    accumulate(features, graph, i, &mut acc);
    Ok(acc.iter().map(|&v| v as f32).collect())
}

/// Weighted-neighbor features for every sample, computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFeatures {
    d: usize,
    data: Vec<f32>,
}

impl ContextFeatures {
    /// With `renormalize`, each context row is scaled to unit norm.
    pub fn compute(features: &FeatureMatrix, graph: &KnnGraph, renormalize: bool) -> Result<Self> {
        check_graph(features, graph)?;
        let d = features.d();
        let mut data = vec![0f32; features.n() * d];
        let mut acc = vec![0.0f64; d];
        for (i, out) in data.chunks_exact_mut(d).enumerate() {
            accumulate(features, graph, i, &mut acc);
            let scale = if renormalize {
                let norm = libm::sqrt(acc.iter().map(|v| v * v).sum());
                if norm < MIN_ROW_NORM {
                    1.0
                } else {
                    1.0 / norm
                }
            } else {
                1.0
            };
            for (o, &a) in out.iter_mut().zip(&acc) {
                *o = (a * scale) as f32;
            }
        }
        Ok(Self { d, data })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Assembles pair features from the original and precomputed context rows.
#[derive(Debug, Clone, Copy)]
pub struct PairFeaturizer<'a> {
    features: &'a FeatureMatrix,
    context: &'a ContextFeatures,
    mode: FeatureMode,
}

impl<'a> PairFeaturizer<'a> {
    pub fn new(features: &'a FeatureMatrix, context: &'a ContextFeatures, mode: FeatureMode) -> Result<Self> {
        if context.n() != features.n() || context.d() != features.d() {
            return Err(Error::LengthMismatch { expected: features.n(), actual: context.n() });
        }
        Ok(Self { features, context, mode })
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn input_dim(&self) -> usize {
        self.mode.input_dim(self.features.d())
    }

    fn check(&self, a: usize, b: usize) -> Result<()> {
        let n = self.features.n();
        for index in [a, b] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        if a == b {
            return Err(Error::SameIndex(a));
        }
        Ok(())
    }

    fn halves(&self, i: usize) -> [Option<&[f32]>; 2] {
        match self.mode {
            FeatureMode::Original => [Some(self.features.row(i)), None],
            FeatureMode::WeightedNeighbor => [Some(self.context.row(i)), None],
            FeatureMode::Combined => [Some(self.features.row(i)), Some(self.context.row(i))],
        }
    }

    /// Writes the pair feature of `(a, b)` into `out`, which must have
    /// length [`Self::input_dim`].
    pub fn write(&self, a: usize, b: usize, out: &mut [f64]) -> Result<()> {
        self.check(a, b)?;
        if out.len() != self.input_dim() {
            return Err(Error::DimMismatch { expected: self.input_dim(), actual: out.len() });
        }
        let mut pos = 0;
        for part in self.halves(a).into_iter().chain(self.halves(b)).flatten() {
            for (o, &v) in out[pos..pos + part.len()].iter_mut().zip(part) {
                *o = f64::from(v);
            }
            pos += part.len();
        }
        Ok(())
    }

    pub fn pair(&self, a: usize, b: usize) -> Result<Vec<f32>> {
        self.check(a, b)?;
        let mut out = Vec::with_capacity(self.input_dim());
        for part in self.halves(a).into_iter().chain(self.halves(b)).flatten() {
            out.extend_from_slice(part);
        }
        Ok(out)
    }
}

/// One-off pair feature; recomputes the context rows it needs.
pub fn pair_feature(
    features: &FeatureMatrix,
    graph: &KnnGraph,
    a: usize,
    b: usize,
    mode: FeatureMode,
) -> Result<Vec<f32>> {
    check_graph(features, graph)?;
    let n = features.n();
    for index in [a, b] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    if a == b {
        return Err(Error::SameIndex(a));
    }
    let mut out = Vec::with_capacity(mode.input_dim(features.d()));
    for i in [a, b] {
        match mode {
            FeatureMode::Original => out.extend_from_slice(features.row(i)),
            FeatureMode::WeightedNeighbor => out.extend(weighted_neighbor_feature(features, graph, i)?),
            FeatureMode::Combined => {
                out.extend_from_slice(features.row(i));
                out.extend(weighted_neighbor_feature(features, graph, i)?);
            }
        }
    }
    Ok(out)
}
