//! Pairwise and BCubed precision / recall / F-score.
//!
//! Both are computed from the cluster x class contingency table, which is
//! built by sorting, so the cost is `O(n log n)` rather than quadratic.
//! Pair counts are unordered (`n choose 2`) and held in `u128`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::types::{ClusterAssignment, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Scores {
    fn new(precision: f64, recall: f64) -> Self {
        Self { precision, recall, f: harmonic_mean(precision, recall) }
    }
}

/// `2PR / (P + R)`, or 0 when both are 0.
pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs sharing both a cluster and a class.
    pub true_positive: u128,
    /// Pairs sharing a cluster.
    pub predicted_positive: u128,
    /// Pairs sharing a class.
    pub actual_positive: u128,
}

#[inline]
fn choose2(c: usize) -> u128 {
    let c = c as u128;
    c * c.saturating_sub(1) / 2
}

/// Sizes of the runs of equal values in a sorted slice.
fn run_lengths<T: PartialEq>(sorted: &[T]) -> impl Iterator<Item = (&T, usize)> + '_ {
    let mut i = 0;
    core::iter::from_fn(move || {
        if i >= sorted.len() {
            return None;
        }
        let start = i;
        while i < sorted.len() && sorted[i] == sorted[start] {
            i += 1;
        }
        Some((&sorted[start], i - start))
    })
}

struct Contingency<A, B> {
    /// `(cluster, class)` per sample, sorted.
    cells: Vec<(A, B)>,
    cluster_sizes: BTreeMap<A, usize>,
    class_sizes: BTreeMap<B, usize>,
}

impl<A: Ord + Copy, B: Ord + Copy> Contingency<A, B> {
    fn build(predicted: &[A], truth: &[B]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::LengthMismatch { expected: truth.len(), actual: predicted.len() });
        }
        if predicted.is_empty() {
            return Err(Error::InvalidShape("cannot score an empty labelling".into()));
        }
        let mut cells: Vec<(A, B)> = predicted.iter().copied().zip(truth.iter().copied()).collect();
        cells.sort_unstable();
        let mut cluster_sizes = BTreeMap::new();
        let mut class_sizes = BTreeMap::new();
        for &(a, b) in &cells {
            *cluster_sizes.entry(a).or_insert(0) += 1;
            *class_sizes.entry(b).or_insert(0) += 1;
        }
        Ok(Self { cells, cluster_sizes, class_sizes })
    }
}

/// Raw pair counts behind the pairwise score.
pub fn pair_counts<A: Ord + Copy, B: Ord + Copy>(predicted: &[A], truth: &[B]) -> Result<PairCounts> {
    let t = Contingency::build(predicted, truth)?;
    Ok(PairCounts {
        true_positive: run_lengths(&t.cells).map(|(_, c)| choose2(c)).sum(),
        predicted_positive: t.cluster_sizes.values().map(|&c| choose2(c)).sum(),
        actual_positive: t.class_sizes.values().map(|&c| choose2(c)).sum(),
    })
}

/// Ratio with the empty-denominator convention: when nothing was predicted
/// (resp. nothing was there to find) the score is 1 if the other side is
/// empty too, and 0 otherwise.
fn ratio(num: u128, den: u128, other_den: u128) -> f64 {
    if den == 0 {
        if other_den == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

/// Pairwise precision, recall and F over unordered sample pairs, for any
/// pair of labellings.
pub fn pairwise_scores<A: Ord + Copy, B: Ord + Copy>(predicted: &[A], truth: &[B]) -> Result<Scores> {
    let c = pair_counts(predicted, truth)?;
    Ok(Scores::new(
        ratio(c.true_positive, c.predicted_positive, c.actual_positive),
        ratio(c.true_positive, c.actual_positive, c.predicted_positive),
    ))
}

/// BCubed precision, recall and F for any pair of labellings.
pub fn bcubed_scores<A: Ord + Copy, B: Ord + Copy>(predicted: &[A], truth: &[B]) -> Result<Scores> {
    let t = Contingency::build(predicted, truth)?;
    let mut precision = 0.0;
    let mut recall = 0.0;
    // Each of the `c` samples in a cell has |C & L| = c.
    for (&(a, b), c) in run_lengths(&t.cells) {
        let c2 = (c * c) as f64;
        precision += c2 / t.cluster_sizes[&a] as f64;
        recall += c2 / t.class_sizes[&b] as f64;
    }
    let n = predicted.len() as f64;
    Ok(Scores::new(precision / n, recall / n))
}

pub fn pairwise_fscore(predicted: &ClusterAssignment, truth: &LabelVector) -> Result<Scores> {
    pairwise_scores(predicted.as_slice(), truth.as_slice())
}

pub fn bcubed_fscore(predicted: &ClusterAssignment, truth: &LabelVector) -> Result<Scores> {
    bcubed_scores(predicted.as_slice(), truth.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationReport {
    pub pairwise: Scores,
    pub bcubed: Scores,
    pub num_clusters: usize,
    pub num_singletons: usize,
}

pub fn evaluate(predicted: &ClusterAssignment, truth: &LabelVector) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        pairwise: pairwise_fscore(predicted, truth)?,
        bcubed: bcubed_fscore(predicted, truth)?,
        num_clusters: predicted.num_clusters(),
        num_singletons: predicted.num_singletons(),
    })
}
