use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{ContextFeatures, FeatureMode, PairFeaturizer};
use crate::knn::KnnBackend;
use crate::types::{FeatureMatrix, LabelVector};

/// Labelled pair features, row-major `len x input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTrainingSet {
    input_dim: usize,
    data: Vec<f32>,
    /// 1 for same class, 0 for different.
    pub labels: Vec<u8>,
    /// Source sample indices of each row.
    pub pairs: Vec<(u32, u32)>,
    /// Whether the negative count reached the balance target.
    pub balanced: bool,
    /// Neighborhood size at which hard negatives were collected.
    pub mining_k: usize,
}

impl PairTrainingSet {
    /// Wraps precomputed rows; `pairs` is left empty.
    pub fn from_parts(input_dim: usize, data: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        if input_dim == 0 || data.len() != labels.len() * input_dim {
            return Err(Error::DimMismatch { expected: labels.len() * input_dim, actual: data.len() });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidConfig("pair labels must be 0 or 1".into()));
        }
        Ok(Self { input_dim, data, labels, pairs: Vec::new(), balanced: true, mining_k: 0 })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn features(&self, i: usize) -> &[f32] {
        &self.data[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSetConfig {
    pub mode: FeatureMode,
    /// Neighborhood size of the graph behind weighted-neighbor features.
    pub k: usize,
    /// Negatives may fall short of positives by this fraction.
    pub balance_tolerance: f64,
    /// Maximum number of unordered positive pairs drawn per class.
    pub positive_cap: usize,
    /// First neighborhood size tried when mining hard negatives; doubled
    /// until enough negatives are found.
    pub initial_mining_k: usize,
    pub renormalize_context: bool,
    pub seed: u64,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::Combined,
            k: 5,
            balance_tolerance: 0.1,
            positive_cap: 200,
            initial_mining_k: 5,
            renormalize_context: false,
            seed: 0,
        }
    }
}

/// Builds a balanced pair training set.
///
/// Positives are intra-class pairs (at most `positive_cap` per class, drawn
/// uniformly). Negatives are hard negatives: k-NN neighbors carrying a
/// different label. The mining neighborhood grows until there are nearly as
/// many negatives as positives; the surplus is subsampled away. Every chosen
/// pair is emitted in both orientations.
///
/// If even `k = n - 1` yields too few negatives, the set is returned
/// unbalanced with `balanced = false`.
pub fn build_training_set(
    features: &FeatureMatrix,
    labels: &LabelVector,
    backend: &dyn KnnBackend,
    config: &TrainingSetConfig,
) -> Result<PairTrainingSet> {
    let n = features.n();
    if labels.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: labels.len() });
    }
    if !(0.0..1.0).contains(&config.balance_tolerance) {
        return Err(Error::InvalidConfig("balance tolerance must be in [0, 1)".into()));
    }
    if labels.num_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Positives, grouped by class in ascending label order.
    let mut by_label: Vec<(i64, u32)> = (0..n).map(|i| (labels.get(i), i as u32)).collect();
    by_label.sort_unstable();
    let mut positives: Vec<(u32, u32)> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end < n && by_label[end].0 == by_label[start].0 {
            end += 1;
        }
        let members: Vec<u32> = by_label[start..end].iter().map(|&(_, i)| i).collect();
        let mut class_pairs = Vec::new();
        for (a_pos, &a) in members.iter().enumerate() {
            for &b in &members[a_pos + 1..] {
                class_pairs.push((a, b));
            }
        }
        if class_pairs.len() > config.positive_cap {
            let mut picked = index::sample(&mut rng, class_pairs.len(), config.positive_cap).into_vec();
            picked.sort_unstable();
            class_pairs = picked.into_iter().map(|p| class_pairs[p]).collect();
        }
        positives.extend(class_pairs);
        start = end;
    }

    // Hard negatives from a growing neighborhood.
    let target = libm::ceil(positives.len() as f64 * (1.0 - config.balance_tolerance)) as usize;
    let mut mining_k = config.initial_mining_k.clamp(1, n - 1);
    let mut negatives;
    loop {
        let graph = backend.search(features, mining_k)?;
        negatives = Vec::new();
        for i in 0..n {
            for &j in graph.neighbors(i) {
                if labels.get(i) != labels.get(j as usize) {
                    let (a, b) = (i as u32, j);
                    negatives.push((a.min(b), a.max(b)));
                }
            }
        }
        negatives.sort_unstable();
        negatives.dedup();
        if negatives.len() >= target || mining_k == n - 1 {
            break;
        }
        mining_k = (mining_k * 2).min(n - 1);
    }
    let balanced = negatives.len() >= target;
    if negatives.len() > positives.len() {
        let mut picked = index::sample(&mut rng, negatives.len(), positives.len()).into_vec();
        picked.sort_unstable();
        negatives = picked.into_iter().map(|p| negatives[p]).collect();
    }

    // Pair features over the shared-k context graph.
    let graph = backend.search(features, config.k)?;
    let context = ContextFeatures::compute(features, &graph, config.renormalize_context)?;
    let featurizer = PairFeaturizer::new(features, &context, config.mode)?;
    let rows = 2 * (positives.len() + negatives.len());
    let mut data = Vec::with_capacity(rows * featurizer.input_dim());
    let mut out_labels = Vec::with_capacity(rows);
    let mut pairs = Vec::with_capacity(rows);
    for (set, label) in [(&positives, 1u8), (&negatives, 0u8)] {
        for &(a, b) in set.iter() {
            for (x, y) in [(a, b), (b, a)] {
                data.extend(featurizer.pair(x as usize, y as usize)?);
                out_labels.push(label);
                pairs.push((x, y));
            }
        }
    }
    Ok(PairTrainingSet { input_dim: featurizer.input_dim(), data, labels: out_labels, pairs, balanced, mining_k })
}
