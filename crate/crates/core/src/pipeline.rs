//! End-to-end clustering: density, pair selection, pair classification and
//! connected components.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::{MlpClassifier, Relation};
use crate::density::{find_pairs_via_density, rank_weighted_density, PowerWeighting};
use crate::error::{Error, Result};
use crate::features::{ContextFeatures, FeatureMode, PairFeaturizer};
use crate::knn::KnnBackend;
use crate::types::{ClusterAssignment, FeatureMatrix};

/// Undirected edges in canonical `(min, max)` form, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    edges: Vec<(u32, u32)>,
}

impl EdgeList {
    pub fn new<I: IntoIterator<Item = (u32, u32)>>(edges: I) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::SameIndex(a as usize));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self { edges: out })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_slice(&self) -> &[(u32, u32)] {
        &self.edges
    }
}

/// Breadth-first connected components. Component ids follow the smallest
/// member index, so isolated samples keep index order.
pub fn connected_components(n: usize, edges: &EdgeList) -> Result<ClusterAssignment> {
    // Compressed adjacency.
    let mut offsets = vec![0usize; n + 1];
    for &(a, b) in &edges.edges {
        for v in [a, b] {
            let v = v as usize;
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            offsets[v + 1] += 1;
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![0u32; offsets[n]];
    for &(a, b) in &edges.edges {
        adj[fill[a as usize]] = b;
        fill[a as usize] += 1;
        adj[fill[b as usize]] = a;
        fill[b as usize] += 1;
    }

    const UNSEEN: u32 = u32::MAX;
    let mut ids = vec![UNSEEN; n];
    let mut queue = VecDeque::new();
    let mut next = 0u32;
    for root in 0..n {
        if ids[root] != UNSEEN {
            continue;
        }
        ids[root] = next;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[offsets[v]..offsets[v + 1]] {
                if ids[w as usize] == UNSEEN {
                    ids[w as usize] = next;
                    queue.push_back(w as usize);
                }
            }
        }
        next += 1;
    }
    ClusterAssignment::new(ids)
}

/// Anything that can judge a batch of pair features.
pub trait PairClassifier {
    fn input_dim(&self) -> usize;

    /// One relation per row of the row-major `rows x input_dim` batch.
    fn classify(&self, batch: &[f64]) -> Result<Vec<Relation>>;
}

impl PairClassifier for MlpClassifier {
    fn input_dim(&self) -> usize {
        MlpClassifier::input_dim(self)
    }

    fn classify(&self, batch: &[f64]) -> Result<Vec<Relation>> {
        Ok(self.predict_pairs(batch)?.into_iter().map(|p| p.relation).collect())
    }
}

/// Inference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub power: f64,
    pub mode: FeatureMode,
    /// Pairs per classifier call.
    pub batch_size: usize,
    /// Scale rows to unit norm before anything else.
    pub normalize: bool,
    pub renormalize_context: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 5,
            power: 5.0,
            mode: FeatureMode::Combined,
            batch_size: 2048,
            normalize: true,
            renormalize_context: false,
        }
    }
}

/// Pipeline stages, reported to the observer as each one completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Normalize,
    Knn,
    Density,
    PairSelection,
    ContextFeatures,
    Classification,
    Components,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::Knn => "knn",
            Stage::Density => "density",
            Stage::PairSelection => "pair_selection",
            Stage::ContextFeatures => "context_features",
            Stage::Classification => "classification",
            Stage::Components => "components",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub assignment: ClusterAssignment,
    /// Pairs sent to the classifier; never more than `n`.
    pub pairs_proposed: usize,
    pub pairs_accepted: usize,
    /// Classifier calls made (one per batch).
    pub classifier_batches: usize,
}

/// Runs the full pipeline with a stage observer.
pub fn cluster_observed(
    features: &FeatureMatrix,
    config: &ClusterConfig,
    classifier: &dyn PairClassifier,
    knn: &dyn KnnBackend,
    on_stage: &mut dyn FnMut(Stage),
) -> Result<ClusterOutcome> {
    let d = features.d();
    let expected = config.mode.input_dim(d);
    if classifier.input_dim() != expected {
        return Err(Error::ModelMismatch(format!(
            "classifier expects {} inputs, {} features of dimension {d} give {expected}",
            classifier.input_dim(),
            config.mode
        )));
    }
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }

    let normalized;
    let features = if config.normalize {
        normalized = features.normalize()?;
        &normalized
    } else {
        features
    };
    on_stage(Stage::Normalize);

    let graph = knn.search(features, config.k)?;
    on_stage(Stage::Knn);

    let density = rank_weighted_density(&graph, &PowerWeighting::new(config.k, config.power)?)?;
    on_stage(Stage::Density);

    let pairs = find_pairs_via_density(&graph, &density)?;
    on_stage(Stage::PairSelection);

    let context = ContextFeatures::compute(features, &graph, config.renormalize_context)?;
    let featurizer = PairFeaturizer::new(features, &context, config.mode)?;
    on_stage(Stage::ContextFeatures);

    let mut accepted = Vec::new();
    let mut batch = vec![0.0; config.batch_size * expected];
    let mut classifier_batches = 0;
    for chunk in pairs.pairs.chunks(config.batch_size) {
        let buf = &mut batch[..chunk.len() * expected];
        for (&(a, b), row) in chunk.iter().zip(buf.chunks_exact_mut(expected)) {
            featurizer.write(a as usize, b as usize, row)?;
        }
        let relations = classifier.classify(buf)?;
        if relations.len() != chunk.len() {
            return Err(Error::LengthMismatch { expected: chunk.len(), actual: relations.len() });
        }
        classifier_batches += 1;
        accepted.extend(chunk.iter().zip(relations).filter(|(_, r)| *r == Relation::Same).map(|(&p, _)| p));
    }
    on_stage(Stage::Classification);

    let pairs_accepted = accepted.len();
    let edges = EdgeList::new(accepted)?;
    let assignment = connected_components(features.n(), &edges)?;
    on_stage(Stage::Components);

    Ok(ClusterOutcome { assignment, pairs_proposed: pairs.len(), pairs_accepted, classifier_batches })
}

/// [`cluster_observed`] without an observer.
pub fn cluster(
    features: &FeatureMatrix,
    config: &ClusterConfig,
    classifier: &dyn PairClassifier,
    knn: &dyn KnnBackend,
) -> Result<ClusterOutcome> {
    cluster_observed(features, config, classifier, knn, &mut |_| {})
}
