use std::fmt::Write as _;
use std::time::Duration;

use pairclust_core::metrics::EvaluationReport;
use pairclust_core::pipeline::Stage;
use serde::{Deserialize, Serialize};

/// Wall time of each pipeline stage in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageTimings {
    pub normalize: f64,
    pub knn: f64,
    pub density: f64,
    pub pair_selection: f64,
    pub context_features: f64,
    pub classification: f64,
    pub components: f64,
}

impl StageTimings {
    pub fn record(&mut self, stage: Stage, elapsed: Duration) {
        let ms = elapsed.as_secs_f64() * 1e3;
        let slot = match stage {
            Stage::Normalize => &mut self.normalize,
            Stage::Knn => &mut self.knn,
            Stage::Density => &mut self.density,
            Stage::PairSelection => &mut self.pair_selection,
            Stage::ContextFeatures => &mut self.context_features,
            Stage::Classification => &mut self.classification,
            Stage::Components => &mut self.components,
        };
        *slot += ms;
    }

    pub fn total(&self) -> f64 {
        self.normalize
            + self.knn
            + self.density
            + self.pair_selection
            + self.context_features
            + self.classification
            + self.components
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterSummary {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub power: f64,
    pub mode: String,
    pub knn_backend: String,
    pub num_clusters: usize,
    pub num_singletons: usize,
    pub pairs_proposed: usize,
    pub pairs_accepted: usize,
    pub classifier_batches: usize,
    pub stage_timings_ms: StageTimings,
    pub peak_memory_estimate_bytes: u64,
}

/// Upper bound on the bytes the cluster stages hold at once, from the
/// shapes alone: input and normalized features, the k-NN graph, density,
/// pairs, context features, one inference batch with its hidden
/// activations, accepted edges and the assignment.
pub fn peak_memory_estimate(
    n: usize,
    d: usize,
    k: usize,
    input_dim: usize,
    hidden: (usize, usize),
    batch: usize,
) -> u64 {
    let (n, d, k, input, batch) = (n as u64, d as u64, k as u64, input_dim as u64, batch.min(n) as u64);
    let features = 2 * 4 * n * d;
    let graph = 8 * n * k;
    let density = 8 * n;
    let pairs = 8 * n;
    let context = 4 * n * d;
    let inference = 8 * batch * (input + hidden.0 as u64 + hidden.1 as u64 + 2);
    let edges = 8 * n;
    let assignment = 4 * n;
    features + graph + density + pairs + context + inference + edges + assignment
}

/// Metric report with the field names used in result tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationJson {
    #[serde(rename = "F_P")]
    pub f_p: f64,
    #[serde(rename = "Pre_P")]
    pub pre_p: f64,
    #[serde(rename = "Rec_P")]
    pub rec_p: f64,
    #[serde(rename = "F_B")]
    pub f_b: f64,
    #[serde(rename = "Pre_B")]
    pub pre_b: f64,
    #[serde(rename = "Rec_B")]
    pub rec_b: f64,
    #[serde(rename = "numClusters")]
    pub num_clusters: usize,
    #[serde(rename = "numSingletons")]
    pub num_singletons: usize,
    #[serde(rename = "n")]
    pub n: usize,
}

impl EvaluationJson {
    pub fn new(report: &EvaluationReport, n: usize) -> Self {
        Self {
            f_p: report.pairwise.f,
            pre_p: report.pairwise.precision,
            rec_p: report.pairwise.recall,
            f_b: report.bcubed.f,
            pre_b: report.bcubed.precision,
            rec_b: report.bcubed.recall,
            num_clusters: report.num_clusters,
            num_singletons: report.num_singletons,
            n,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<9} {:>9} {:>9} {:>9}", "metric", "precision", "recall", "F");
        let _ = writeln!(out, "{:<9} {:>9.4} {:>9.4} {:>9.4}", "pairwise", self.pre_p, self.rec_p, self.f_p);
        let _ = writeln!(out, "{:<9} {:>9.4} {:>9.4} {:>9.4}", "bcubed", self.pre_b, self.rec_b, self.f_b);
        let _ = writeln!(
            out,
            "clusters {} (singletons {}) over {} samples",
            self.num_clusters, self.num_singletons, self.n
        );
        out
    }
}
