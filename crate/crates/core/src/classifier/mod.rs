//! Three-layer fully connected pair classifier.
//!
//! Layout: `input -> h1 -> relu -> h2 -> relu -> 2 logits`, logits ordered
//! `(different, same)`. All parameters live in one flat `f64` buffer in the
//! order `W1, b1, W2, b2, W3, b3`, weights row-major `(out, in)`.

mod gradcheck;
mod train;
mod training_set;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use gradcheck::gradient_check;
pub use train::{accuracy, loss_and_gradient, train, SgdConfig, StepDecay, TrainReport};
pub use training_set::{build_training_set, PairTrainingSet, TrainingSetConfig};

/// Number of output logits.
pub const OUTPUTS: usize = 2;

/// Widths of the three layers; the output width is always [`OUTPUTS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerDims {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
}

impl LayerDims {
    /// Largest default first hidden width.
    pub const MAX_DEFAULT_HIDDEN: usize = 128;

    /// Default hidden widths for a given pair-feature length:
    /// `h1 = min(128, 4 * input)`, `h2 = h1 / 2`.
    pub fn for_input(input: usize) -> Self {
        let hidden1 = input.saturating_mul(4).clamp(2, Self::MAX_DEFAULT_HIDDEN);
        Self { input, hidden1, hidden2: hidden1 / 2 }
    }

    pub fn new(input: usize, hidden1: usize, hidden2: usize) -> Result<Self> {
        if input == 0 || hidden1 == 0 || hidden2 == 0 {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(Self { input, hidden1, hidden2 })
    }

    pub fn num_parameters(&self) -> usize {
        let l = self.layout();
        l.b3.end
    }

    fn layout(&self) -> Layout {
        let w1 = 0..self.hidden1 * self.input;
        let b1 = w1.end..w1.end + self.hidden1;
        let w2 = b1.end..b1.end + self.hidden2 * self.hidden1;
        let b2 = w2.end..w2.end + self.hidden2;
        let w3 = b2.end..b2.end + OUTPUTS * self.hidden2;
        let b3 = w3.end..w3.end + OUTPUTS;
        Layout { w1, b1, w2, b2, w3, b3 }
    }
}

#[derive(Debug, Clone)]
struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
}

/// Same-or-different decision for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Different,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub relation: Relation,
    /// Softmax probability of [`Relation::Same`]; diagnostic only.
    pub prob_same: f64,
}

/// Argmax over `(different, same)`; exact ties resolve to `Different`.
#[inline]
pub fn decide(logits: [f64; 2]) -> Relation {
    if logits[1] > logits[0] {
        Relation::Same
    } else {
        Relation::Different
    }
}

/// Numerically stable softmax probability of the `same` logit.
#[inline]
pub fn prob_same(logits: [f64; 2]) -> f64 {
    1.0 / (1.0 + libm::exp(logits[0] - logits[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    dims: LayerDims,
    params: Vec<f64>,
}

/// Hidden activations kept for the backward pass.
pub(crate) struct Activations {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
}

impl MlpClassifier {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights and zero biases.
    pub fn new(dims: LayerDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; dims.num_parameters()];
        let l = dims.layout();
        for (range, fan_in, fan_out) in
            [(l.w1, dims.input, dims.hidden1), (l.w2, dims.hidden1, dims.hidden2), (l.w3, dims.hidden2, OUTPUTS)]
        {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            for p in &mut params[range] {
                *p = dist.sample(&mut rng);
            }
        }
        Self { dims, params }
    }

    pub fn zeros(dims: LayerDims) -> Self {
        Self { dims, params: vec![0.0; dims.num_parameters()] }
    }

    /// Rebuilds a model from a flat parameter buffer in layer order.
    pub fn from_parameters(dims: LayerDims, params: Vec<f64>) -> Result<Self> {
        if params.len() != dims.num_parameters() {
            return Err(Error::DimMismatch { expected: dims.num_parameters(), actual: params.len() });
        }
        if let Some(pos) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> LayerDims {
        self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn rows(&self, batch: &[f64]) -> Result<usize> {
        let width = self.dims.input;
        if !batch.len().is_multiple_of(width) {
            return Err(Error::DimMismatch { expected: width, actual: batch.len() % width });
        }
        Ok(batch.len() / width)
    }

    pub(crate) fn forward_cached(&self, batch: &[f64], rows: usize) -> Activations {
        let d = self.dims;
        let l = d.layout();
        let p = &self.params;
        let mut h1 = vec![0.0; rows * d.hidden1];
        dense(&p[l.w1], &p[l.b1], batch, d.input, &mut h1, true);
        let mut h2 = vec![0.0; rows * d.hidden2];
        dense(&p[l.w2], &p[l.b2], &h1, d.hidden1, &mut h2, true);
        let mut logits = vec![0.0; rows * OUTPUTS];
        dense(&p[l.w3], &p[l.b3], &h2, d.hidden2, &mut logits, false);
        Activations { h1, h2, logits }
    }

    /// Logits for a row-major `B x input` batch, `B x 2` row-major.
    pub fn forward(&self, batch: &[f64]) -> Result<Vec<f64>> {
        let rows = self.rows(batch)?;
        Ok(self.forward_cached(batch, rows).logits)
    }

    /// Threshold-free decisions for a batch of pair features.
    pub fn predict_pairs(&self, batch: &[f64]) -> Result<Vec<Prediction>> {
        let logits = self.forward(batch)?;
        Ok(logits
            .chunks_exact(OUTPUTS)
            .map(|l| {
                let l = [l[0], l[1]];
                Prediction { relation: decide(l), prob_same: prob_same(l) }
            })
            .collect())
    }
}

/// `out[b] = act(W x[b] + bias)` with `W` row-major `(out, in)`.
fn dense(w: &[f64], bias: &[f64], x: &[f64], in_dim: usize, out: &mut [f64], relu: bool) {
    let out_dim = bias.len();
    for (xr, or) in x.chunks_exact(in_dim).zip(out.chunks_exact_mut(out_dim)) {
        for ((o, wr), &b) in or.iter_mut().zip(w.chunks_exact(in_dim)).zip(bias) {
            let z = b + dot(wr, xr);
            *o = if relu && z < 0.0 { 0.0 } else { z };
        }
    }
}

/// Four-lane dot product; lets the compiler vectorize the reduction.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}
