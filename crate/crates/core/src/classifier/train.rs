use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{axpy, MlpClassifier, PairTrainingSet, OUTPUTS};
use crate::error::{Error, Result};

/// Multiply the learning rate by `gamma` every `every` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecay {
    pub every: usize,
    pub gamma: f64,
}

/// Momentum SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Constant learning rate when `None`.
    pub step_decay: Option<StepDecay>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            batch_size: 2048,
            epochs: 60,
            seed: 0,
            step_decay: None,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.momentum)
            && self.weight_decay >= 0.0
            && self.weight_decay.is_finite()
            && self.batch_size > 0
            && self.step_decay.is_none_or(|s| s.every > 0 && s.gamma > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("SGD hyperparameters out of range".into()))
        }
    }

    fn rate_at(&self, epoch: usize) -> f64 {
        match self.step_decay {
            Some(s) => self.learning_rate * libm::pow(s.gamma, (epoch / s.every) as f64),
            None => self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy over each epoch's mini-batches, in epoch order.
    pub loss_trace: Vec<f64>,
}

/// Mean softmax cross-entropy of a batch and its gradient with respect to
/// every parameter (same layout as [`MlpClassifier::parameters`]).
///
/// `labels` holds 0 for different and 1 for same.
pub fn loss_and_gradient(model: &MlpClassifier, batch: &[f64], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
    let rows = model.rows(batch)?;
    if labels.len() != rows {
        return Err(Error::LengthMismatch { expected: rows, actual: labels.len() });
    }
    let mut grad = vec![0.0; model.params.len()];
    let loss = accumulate_gradient(model, batch, labels, &mut grad);
    Ok((loss, grad))
}

fn accumulate_gradient(model: &MlpClassifier, batch: &[f64], labels: &[u8], grad: &mut [f64]) -> f64 {
    let dims = model.dims;
    let (input, h1w, h2w) = (dims.input, dims.hidden1, dims.hidden2);
    let l = dims.layout();
    let p = &model.params;
    let rows = labels.len();
    let act = model.forward_cached(batch, rows);
    let scale = 1.0 / rows as f64;

    let mut loss = 0.0;
    let mut dlogits = vec![0.0; rows * OUTPUTS];
    for ((lg, dl), &y) in act.logits.chunks_exact(OUTPUTS).zip(dlogits.chunks_exact_mut(OUTPUTS)).zip(labels) {
        let m = lg[0].max(lg[1]);
        let e0 = libm::exp(lg[0] - m);
        let e1 = libm::exp(lg[1] - m);
        let lse = m + libm::log(e0 + e1);
        loss += lse - lg[y as usize];
        dl[0] = (e0 / (e0 + e1) - if y == 0 { 1.0 } else { 0.0 }) * scale;
        dl[1] = (e1 / (e0 + e1) - if y == 1 { 1.0 } else { 0.0 }) * scale;
    }

    // Output layer.
    let mut dz2 = vec![0.0; rows * h2w];
    {
        let (gw3, gb3) = split_grad(grad, &l.w3, &l.b3);
        let w3 = &p[l.w3.clone()];
        for ((dl, h2), dz) in dlogits.chunks_exact(OUTPUTS).zip(act.h2.chunks_exact(h2w)).zip(dz2.chunks_exact_mut(h2w))
        {
            for o in 0..OUTPUTS {
                gb3[o] += dl[o];
                axpy(dl[o], h2, &mut gw3[o * h2w..(o + 1) * h2w]);
                axpy(dl[o], &w3[o * h2w..(o + 1) * h2w], dz);
            }
            for (g, &h) in dz.iter_mut().zip(h2) {
                if h <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }

    // Second hidden layer.
    let mut dz1 = vec![0.0; rows * h1w];
    {
        let (gw2, gb2) = split_grad(grad, &l.w2, &l.b2);
        let w2 = &p[l.w2.clone()];
        for ((dz, h1), d1) in dz2.chunks_exact(h2w).zip(act.h1.chunks_exact(h1w)).zip(dz1.chunks_exact_mut(h1w)) {
            for (o, &g) in dz.iter().enumerate() {
                if g != 0.0 {
                    gb2[o] += g;
                    axpy(g, h1, &mut gw2[o * h1w..(o + 1) * h1w]);
                    axpy(g, &w2[o * h1w..(o + 1) * h1w], d1);
                }
            }
            for (g, &h) in d1.iter_mut().zip(h1) {
                if h <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }

    // First layer.
    {
        let (gw1, gb1) = split_grad(grad, &l.w1, &l.b1);
        for (dz, x) in dz1.chunks_exact(h1w).zip(batch.chunks_exact(input)) {
            for (o, &g) in dz.iter().enumerate() {
                if g != 0.0 {
                    gb1[o] += g;
                    axpy(g, x, &mut gw1[o * input..(o + 1) * input]);
                }
            }
        }
    }
    loss * scale
}

/// Weight and bias gradients of one layer; the bias range directly follows
/// the weight range.
fn split_grad<'g>(
    grad: &'g mut [f64],
    w: &core::ops::Range<usize>,
    b: &core::ops::Range<usize>,
) -> (&'g mut [f64], &'g mut [f64]) {
    debug_assert_eq!(w.end, b.start);
    let (gw, gb) = grad[w.start..b.end].split_at_mut(w.len());
    (gw, gb)
}

/// Trains `model` in place with seeded shuffled mini-batches.
///
/// Weight decay is added to the gradient (`g + decay * w`) for every
/// parameter, then the momentum buffer `v = momentum * v + g` is applied as
/// `w -= lr * v`.
pub fn train(model: &mut MlpClassifier, set: &PairTrainingSet, config: &SgdConfig) -> Result<TrainReport> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if set.input_dim() != model.input_dim() {
        return Err(Error::DimMismatch { expected: model.input_dim(), actual: set.input_dim() });
    }
    let width = set.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut velocity = vec![0.0; model.params.len()];
    let mut grad = vec![0.0; model.params.len()];
    let mut batch = Vec::with_capacity(config.batch_size * width);
    let mut labels = Vec::with_capacity(config.batch_size);
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.rate_at(epoch);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            labels.clear();
            for &i in chunk {
                batch.extend(set.features(i).iter().map(|&v| f64::from(v)));
                labels.push(set.labels[i]);
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = accumulate_gradient(model, &batch, &labels, &mut grad);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            epoch_loss += loss;
            batches += 1;
            for ((w, v), &g) in model.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v + g + config.weight_decay * *w;
                *w -= lr * *v;
            }
        }
        if model.params.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_trace.push(epoch_loss / batches as f64);
    }
    Ok(TrainReport { loss_trace })
}

/// Fraction of rows in `set` that `model` classifies correctly.
pub fn accuracy(model: &MlpClassifier, set: &PairTrainingSet) -> f64 {
    const CHUNK: usize = 1024;
    let mut correct = 0usize;
    let mut buf = Vec::new();
    for start in (0..set.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(set.len());
        buf.clear();
        for i in start..end {
            buf.extend(set.features(i).iter().map(|&v| f64::from(v)));
        }
        let logits = model.forward_cached(&buf, end - start).logits;
        for (l, &y) in logits.chunks_exact(OUTPUTS).zip(&set.labels[start..end]) {
            let same = super::decide([l[0], l[1]]) == super::Relation::Same;
            correct += usize::from(same == (y == 1));
        }
    }
    if set.is_empty() {
        0.0
    } else {
        correct as f64 / set.len() as f64
    }
}
