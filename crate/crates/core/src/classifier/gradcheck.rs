use super::{loss_and_gradient, MlpClassifier};
use crate::error::Result;

/// Compares the analytic cross-entropy gradient with central finite
/// differences over every parameter.
///
/// Returns `max_i |g_num - g_ana| / max(|g_num|, |g_ana|, 1e-8)`.
pub fn gradient_check(model: &MlpClassifier, batch: &[f64], labels: &[u8], epsilon: f64) -> Result<f64> {
    let (_, analytic) = loss_and_gradient(model, batch, labels)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, &ga) in analytic.iter().enumerate() {
        let orig = probe.parameters()[i];
        probe.parameters_mut()[i] = orig + epsilon;
        let plus = loss_and_gradient(&probe, batch, labels)?.0;
        probe.parameters_mut()[i] = orig - epsilon;
        let minus = loss_and_gradient(&probe, batch, labels)?.0;
        probe.parameters_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = (numeric - ga).abs() / numeric.abs().max(ga.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
