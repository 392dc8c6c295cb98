use crate::data::{Dataset, Family};
use crate::error::{Error, Result};

use super::coef::CoefficientSet;

/// Predicted probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]`.
pub const PROB_CLIP: f64 = 1e-12;

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `2 Σ { y log(y/ŷ) + (1-y) log((1-y)/(1-ŷ)) }` with `0 log 0 = 0`.
pub fn binomial_deviance(y: &[f64], probs: &[f64]) -> f64 {
    let mut dev = 0.0;
    for (&yi, &pi) in y.iter().zip(probs) {
        let p = pi.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
        if yi > 0.0 {
            dev += yi * (yi / p).ln();
        }
        if yi < 1.0 {
            dev += (1.0 - yi) * ((1.0 - yi) / (1.0 - p)).ln();
        }
    }
    2.0 * dev
}

/// Deviance of a fitted logistic model on held-out rows. `test` must be
/// standardised with the training transform (see [`Dataset::standardize_like`]).
pub fn prediction_deviance(model: &CoefficientSet, test: &Dataset) -> Result<f64> {
    if test.family() != Family::Binomial {
        return Err(Error::WrongFamily("prediction deviance needs a binary response".into()));
    }
    if let Some(&j) = model.main.keys().find(|&&j| j == 0 || j > test.p()) {
        return Err(Error::IndexOutOfRange(format!("model variable {j} with p = {}", test.p())));
    }
    let probs: Vec<f64> = model.linear_predictor(test).into_iter().map(sigmoid).collect();
    Ok(binomial_deviance(test.y(), &probs))
}
