//! Try-and-error learner modeling: per-style effectiveness as an exponential
//! moving average of normalized learning gain, blended with the questionnaire.

use thiserror::Error;

use super::model::LearnerModel;
use crate::profiler::{LearningStyle, argmax_style};

/// Smoothing factor of the effectiveness update.
pub const ALPHA: f64 = 0.3;
/// Weight of the questionnaire score in the blend; the rest goes to effectiveness.
pub const PROFILE_BLEND: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelerError {
    #[error("score {0} is outside [0, 100]")]
    OutOfRange(f64),
}

/// Gain mapped to [0, 1]: 0.5 means no change between pre- and post-test.
pub fn normalized_gain(pre_score: f64, post_score: f64) -> Result<f64, ModelerError> {
    for score in [pre_score, post_score] {
        if !(0.0..=100.0).contains(&score) {
            return Err(ModelerError::OutOfRange(score));
        }
    }
    let gain = ((post_score - pre_score) / 100.0).clamp(-1.0, 1.0);
    Ok((gain + 1.0) / 2.0)
}

/// One EMA step of a style's effectiveness.
pub fn updated_effectiveness(
    current: f64,
    pre_score: f64,
    post_score: f64,
) -> Result<f64, ModelerError> {
    let g = normalized_gain(pre_score, post_score)?;
    Ok(((1.0 - ALPHA) * current + ALPHA * g).clamp(0.0, 1.0))
}

/// Blend of questionnaire profile and measured effectiveness per style.
pub fn blend_score(model: &LearnerModel, style: LearningStyle) -> f64 {
    let profile = model
        .style_vector
        .map(|v| v.score(style) / 100.0)
        .unwrap_or(0.0);
    PROFILE_BLEND * profile + (1.0 - PROFILE_BLEND) * model.effectiveness(style)
}

/// Highest-blend style among those `allowed`, canonical order on ties.
/// Falls back to all styles when none is allowed.
pub fn blend_choice(model: &LearnerModel, allowed: impl Fn(LearningStyle) -> bool) -> LearningStyle {
    if !LearningStyle::ALL.into_iter().any(&allowed) {
        return argmax_style(|s| blend_score(model, s));
    }
    argmax_style(|s| {
        if allowed(s) {
            blend_score(model, s)
        } else {
            f64::NEG_INFINITY
        }
    })
}
