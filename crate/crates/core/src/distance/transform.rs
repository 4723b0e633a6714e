//! Closed-form value → step-distance transforms.
//!
//! Each transform returns the distance together with a flag telling whether
//! the raw value had to be clipped into the invertible range. Every output is
//! lower-bounded by one step: no transition completes with fewer than one
//! action.

use super::{DiscountFactor, DistanceError, StepDistance, ValueEstimate};

/// Default clipping margin applied to value predictions.
pub const DEFAULT_EPSILON_CLIP: f64 = 1e-3;

/// Sparse terminal reward (1 at the goal, 0 elsewhere): `V = γ^d`.
///
/// The value is clamped into `[ε, 1]` before inverting, so non-positive
/// values map to the (large, finite) distance `log_γ ε`.
pub fn sparse_terminal_to_distance(
    v: ValueEstimate,
    gamma: DiscountFactor,
    epsilon_clip: f64,
) -> (StepDistance, bool) {
    let raw = v.get();
    let clipped = raw.clamp(epsilon_clip, 1.0);
    let d = clipped.ln() / gamma.get().ln();
    (StepDistance::clamped(d), clipped != raw)
}

/// Per-step penalty (−1 per step until the goal): `V = −(1 − γ^d) / (1 − γ)`.
///
/// The value is clipped into `[−1/(1−γ) + ε, −ε]` before inverting.
pub fn per_step_penalty_to_distance(
    v: ValueEstimate,
    gamma: DiscountFactor,
    epsilon_clip: f64,
) -> (StepDistance, bool) {
    let g = gamma.get();
    let raw = v.get();
    let floor = -1.0 / (1.0 - g) + epsilon_clip;
    let clipped = raw.max(floor).min(-epsilon_clip);
    let d = (1.0 + (1.0 - g) * clipped).ln() / g.ln();
    (StepDistance::clamped(d), clipped != raw)
}

/// Quasi-metric heads already predict steps; only the lower bound applies.
pub fn quasimetric_passthrough(d_raw: f64) -> Result<StepDistance, DistanceError> {
    if !d_raw.is_finite() {
        return Err(DistanceError::NonFinite { value: d_raw });
    }
    Ok(StepDistance::clamped(d_raw))
}

/// Euclidean distance between the position slices of two states, measured
/// in average dataset steps.
pub fn l2_position_distance(
    s: &[f32],
    g: &[f32],
    slice: std::ops::Range<usize>,
    avg_step_length: f64,
) -> Result<StepDistance, DistanceError> {
    let norm = position_norm(s, g, slice)?;
    if !(avg_step_length > 0.0 && avg_step_length.is_finite()) {
        return Err(DistanceError::InvalidConfig(format!(
            "average step length must be positive and finite, got {avg_step_length}"
        )));
    }
    Ok(StepDistance::clamped(norm / avg_step_length))
}

/// `‖s[slice] − g[slice]‖₂` accumulated in f64.
pub(crate) fn position_norm(
    s: &[f32],
    g: &[f32],
    slice: std::ops::Range<usize>,
) -> Result<f64, DistanceError> {
    if s.len() != g.len() {
        return Err(DistanceError::DimensionMismatch {
            left: s.len(),
            right: g.len(),
        });
    }
    if slice.start >= slice.end || slice.end > s.len() {
        return Err(DistanceError::SliceOutOfRange {
            start: slice.start,
            end: slice.end,
            dim: s.len(),
        });
    }
    let sq: f64 = s[slice.clone()]
        .iter()
        .zip(&g[slice])
        .map(|(a, b)| {
            let d = f64::from(*b) - f64::from(*a);
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}
