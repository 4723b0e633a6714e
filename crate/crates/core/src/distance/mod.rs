//! Distance predictors: turning goal-conditioned value signals (or positions)
//! into step distances `d̂(s, g) ≥ 1`.
//!
//! Anything implementing [`Distance`] can drive graph construction and the
//! planner. [`DistancePredictor`] is the standard implementation: it pairs a
//! [`RewardConvention`] with an optional raw [`ValueSource`].

mod transform;

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::TrajectoryDataset;

pub use transform::{
    l2_position_distance, per_step_penalty_to_distance, quasimetric_passthrough,
    sparse_terminal_to_distance, DEFAULT_EPSILON_CLIP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("discount factor must lie strictly inside (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("non-finite predictor output {value}")]
    NonFinite { value: f64 },
    #[error("state dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("position slice {start}..{end} invalid for {dim}-dimensional state")]
    SliceOutOfRange { start: usize, end: usize, dim: usize },
    #[error("invalid predictor configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset has no nonzero consecutive step to measure")]
    NoSteps,
    #[error("value source failed: {0}")]
    Source(String),
}

/// Discount factor `γ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiscountFactor(f64);

impl DiscountFactor {
    pub fn new(gamma: f64) -> Result<Self, DistanceError> {
        if gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(DistanceError::InvalidGamma(gamma))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A finite goal-conditioned value prediction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ValueEstimate(f64);

impl ValueEstimate {
    pub fn new(value: f64) -> Result<Self, DistanceError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(DistanceError::NonFinite { value })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Predicted number of environment steps, always finite and `≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StepDistance(f64);

impl StepDistance {
    /// Lower-bounds a finite raw distance at one step.
    pub(crate) fn clamped(raw: f64) -> Self {
        debug_assert!(raw.is_finite(), "raw distance {raw}");
        Self(raw.max(1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for StepDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardConvention {
    /// Reward 1 only at the goal.
    SparseTerminal,
    /// Reward −1 until the goal is reached.
    PerStepPenalty,
    /// The source already predicts steps.
    QuasiMetric,
    /// Position distance normalized by the mean dataset step length.
    EuclideanNormalized,
}

impl RewardConvention {
    pub fn needs_source(self) -> bool {
        !matches!(self, RewardConvention::EuclideanNormalized)
    }
}

/// SHA-256 digest identifying a predictor (or any cached artifact's inputs).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    /// Digest over several labelled parts, order-sensitive.
    pub fn combine(parts: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        Self(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &self.to_hex()[..16])
    }
}

/// Result of one predictor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub distance: StepDistance,
    /// The raw signal fell outside the invertible range and was clipped.
    pub clipped: bool,
}

/// Error from a batched query, carrying the offending pair's position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("pair {index} of batch: {source}")]
pub struct BatchError {
    pub index: usize,
    pub source: DistanceError,
}

/// A queryable step-distance signal `d̂(s, g)`. Implementations must be pure:
/// the same pair always yields the same answer, and batch evaluation must
/// match element-wise scalar evaluation exactly.
pub trait Distance: Sync {
    fn evaluate(&self, state: &[f32], goal: &[f32]) -> Result<Evaluation, DistanceError>;

    fn evaluate_batch(&self, pairs: &[(&[f32], &[f32])]) -> Result<Vec<Evaluation>, BatchError> {
        pairs
            .iter()
            .enumerate()
            .map(|(index, (s, g))| self.evaluate(s, g).map_err(|source| BatchError { index, source }))
            .collect()
    }

    fn distance(&self, state: &[f32], goal: &[f32]) -> Result<f64, DistanceError> {
        Ok(self.evaluate(state, goal)?.distance.get())
    }

    fn fingerprint(&self) -> Fingerprint;
}

impl<D: Distance + ?Sized> Distance for &D {
    fn evaluate(&self, state: &[f32], goal: &[f32]) -> Result<Evaluation, DistanceError> {
        (**self).evaluate(state, goal)
    }
    fn evaluate_batch(&self, pairs: &[(&[f32], &[f32])]) -> Result<Vec<Evaluation>, BatchError> {
        (**self).evaluate_batch(pairs)
    }
    fn fingerprint(&self) -> Fingerprint {
        (**self).fingerprint()
    }
}

/// Raw goal-conditioned signal: a value estimate, or a quasi-metric distance.
pub trait ValueSource: Send + Sync {
    fn value(&self, state: &[f32], goal: &[f32]) -> Result<f64, DistanceError>;

    fn values(&self, pairs: &[(&[f32], &[f32])]) -> Result<Vec<f64>, BatchError> {
        pairs
            .iter()
            .enumerate()
            .map(|(index, (s, g))| self.value(s, g).map_err(|source| BatchError { index, source }))
            .collect()
    }

    /// Stable description of the source, hashed into the predictor fingerprint.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub convention: RewardConvention,
    pub gamma: DiscountFactor,
    pub epsilon_clip: f64,
    pub position_slice: Option<Range<usize>>,
    pub avg_step_length: Option<f64>,
}

impl PredictorConfig {
    fn describe(&self) -> String {
        format!(
            "convention={:?};gamma={:?};eps={:?};slice={:?};step={:?}",
            self.convention,
            self.gamma.get(),
            self.epsilon_clip,
            self.position_slice,
            self.avg_step_length
        )
    }
}

/// Standard predictor: a reward convention plus the value source it inverts.
#[derive(Clone)]
pub struct DistancePredictor {
    config: PredictorConfig,
    source: Option<Arc<dyn ValueSource>>,
}

impl fmt::Debug for DistancePredictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistancePredictor")
            .field("config", &self.config)
            .field("source", &self.source.as_ref().map(|s| s.describe()))
            .finish()
    }
}

impl DistancePredictor {
    pub fn new(
        config: PredictorConfig,
        source: Option<Arc<dyn ValueSource>>,
    ) -> Result<Self, DistanceError> {
        if !(config.epsilon_clip > 0.0 && config.epsilon_clip.is_finite()) {
            return Err(DistanceError::InvalidConfig(format!(
                "epsilon_clip must be positive, got {}",
                config.epsilon_clip
            )));
        }
        if config.convention.needs_source() && source.is_none() {
            return Err(DistanceError::InvalidConfig(format!(
                "{:?} requires a value source",
                config.convention
            )));
        }
        if config.convention == RewardConvention::EuclideanNormalized {
            let Some(slice) = &config.position_slice else {
                return Err(DistanceError::InvalidConfig("position slice missing".into()));
            };
            if slice.start >= slice.end {
                return Err(DistanceError::InvalidConfig(format!("empty slice {slice:?}")));
            }
            match config.avg_step_length {
                Some(l) if l > 0.0 && l.is_finite() => {}
                other => {
                    return Err(DistanceError::InvalidConfig(format!(
                        "average step length must be positive, got {other:?}"
                    )))
                }
            }
        }
        Ok(Self { config, source })
    }

    pub fn per_step_penalty(gamma: f64, source: Arc<dyn ValueSource>) -> Result<Self, DistanceError> {
        Self::with_convention(RewardConvention::PerStepPenalty, gamma, source)
    }

    pub fn sparse_terminal(gamma: f64, source: Arc<dyn ValueSource>) -> Result<Self, DistanceError> {
        Self::with_convention(RewardConvention::SparseTerminal, gamma, source)
    }

    pub fn quasimetric(source: Arc<dyn ValueSource>) -> Result<Self, DistanceError> {
        Self::with_convention(RewardConvention::QuasiMetric, 0.5, source)
    }

    pub fn euclidean(slice: Range<usize>, avg_step_length: f64) -> Result<Self, DistanceError> {
        Self::new(
            PredictorConfig {
                convention: RewardConvention::EuclideanNormalized,
                gamma: DiscountFactor::new(0.5)?,
                epsilon_clip: DEFAULT_EPSILON_CLIP,
                position_slice: Some(slice),
                avg_step_length: Some(avg_step_length),
            },
            None,
        )
    }

    fn with_convention(
        convention: RewardConvention,
        gamma: f64,
        source: Arc<dyn ValueSource>,
    ) -> Result<Self, DistanceError> {
        Self::new(
            PredictorConfig {
                convention,
                gamma: DiscountFactor::new(gamma)?,
                epsilon_clip: DEFAULT_EPSILON_CLIP,
                position_slice: None,
                avg_step_length: None,
            },
            Some(source),
        )
    }

    pub fn with_epsilon_clip(mut self, epsilon_clip: f64) -> Result<Self, DistanceError> {
        self.config.epsilon_clip = epsilon_clip;
        Self::new(self.config, self.source)
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    fn transform(&self, raw: f64) -> Result<Evaluation, DistanceError> {
        let c = &self.config;
        let (distance, clipped) = match c.convention {
            RewardConvention::SparseTerminal => {
                sparse_terminal_to_distance(ValueEstimate::new(raw)?, c.gamma, c.epsilon_clip)
            }
            RewardConvention::PerStepPenalty => {
                per_step_penalty_to_distance(ValueEstimate::new(raw)?, c.gamma, c.epsilon_clip)
            }
            RewardConvention::QuasiMetric => (quasimetric_passthrough(raw)?, false),
            RewardConvention::EuclideanNormalized => unreachable!("no raw signal"),
        };
        Ok(Evaluation { distance, clipped })
    }

    fn euclidean_eval(&self, state: &[f32], goal: &[f32]) -> Result<Evaluation, DistanceError> {
        let slice = self.config.position_slice.clone().expect("validated");
        let step = self.config.avg_step_length.expect("validated");
        Ok(Evaluation {
            distance: l2_position_distance(state, goal, slice, step)?,
            clipped: false,
        })
    }
}

impl Distance for DistancePredictor {
    fn evaluate(&self, state: &[f32], goal: &[f32]) -> Result<Evaluation, DistanceError> {
        match &self.source {
            None => self.euclidean_eval(state, goal),
            Some(src) => self.transform(src.value(state, goal)?),
        }
    }

    fn evaluate_batch(&self, pairs: &[(&[f32], &[f32])]) -> Result<Vec<Evaluation>, BatchError> {
        match &self.source {
            None => pairs
                .iter()
                .enumerate()
                .map(|(index, (s, g))| {
                    self.euclidean_eval(s, g).map_err(|source| BatchError { index, source })
                })
                .collect(),
            Some(src) => src
                .values(pairs)?
                .into_iter()
                .enumerate()
                .map(|(index, raw)| self.transform(raw).map_err(|source| BatchError { index, source }))
                .collect(),
        }
    }

    fn fingerprint(&self) -> Fingerprint {
        let src = self.source.as_ref().map(|s| s.describe()).unwrap_or_default();
        Fingerprint::combine(&[self.config.describe().as_bytes(), src.as_bytes()])
    }
}

/// Mean Euclidean length of consecutive within-trajectory steps over `slice`.
pub fn average_step_length(
    dataset: &TrajectoryDataset,
    slice: Range<usize>,
) -> Result<f64, DistanceError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for traj in dataset.trajectories() {
        for pair in traj.states().windows(2) {
            total += transform::position_norm(&pair[0], &pair[1], slice.clone())?;
            count += 1;
        }
    }
    if count == 0 || total == 0.0 {
        return Err(DistanceError::NoSteps);
    }
    Ok(total / count as f64)
}
