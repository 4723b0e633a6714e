use crate::distance::{DiscountFactor, DistanceError, RewardConvention, ValueSource};

use super::OracleDistance;

/// Closed-form value functions generated from (optionally noisy) oracle
/// distances: `γ^d` for sparse terminal rewards, `−(1 − γ^d)/(1 − γ)` for
/// per-step penalties, and `d` itself for quasi-metric heads.
#[derive(Debug, Clone)]
pub struct SyntheticValue {
    oracle: OracleDistance,
    convention: RewardConvention,
    gamma: DiscountFactor,
}

impl SyntheticValue {
    pub fn new(
        oracle: OracleDistance,
        convention: RewardConvention,
        gamma: DiscountFactor,
    ) -> Result<Self, DistanceError> {
        if convention == RewardConvention::EuclideanNormalized {
            return Err(DistanceError::InvalidConfig(
                "euclidean distances do not come from a value source".into(),
            ));
        }
        Ok(Self {
            oracle,
            convention,
            gamma,
        })
    }

    pub fn value_for_steps(&self, d: f64) -> f64 {
        let g = self.gamma.get();
        match self.convention {
            RewardConvention::SparseTerminal => g.powf(d),
            RewardConvention::PerStepPenalty => -(1.0 - g.powf(d)) / (1.0 - g),
            RewardConvention::QuasiMetric => d,
            RewardConvention::EuclideanNormalized => unreachable!("rejected at construction"),
        }
    }
}

impl ValueSource for SyntheticValue {
    fn value(&self, state: &[f32], goal: &[f32]) -> Result<f64, DistanceError> {
        let maze = self.oracle.maze();
        let not_cell = |v: &[f32]| DistanceError::Source(format!("{v:?} is not a free maze cell"));
        let s = maze.cell_of(state).ok_or_else(|| not_cell(state))?;
        let g = maze.cell_of(goal).ok_or_else(|| not_cell(goal))?;
        Ok(self.value_for_steps(self.oracle.query(s, g)))
    }

    fn describe(&self) -> String {
        // The maze layout is part of the identity: a different maze means a
        // different value function.
        format!(
            "synthetic:{:?}:{:?}:noise={:?}:asym={}:seed={}:maze={}",
            self.convention,
            self.gamma.get(),
            self.oracle.noise(),
            self.oracle.asymmetric(),
            self.oracle.noise_seed(),
            crate::distance::Fingerprint::of(self.oracle.maze().to_text().as_bytes()).to_hex()
        )
    }
}
