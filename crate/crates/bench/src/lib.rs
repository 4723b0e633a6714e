//! Shared fixtures for the planning benchmarks.

use std::sync::Arc;

use ttgs_core::dataset::{uniform_sample, VertexSet};
use ttgs_core::distance::{DiscountFactor, DistancePredictor, RewardConvention};
use ttgs_core::simenv::{generate_dataset, generate_maze, Layout, OracleDistance, Preset, Regime, SyntheticValue};

pub struct Fixture {
    pub oracle: OracleDistance,
    pub predictor: DistancePredictor,
    pub vertices: VertexSet,
}

/// Giant maze, stitching data, noisy per-step value and `m` uniform vertices.
pub fn giant(m: usize) -> Fixture {
    let oracle = OracleDistance::new(Arc::new(generate_maze(Layout::Preset(Preset::Giant)))).with_noise(0.1, true, 7);
    let dataset = generate_dataset(&oracle, Regime::Stitch, 50_000, 1).expect("dataset");
    let gamma = DiscountFactor::new(0.99).expect("gamma");
    let value = SyntheticValue::new(oracle.clone(), RewardConvention::PerStepPenalty, gamma).expect("value");
    let predictor = DistancePredictor::per_step_penalty(0.99, Arc::new(value)).expect("predictor");
    let vertices = uniform_sample(&dataset, m, 0).expect("vertices");
    Fixture {
        oracle,
        predictor,
        vertices,
    }
}
