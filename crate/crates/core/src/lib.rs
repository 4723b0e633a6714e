//! Test-time graph search over offline trajectory data: value-derived
//! distances, vertex selection, penalized shortest paths and subgoal
//! selection for frozen goal-conditioned policies.

mod codec;

pub mod dataset;
pub mod distance;
pub mod graph;
pub mod harness;
pub mod planner;
pub mod simenv;

pub use dataset::{Trajectory, TrajectoryDataset, VertexSet};
pub use distance::{Distance, DistancePredictor, Fingerprint, RewardConvention};
pub use graph::{GuidePath, PlanningGraph};
pub use planner::{DecisionKind, PlannerState, StepBudget, SubgoalDecision};
