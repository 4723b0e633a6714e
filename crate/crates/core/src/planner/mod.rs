//! Test-time subgoal planning around a frozen goal-conditioned policy.
//!
//! A guide path is computed once per episode. At every step the planner
//! locates the closest waypoint ahead of its last position, then hands the
//! policy either the goal itself (when within budget), the farthest waypoint
//! still within budget, or the next waypoint.

use std::error::Error as StdError;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{Distance, DistanceError};
use crate::graph::{
    nearest_vertex_from, nearest_vertex_to, shortest_path, GraphError, GuidePath, PlanningGraph,
};

/// Boxed failure reported by an environment or policy implementation.
pub type ExternalError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("distance query failed: {0}")]
    Distance(#[from] DistanceError),
    #[error("invalid step budget {0}")]
    InvalidBudget(f64),
    #[error("environment failed at step {step}: {source}")]
    Environment {
        step: usize,
        #[source]
        source: ExternalError,
    },
    #[error("policy failed at step {step}: {source}")]
    Policy {
        step: usize,
        #[source]
        source: ExternalError,
    },
}

/// Maximum predicted distance `T` between the agent and a chosen subgoal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StepBudget(f64);

impl StepBudget {
    pub fn new(t: f64) -> Result<Self, PlanError> {
        if t.is_finite() && t >= 1.0 {
            Ok(Self(t))
        } else {
            Err(PlanError::InvalidBudget(t))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionKind {
    FinalGoal,
    FarthestReachable,
    FallbackNext,
}

impl DecisionKind {
    pub fn code(self) -> char {
        match self {
            DecisionKind::FinalGoal => 'G',
            DecisionKind::FarthestReachable => 'R',
            DecisionKind::FallbackNext => 'F',
        }
    }
}

/// Outcome of the selection rule, independent of the waypoint states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub kind: DecisionKind,
    /// Waypoint index handed to the policy; `None` for the final goal.
    pub chosen_index: Option<usize>,
    pub updated_k: usize,
}

/// The selection rule over precomputed distances.
///
/// `deltas[ℓ]` is `d̂(s_cur, p_ℓ)` for `ℓ = 0..=L`; `delta_goal` is
/// `d̂(s_cur, g)`. Entries may be `+∞` for waypoints that were not evaluated.
pub fn select_from_distances(deltas: &[f64], delta_goal: f64, budget: f64, k_prev: usize) -> Selection {
    assert!(!deltas.is_empty(), "guide path has no waypoints");
    let last = deltas.len() - 1;
    assert!(k_prev <= last, "k_prev {k_prev} beyond last waypoint {last}");

    let closest = deltas
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (l, &d)| if d < best.1 { (l, d) } else { best })
        .0;
    let k = closest.max(k_prev);

    if delta_goal <= budget {
        return Selection {
            kind: DecisionKind::FinalGoal,
            chosen_index: None,
            updated_k: k,
        };
    }
    let farthest = (k + 1..=last).rev().find(|&l| deltas[l] <= budget);
    match farthest {
        Some(l) => Selection {
            kind: DecisionKind::FarthestReachable,
            chosen_index: Some(l),
            updated_k: k,
        },
        None => Selection {
            kind: DecisionKind::FallbackNext,
            chosen_index: Some((k + 1).min(last)),
            updated_k: k,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgoalDecision {
    pub subgoal: Vec<f32>,
    pub kind: DecisionKind,
    pub chosen_index: Option<usize>,
    pub updated_k: usize,
}

/// Per-episode planner state. The guide path never changes after planning.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    guide: GuidePath,
    k_prev: usize,
    goal: Vec<f32>,
    budget: StepBudget,
    window: Option<usize>,
}

impl PlannerState {
    pub fn new(guide: GuidePath, goal: Vec<f32>, budget: StepBudget) -> Self {
        Self {
            guide,
            k_prev: 0,
            goal,
            budget,
            window: None,
        }
    }

    /// Restricts per-step distance queries to waypoints
    /// `k_prev ..= k_prev + window`. Off by default.
    pub fn with_window(mut self, window: Option<usize>) -> Self {
        self.window = window;
        self
    }

    pub fn guide(&self) -> &GuidePath {
        &self.guide
    }

    pub fn k_prev(&self) -> usize {
        self.k_prev
    }

    pub fn goal(&self) -> &[f32] {
        &self.goal
    }

    pub fn budget(&self) -> StepBudget {
        self.budget
    }

    /// Distances from `s_cur` to each waypoint and to the goal.
    pub fn distances<D: Distance + ?Sized>(
        &self,
        s_cur: &[f32],
        predictor: &D,
    ) -> Result<(Vec<f64>, f64), PlanError> {
        let last = self.guide.last_index();
        let (lo, hi) = match self.window {
            Some(w) => (self.k_prev, (self.k_prev + w).min(last)),
            None => (0, last),
        };
        let mut pairs: Vec<(&[f32], &[f32])> = (lo..=hi)
            .map(|l| (s_cur, self.guide.waypoint_states[l].as_slice()))
            .collect();
        pairs.push((s_cur, &self.goal));
        let evals = predictor
            .evaluate_batch(&pairs)
            .map_err(|e| PlanError::Distance(e.source))?;
        let mut deltas = vec![f64::INFINITY; last + 1];
        for (l, e) in (lo..=hi).zip(&evals) {
            deltas[l] = e.distance.get();
        }
        Ok((deltas, evals[evals.len() - 1].distance.get()))
    }

    pub fn select_subgoal<D: Distance + ?Sized>(
        &self,
        s_cur: &[f32],
        predictor: &D,
    ) -> Result<SubgoalDecision, PlanError> {
        let (deltas, delta_goal) = self.distances(s_cur, predictor)?;
        let sel = select_from_distances(&deltas, delta_goal, self.budget.get(), self.k_prev);
        let subgoal = match sel.chosen_index {
            None => self.goal.clone(),
            Some(l) => self.guide.waypoint_states[l].clone(),
        };
        Ok(SubgoalDecision {
            subgoal,
            kind: sel.kind,
            chosen_index: sel.chosen_index,
            updated_k: sel.updated_k,
        })
    }

    /// Records the decision's waypoint index as the new `k_prev`.
    pub fn commit(&mut self, decision: &SubgoalDecision) {
        debug_assert!(decision.updated_k >= self.k_prev);
        self.k_prev = decision.updated_k;
    }
}

/// Locates start and goal vertices and computes the guide path.
pub fn plan_episode<D: Distance + ?Sized>(
    graph: &PlanningGraph,
    predictor: &D,
    s0: &[f32],
    goal: &[f32],
    budget: StepBudget,
) -> Result<PlannerState, PlanError> {
    let vs = nearest_vertex_from(s0, graph, predictor)?;
    let vg = nearest_vertex_to(goal, graph, predictor)?;
    let guide = shortest_path(graph, vs, vg)?;
    Ok(PlannerState::new(guide, goal.to_vec(), budget))
}

/// A controllable environment with a goal-reached predicate.
pub trait Environment {
    type Action;

    fn state(&self) -> Vec<f32>;

    fn step(&mut self, action: Self::Action) -> Result<(), ExternalError>;

    fn reached(&self, goal: &[f32]) -> bool;
}

/// A frozen goal-conditioned policy.
pub trait Policy<A> {
    fn act(&mut self, state: &[f32], subgoal: &[f32]) -> Result<A, ExternalError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: Vec<f32>,
    pub subgoal: Vec<f32>,
    /// `None` when the policy was driven toward the goal directly.
    pub kind: Option<DecisionKind>,
    pub waypoint: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub success: bool,
    pub steps: usize,
    pub trace: Vec<StepRecord>,
    pub final_state: Vec<f32>,
}

impl EpisodeRecord {
    /// One character per step: `G`, `R`, `F`, or `-` for direct control.
    pub fn decision_codes(&self) -> String {
        self.trace
            .iter()
            .map(|s| s.kind.map_or('-', DecisionKind::code))
            .collect()
    }
}

fn drive<E, P, F>(
    env: &mut E,
    policy: &mut P,
    goal: &[f32],
    max_steps: usize,
    mut choose: F,
) -> Result<EpisodeRecord, PlanError>
where
    E: Environment,
    P: Policy<E::Action>,
    F: FnMut(&[f32], usize) -> Result<(Vec<f32>, Option<DecisionKind>, Option<usize>), PlanError>,
{
    let mut trace = Vec::new();
    let mut success = false;
    let mut steps = 0;
    while steps < max_steps {
        let s_cur = env.state();
        if env.reached(goal) {
            success = true;
            break;
        }
        let (subgoal, kind, waypoint) = choose(&s_cur, steps)?;
        let action = policy
            .act(&s_cur, &subgoal)
            .map_err(|source| PlanError::Policy { step: steps, source })?;
        env.step(action)
            .map_err(|source| PlanError::Environment { step: steps, source })?;
        trace.push(StepRecord {
            state: s_cur,
            subgoal,
            kind,
            waypoint,
        });
        steps += 1;
    }
    if !success && max_steps > 0 && env.reached(goal) {
        success = true;
    }
    Ok(EpisodeRecord {
        success,
        steps,
        trace,
        final_state: env.state(),
    })
}

/// Runs the control loop with an already planned guide path.
pub fn run_planned_episode<E, P, D>(
    env: &mut E,
    policy: &mut P,
    mut state: PlannerState,
    predictor: &D,
    max_steps: usize,
) -> Result<EpisodeRecord, PlanError>
where
    E: Environment,
    P: Policy<E::Action>,
    D: Distance + ?Sized,
{
    let goal = state.goal.clone();
    drive(env, policy, &goal, max_steps, |s_cur, _| {
        let decision = state.select_subgoal(s_cur, predictor)?;
        state.commit(&decision);
        Ok((decision.subgoal, Some(decision.kind), decision.chosen_index))
    })
}

/// Plans from the environment's current state and runs the control loop.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<E, P, D>(
    env: &mut E,
    policy: &mut P,
    graph: &PlanningGraph,
    predictor: &D,
    goal: &[f32],
    budget: StepBudget,
    max_steps: usize,
) -> Result<EpisodeRecord, PlanError>
where
    E: Environment,
    P: Policy<E::Action>,
    D: Distance + ?Sized,
{
    let state = plan_episode(graph, predictor, &env.state(), goal, budget)?;
    run_planned_episode(env, policy, state, predictor, max_steps)
}

/// Baseline: the policy is conditioned on the final goal at every step.
pub fn run_direct_episode<E, P>(
    env: &mut E,
    policy: &mut P,
    goal: &[f32],
    max_steps: usize,
) -> Result<EpisodeRecord, PlanError>
where
    E: Environment,
    P: Policy<E::Action>,
{
    let g = goal.to_vec();
    drive(env, policy, goal, max_steps, |_, _| Ok((g.clone(), None, None)))
}
