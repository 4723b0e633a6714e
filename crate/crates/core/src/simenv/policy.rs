use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::maze::{Action, Cell, MazeGrid};
use super::{OracleDistance, SimError};
use crate::planner::{Environment, ExternalError, Policy};

/// Probability of a correct move as a function of the distance to the
/// commanded goal: `r_near` up to `d_reliable`, then a linear decay to
/// `r_far` at `d_max`, flat beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityProfile {
    pub r_near: f64,
    pub d_reliable: f64,
    pub r_far: f64,
    pub d_max: f64,
}

impl Default for ReliabilityProfile {
    fn default() -> Self {
        Self {
            r_near: 0.97,
            d_reliable: 12.0,
            r_far: 0.25,
            d_max: 60.0,
        }
    }
}

impl ReliabilityProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = (0.0..=1.0).contains(&self.r_far)
            && (0.0..=1.0).contains(&self.r_near)
            && self.r_far <= self.r_near
            && self.d_reliable >= 0.0
            && self.d_max > self.d_reliable;
        if ok {
            Ok(())
        } else {
            Err(SimError::Profile(format!("{self:?}")))
        }
    }

    pub fn reliability(&self, d: f64) -> f64 {
        if d <= self.d_reliable {
            self.r_near
        } else if d >= self.d_max {
            self.r_far
        } else {
            let t = (d - self.d_reliable) / (self.d_max - self.d_reliable);
            self.r_near + t * (self.r_far - self.r_near)
        }
    }
}

/// Distance-limited goal-conditioned policy: with probability `r(d)` it takes
/// the first step of a shortest path to its goal, otherwise a uniformly
/// random move to a neighbouring free cell.
#[derive(Debug, Clone)]
pub struct SyntheticPolicy {
    profile: ReliabilityProfile,
    oracle: OracleDistance,
    rng: ChaCha8Rng,
}

impl SyntheticPolicy {
    pub fn new(profile: ReliabilityProfile, oracle: OracleDistance, seed: u64) -> Result<Self, SimError> {
        profile.validate()?;
        Ok(Self {
            profile,
            oracle: oracle.noiseless(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn profile(&self) -> &ReliabilityProfile {
        &self.profile
    }

    pub fn act_cells(&mut self, state: Cell, goal: Cell) -> Action {
        let d = self.oracle.steps(state, goal);
        if d == 0 {
            return Action::Stay;
        }
        if self.rng.random_bool(self.profile.reliability(f64::from(d))) {
            return self.oracle.first_step(state, goal);
        }
        random_move(self.oracle.maze(), state, &mut self.rng)
    }
}

pub(crate) fn random_move(maze: &MazeGrid, cell: Cell, rng: &mut impl Rng) -> Action {
    let moves: Vec<Action> = maze.legal_moves(cell).collect();
    if moves.is_empty() {
        return Action::Stay;
    }
    moves[rng.random_range(0..moves.len())]
}

impl Policy<Action> for SyntheticPolicy {
    fn act(&mut self, state: &[f32], subgoal: &[f32]) -> Result<Action, ExternalError> {
        let maze = self.oracle.maze().clone();
        let s = maze
            .cell_of(state)
            .ok_or_else(|| SimError::NotACell(state.to_vec()))?;
        let g = maze
            .cell_of(subgoal)
            .ok_or_else(|| SimError::NotACell(subgoal.to_vec()))?;
        Ok(self.act_cells(s, g))
    }
}

/// Deterministic maze environment; the goal counts as reached on its cell.
#[derive(Debug, Clone)]
pub struct MazeEnv {
    maze: Arc<MazeGrid>,
    cell: Cell,
}

impl MazeEnv {
    pub fn new(maze: Arc<MazeGrid>, start: Cell) -> Result<Self, SimError> {
        if !maze.is_free(start) {
            return Err(SimError::NotACell(start.to_state()));
        }
        Ok(Self { maze, cell: start })
    }

    pub fn cell(&self) -> Cell {
        self.cell
    }
}

impl Environment for MazeEnv {
    type Action = Action;

    fn state(&self) -> Vec<f32> {
        self.cell.to_state()
    }

    fn step(&mut self, action: Action) -> Result<(), ExternalError> {
        self.cell = self.maze.step(self.cell, action);
        Ok(())
    }

    fn reached(&self, goal: &[f32]) -> bool {
        self.maze.cell_of(goal) == Some(self.cell)
    }
}
