use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::maze::{Action, Cell};
use super::policy::random_move;
use super::{OracleDistance, SimError};
use crate::dataset::{Trajectory, TrajectoryDataset};

/// Move noise of the navigate and stitch experts.
pub const EXPERT_NOISE: f64 = 0.2;
/// Maximum stitch trajectory length in states (4 × the default soft horizon of 12).
pub const STITCH_CAP: usize = 48;
/// Length of each explore random walk, in states.
pub const EXPLORE_LENGTH: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Noisy expert toward distant random goals.
    Navigate,
    /// Short noisy-expert segments between nearby endpoints.
    Stitch,
    /// Uniform random walks.
    Explore,
}

impl std::str::FromStr for Regime {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "navigate" => Ok(Regime::Navigate),
            "stitch" => Ok(Regime::Stitch),
            "explore" => Ok(Regime::Explore),
            _ => Err(SimError::InvalidParameter(format!("unknown regime {s:?}"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Navigate => "navigate",
            Regime::Stitch => "stitch",
            Regime::Explore => "explore",
        })
    }
}

/// Rolls the noisy expert from `start` toward `goal` for at most `cap`
/// states, stopping on arrival. Returns the visited cells and whether the
/// goal was reached.
pub fn expert_rollout(
    oracle: &OracleDistance,
    start: Cell,
    goal: Cell,
    noise: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> (Vec<Cell>, bool) {
    let maze = oracle.maze();
    let mut cells = vec![start];
    let mut cur = start;
    while cur != goal && cells.len() < cap {
        let action = if rng.random_bool(noise) {
            random_move(maze, cur, rng)
        } else {
            oracle.first_step(cur, goal)
        };
        cur = maze.step(cur, action);
        cells.push(cur);
    }
    (cells, cur == goal)
}

fn random_walk(oracle: &OracleDistance, start: Cell, len: usize, rng: &mut impl Rng) -> Vec<Cell> {
    let maze = oracle.maze();
    let mut cells = Vec::with_capacity(len);
    let mut cur = start;
    cells.push(cur);
    while cells.len() < len {
        let a = random_move(maze, cur, rng);
        debug_assert_ne!(a, Action::Stay);
        cur = maze.step(cur, a);
        cells.push(cur);
    }
    cells
}

/// Picks a goal for `start` among cells whose distance lies in `[lo, hi]`,
/// falling back to the farthest cell within `hi` when none qualifies.
fn pick_goal(oracle: &OracleDistance, start: Cell, lo: u32, hi: u32, rng: &mut impl Rng) -> Cell {
    let free = oracle.maze().free_cells();
    let candidates: Vec<Cell> = free
        .iter()
        .copied()
        .filter(|&c| (lo..=hi).contains(&oracle.steps(start, c)))
        .collect();
    match candidates.choose(rng) {
        Some(&c) => c,
        None => *free
            .iter()
            .filter(|&&c| oracle.steps(start, c) <= hi)
            .max_by_key(|&&c| (oracle.steps(start, c), std::cmp::Reverse(c)))
            .expect("start itself qualifies"),
    }
}

/// Generates an offline dataset in the given regime with exactly
/// `n_transitions` transitions; the last trajectory is truncated to fit.
pub fn generate_dataset(
    oracle: &OracleDistance,
    regime: Regime,
    n_transitions: usize,
    seed: u64,
) -> Result<TrajectoryDataset, SimError> {
    if n_transitions == 0 {
        return Err(SimError::InvalidParameter("n_transitions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free = oracle.maze().free_cells();
    if free.len() < 2 {
        return Err(SimError::InvalidParameter("maze needs at least two free cells".into()));
    }
    let diameter = oracle.diameter();
    let mut remaining = n_transitions;
    let mut trajectories = Vec::new();
    while remaining > 0 {
        let start = *free.choose(&mut rng).expect("nonempty");
        let (cells, reached) = match regime {
            Regime::Navigate => {
                let goal = pick_goal(oracle, start, diameter.div_ceil(2).max(1), diameter, &mut rng);
                let d = oracle.steps(start, goal) as usize;
                expert_rollout(oracle, start, goal, EXPERT_NOISE, 2 * d + 11, &mut rng)
            }
            Regime::Stitch => {
                let hi = (STITCH_CAP - 1) as u32;
                let goal = pick_goal(oracle, start, hi / 2, hi, &mut rng);
                expert_rollout(oracle, start, goal, EXPERT_NOISE, STITCH_CAP, &mut rng)
            }
            Regime::Explore => (random_walk(oracle, start, EXPLORE_LENGTH, &mut rng), false),
        };
        let transitions = cells.len() - 1;
        let (cells, terminal) = if transitions > remaining {
            (&cells[..=remaining], false)
        } else {
            (&cells[..], reached)
        };
        remaining -= cells.len() - 1;
        let states = cells.iter().map(|c| c.to_state()).collect();
        trajectories.push(Trajectory::new(states, terminal)?);
    }
    Ok(TrajectoryDataset::new(trajectories)?)
}
