use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use super::maze::{Action, Cell, MazeGrid};

const UNREACHABLE: u16 = u16::MAX;

/// Exact all-pairs BFS step counts over the maze's free cells, optionally
/// perturbed by a deterministic multiplicative noise factor per query.
#[derive(Debug, Clone)]
pub struct OracleDistance {
    maze: Arc<MazeGrid>,
    table: Arc<Vec<u16>>,
    noise: f64,
    asymmetric: bool,
    noise_seed: u64,
}

impl OracleDistance {
    pub fn new(maze: Arc<MazeGrid>) -> Self {
        let n = maze.num_free();
        assert!(n < usize::from(UNREACHABLE), "maze too large for 16-bit distances");
        let rows: Vec<Vec<u16>> = (0..n).into_par_iter().map(|i| bfs(&maze, i)).collect();
        let table = rows.into_iter().flatten().collect();
        Self {
            maze,
            table: Arc::new(table),
            noise: 0.0,
            asymmetric: false,
            noise_seed: 0,
        }
    }

    /// Multiplies each query by a factor drawn from `[1 − eta, 1 + eta]`,
    /// determined by the cell pair and `seed`. With `asymmetric`, `(a, b)`
    /// and `(b, a)` draw independent factors.
    pub fn with_noise(mut self, eta: f64, asymmetric: bool, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&eta), "noise level {eta} outside [0, 1)");
        self.noise = eta;
        self.asymmetric = asymmetric;
        self.noise_seed = seed;
        self
    }

    /// Same table, noise removed.
    pub fn noiseless(&self) -> Self {
        Self {
            noise: 0.0,
            asymmetric: false,
            ..self.clone()
        }
    }

    pub fn maze(&self) -> &Arc<MazeGrid> {
        &self.maze
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn asymmetric(&self) -> bool {
        self.asymmetric
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    /// True shortest-path step count between two free cells.
    pub fn steps(&self, a: Cell, b: Cell) -> u32 {
        let (i, j) = (self.index(a), self.index(b));
        self.steps_by_index(i, j)
    }

    pub fn steps_by_index(&self, i: usize, j: usize) -> u32 {
        let d = self.table[i * self.maze.num_free() + j];
        debug_assert_ne!(d, UNREACHABLE);
        u32::from(d)
    }

    fn index(&self, c: Cell) -> usize {
        self.maze
            .free_index(c)
            .unwrap_or_else(|| panic!("{c} is not a free cell"))
    }

    /// Step count with the configured noise applied. `query(a, a)` is 0.
    pub fn query(&self, a: Cell, b: Cell) -> f64 {
        let (i, j) = (self.index(a), self.index(b));
        let d = f64::from(self.steps_by_index(i, j));
        if self.noise == 0.0 {
            return d;
        }
        let (p, q) = if self.asymmetric || i <= j { (i, j) } else { (j, i) };
        let u = unit_hash(self.noise_seed, p as u64, q as u64);
        d * (1.0 + self.noise * (2.0 * u - 1.0))
    }

    /// First action of a shortest path from `from` toward `to`, trying
    /// N, S, E, W in order. `Stay` when already there.
    pub fn first_step(&self, from: Cell, to: Cell) -> Action {
        let d = self.steps(from, to);
        if d == 0 {
            return Action::Stay;
        }
        Action::MOVES
            .into_iter()
            .find(|&a| {
                let n = self.maze.step(from, a);
                n != from && self.steps(n, to) + 1 == d
            })
            .expect("a neighbour on a shortest path exists")
    }

    /// Largest finite distance in the table.
    pub fn diameter(&self) -> u32 {
        self.table.iter().copied().max().map_or(0, u32::from)
    }

    /// All free-cell pairs at exactly `n` steps, in index order.
    pub fn pairs_at(&self, n: u32) -> Vec<(Cell, Cell)> {
        let free = self.maze.free_cells();
        let m = free.len();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if u32::from(self.table[i * m + j]) == n {
                    out.push((free[i], free[j]));
                }
            }
        }
        out
    }
}

fn bfs(maze: &MazeGrid, source: usize) -> Vec<u16> {
    let free = maze.free_cells();
    let mut dist = vec![UNREACHABLE; free.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([free[source]]);
    while let Some(c) = queue.pop_front() {
        let d = dist[maze.free_index(c).unwrap()];
        for a in Action::MOVES {
            let n = maze.step(c, a);
            if n == c {
                continue;
            }
            let k = maze.free_index(n).unwrap();
            if dist[k] == UNREACHABLE {
                dist[k] = d + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// SplitMix64 finalizer over three words, mapped to `[0, 1)`.
fn unit_hash(seed: u64, a: u64, b: u64) -> f64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}
