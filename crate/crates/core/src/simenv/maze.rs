use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Grid coordinates; `y` grows downward (row index in the text layout).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn to_state(self) -> Vec<f32> {
        vec![self.x as f32, self.y as f32]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    North,
    South,
    East,
    West,
    Stay,
}

impl Action {
    /// Movement actions in tie-breaking order.
    pub const MOVES: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::North => (0, -1),
            Action::South => (0, 1),
            Action::East => (1, 0),
            Action::West => (-1, 0),
            Action::Stay => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Medium,
    Large,
    Giant,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Medium => "medium",
            Preset::Large => "large",
            Preset::Giant => "giant",
        }
    }

    fn layout(self) -> &'static str {
        match self {
            Preset::Medium => include_str!("presets/medium.txt"),
            Preset::Large => include_str!("presets/large.txt"),
            Preset::Giant => include_str!("presets/giant.txt"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Preset(Preset),
    /// Recursive-division maze; both sides are forced odd and at least 5.
    Seeded { width: usize, height: usize, seed: u64 },
}

impl std::str::FromStr for Layout {
    type Err = SimError;

    /// `medium`, `large`, `giant`, or `seed:<n>[:<width>x<height>]`.
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "medium" => Ok(Layout::Preset(Preset::Medium)),
            "large" => Ok(Layout::Preset(Preset::Large)),
            "giant" => Ok(Layout::Preset(Preset::Giant)),
            _ => {
                let bad = || SimError::Layout(format!("unknown maze layout {s:?}"));
                let rest = s.strip_prefix("seed:").ok_or_else(bad)?;
                let (seed, size) = match rest.split_once(':') {
                    Some((seed, size)) => (seed, Some(size)),
                    None => (rest, None),
                };
                let seed = seed.parse().map_err(|_| bad())?;
                let (width, height) = match size {
                    None => (21, 21),
                    Some(size) => {
                        let (w, h) = size.split_once('x').ok_or_else(bad)?;
                        (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?)
                    }
                };
                Ok(Layout::Seeded { width, height, seed })
            }
        }
    }
}

/// Occupancy grid with a bordered wall and one connected free region.
#[derive(Clone, PartialEq, Eq)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    free: Vec<Cell>,
    index: Vec<u32>,
}

impl fmt::Debug for MazeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MazeGrid {}x{}\n{}", self.width, self.height, self.to_text())
    }
}

const NO_INDEX: u32 = u32::MAX;

impl MazeGrid {
    pub fn from_walls(width: usize, height: usize, walls: Vec<bool>) -> Result<Self, SimError> {
        if width < 3 || height < 3 || walls.len() != width * height {
            return Err(SimError::Layout(format!(
                "{width}x{height} grid with {} cells",
                walls.len()
            )));
        }
        for x in 0..width {
            for y in [0, height - 1] {
                if !walls[y * width + x] {
                    return Err(SimError::Layout(format!("border cell ({x}, {y}) is free")));
                }
            }
        }
        for y in 0..height {
            for x in [0, width - 1] {
                if !walls[y * width + x] {
                    return Err(SimError::Layout(format!("border cell ({x}, {y}) is free")));
                }
            }
        }
        let mut free = Vec::new();
        let mut index = vec![NO_INDEX; width * height];
        for y in 0..height {
            for x in 0..width {
                if !walls[y * width + x] {
                    index[y * width + x] = free.len() as u32;
                    free.push(Cell::new(x as i32, y as i32));
                }
            }
        }
        let maze = Self {
            width,
            height,
            walls,
            free,
            index,
        };
        if maze.free.is_empty() {
            return Err(SimError::Layout("maze has no free cells".into()));
        }
        if maze.flood_fill(maze.free[0]).len() != maze.free.len() {
            return Err(SimError::Layout("free cells are not connected".into()));
        }
        Ok(maze)
    }

    /// Parses a `#`/`.` text layout, one row per line.
    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut walls = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(SimError::Layout(format!("row {y} has length {}", row.len())));
            }
            for ch in row.chars() {
                walls.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(SimError::Layout(format!("unexpected character {other:?}"))),
                });
            }
        }
        Self::from_walls(width, height, walls)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.walls[y * self.width + x] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_wall(&self, x: i32, y: i32) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return true;
        }
        self.walls[y as usize * self.width + x as usize]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_wall(c.x, c.y)
    }

    pub fn free_cells(&self) -> &[Cell] {
        &self.free
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// Dense index of a free cell.
    pub fn free_index(&self, c: Cell) -> Option<usize> {
        if self.is_wall(c.x, c.y) {
            return None;
        }
        Some(self.index[c.y as usize * self.width + c.x as usize] as usize)
    }

    /// Maps a state vector `[x, y]` onto a free cell.
    pub fn cell_of(&self, state: &[f32]) -> Option<Cell> {
        let [x, y] = state else { return None };
        if x.fract() != 0.0 || y.fract() != 0.0 {
            return None;
        }
        let c = Cell::new(*x as i32, *y as i32);
        self.is_free(c).then_some(c)
    }

    /// Moves one cell unless blocked by a wall.
    pub fn step(&self, cell: Cell, action: Action) -> Cell {
        let (dx, dy) = action.delta();
        let next = Cell::new(cell.x + dx, cell.y + dy);
        if self.is_free(next) {
            next
        } else {
            cell
        }
    }

    /// Moves that change the cell, in N, S, E, W order.
    pub fn legal_moves(&self, cell: Cell) -> impl Iterator<Item = Action> + '_ {
        Action::MOVES.into_iter().filter(move |&a| self.step(cell, a) != cell)
    }

    pub fn flood_fill(&self, start: Cell) -> Vec<Cell> {
        let mut seen = vec![false; self.width * self.height];
        let mut out = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start.y as usize * self.width + start.x as usize] = true;
        while let Some(c) = queue.pop_front() {
            out.push(c);
            for a in self.legal_moves(c).collect::<Vec<_>>() {
                let n = self.step(c, a);
                let k = n.y as usize * self.width + n.x as usize;
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(n);
                }
            }
        }
        out
    }

    /// Five fixed start/goal pairs: the four corner-to-opposite-corner runs
    /// (bottom-left → top-right, top-left → bottom-right, and their reverses
    /// swapped to top-right → bottom-left, bottom-right → top-left), then the
    /// free cell nearest the centre to the corner farthest from it.
    pub fn tasks(&self, oracle: &super::OracleDistance) -> Vec<(Cell, Cell)> {
        let nearest = |tx: i32, ty: i32| {
            *self
                .free
                .iter()
                .min_by_key(|c| ((c.x - tx).abs() + (c.y - ty).abs(), c.y, c.x))
                .expect("maze has free cells")
        };
        let (w, h) = (self.width as i32 - 1, self.height as i32 - 1);
        let tl = nearest(0, 0);
        let tr = nearest(w, 0);
        let bl = nearest(0, h);
        let br = nearest(w, h);
        let center = nearest(w / 2, h / 2);
        let far = *[tl, tr, bl, br]
            .iter()
            .max_by_key(|&&c| (oracle.steps(center, c), std::cmp::Reverse(c)))
            .unwrap();
        vec![(bl, tr), (tl, br), (tr, bl), (br, tl), (center, far)]
    }
}

/// Builds a maze from a preset or a seeded recursive division.
pub fn generate_maze(layout: Layout) -> MazeGrid {
    match layout {
        Layout::Preset(p) => MazeGrid::from_text(p.layout()).expect("embedded preset is valid"),
        Layout::Seeded { width, height, seed } => recursive_division(width, height, seed),
    }
}

fn odd_at_least_five(n: usize) -> usize {
    let n = n.max(5);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Recursive division on an odd-sized grid: free cells sit on odd
/// coordinates, walls are raised along even rows/columns with one odd gap.
/// Each chamber split keeps the free region a tree, hence connected.
pub fn recursive_division(width: usize, height: usize, seed: u64) -> MazeGrid {
    let (w, h) = (odd_at_least_five(width), odd_at_least_five(height));
    let mut walls = vec![false; w * h];
    for x in 0..w {
        walls[x] = true;
        walls[(h - 1) * w + x] = true;
    }
    for y in 0..h {
        walls[y * w] = true;
        walls[y * w + w - 1] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stack = vec![(1usize, 1usize, w - 2, h - 2)];
    while let Some((x, y, cw, ch)) = stack.pop() {
        if cw < 3 || ch < 3 {
            continue;
        }
        let horizontal = match cw.cmp(&ch) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => rng.random_bool(0.5),
        };
        if horizontal {
            let wy = y + 1 + 2 * rng.random_range(0..(ch - 1) / 2);
            let gap = x + 2 * rng.random_range(0..cw.div_ceil(2));
            for cx in x..x + cw {
                if cx != gap {
                    walls[wy * w + cx] = true;
                }
            }
            stack.push((x, y, cw, wy - y));
            stack.push((x, wy + 1, cw, y + ch - wy - 1));
        } else {
            let wx = x + 1 + 2 * rng.random_range(0..(cw - 1) / 2);
            let gap = y + 2 * rng.random_range(0..ch.div_ceil(2));
            for cy in y..y + ch {
                if cy != gap {
                    walls[cy * w + wx] = true;
                }
            }
            stack.push((x, y, wx - x, ch));
            stack.push((wx + 1, y, x + cw - wx - 1, ch));
        }
    }
    MazeGrid::from_walls(w, h, walls).expect("recursive division yields a connected maze")
}
