//! The four benchmark POMDPs: Tiger Door, Lava Crossing, Memory, and a
//! discrete Light-Dark navigation task.
//!
//! All observations are flat vectors of 0/1 indicator channels, and every
//! privileged observation carries the student observation as its prefix
//! followed by the extra teacher-only channels. Maps can be dumped as ASCII
//! grids, one character per cell kind: `#` wall, `.` floor, `S` start,
//! `A`/`B` goal candidates, `P` button, `L` lava, `O` object slot, `l` lit
//! floor, `d` dark floor.

mod light_dark;
mod lava_crossing;
mod memory;
mod tiger_door;

pub use light_dark::{make_light_dark, LightDark, LightDarkTeacher};
pub use lava_crossing::{make_lava_crossing, LavaCrossing, LavaCrossingTeacher};
pub use memory::{make_memory, Memory, MemoryTeacher};
pub use tiger_door::{make_tiger_door, TigerDoor, TigerDoorTeacher};

use crate::error::PomdpError;
use crate::pomdp::Environment;

/// Grid cell kinds shared by the benchmark maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    Floor,
    Start,
    GoalCandidateA,
    GoalCandidateB,
    Button,
    Lava,
    ObjectSlot,
    Lit,
    Dark,
}

impl CellKind {
    pub fn to_char(self) -> char {
        match self {
            CellKind::Wall => '#',
            CellKind::Floor => '.',
            CellKind::Start => 'S',
            CellKind::GoalCandidateA => 'A',
            CellKind::GoalCandidateB => 'B',
            CellKind::Button => 'P',
            CellKind::Lava => 'L',
            CellKind::ObjectSlot => 'O',
            CellKind::Lit => 'l',
            CellKind::Dark => 'd',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '#' => CellKind::Wall,
            '.' => CellKind::Floor,
            'S' => CellKind::Start,
            'A' => CellKind::GoalCandidateA,
            'B' => CellKind::GoalCandidateB,
            'P' => CellKind::Button,
            'L' => CellKind::Lava,
            'O' => CellKind::ObjectSlot,
            'l' => CellKind::Lit,
            'd' => CellKind::Dark,
            _ => return None,
        })
    }
}

/// Rectangular cell grid.
#[derive(Debug, Clone)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    cells: Vec<CellKind>,
}

impl GridMap {
    pub fn filled(width: usize, height: usize, kind: CellKind) -> Self {
        Self {
            width,
            height,
            cells: vec![kind; width * height],
        }
    }

    /// Parse a fixed layout from an ASCII block; lines are rows.
    pub fn from_ascii(text: &str) -> Self {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(width * height);
        for row in &rows {
            assert_eq!(row.chars().count(), width, "ragged map literal");
            for c in row.chars() {
                cells.push(CellKind::from_char(c).expect("unknown map character"));
            }
        }
        Self {
            width,
            height,
            cells,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> CellKind {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, kind: CellKind) {
        self.cells[y * self.width + x] = kind;
    }

    pub fn find(&self, kind: CellKind) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) == kind {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// ASCII dump, one character per cell kind.
    pub fn ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(self.get(x, y).to_char());
            }
            s.push('\n');
        }
        s
    }

    /// Write the ASCII dump to a text file (debugging aid).
    pub fn dump_to_file(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.ascii())
    }
}

/// Movement directions in fixed action order: up, down, left, right.
pub const DIRS4: [(isize, isize); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

/// Multi-source BFS distance field over a 4-connected grid. Unreachable
/// cells get `u32::MAX`.
pub fn bfs_distances(
    width: usize,
    height: usize,
    passable: impl Fn(usize, usize) -> bool,
    sources: &[(usize, usize)],
) -> Vec<u32> {
    let mut dist = vec![u32::MAX; width * height];
    let mut queue = std::collections::VecDeque::new();
    for &(x, y) in sources {
        dist[y * width + x] = 0;
        queue.push_back((x, y));
    }
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[y * width + x];
        for (dx, dy) in DIRS4 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if passable(nx, ny) && dist[ny * width + nx] == u32::MAX {
                dist[ny * width + nx] = d + 1;
                queue.push_back((nx, ny));
            }
        }
    }
    dist
}

pub(crate) fn push_one_hot(out: &mut Vec<f64>, idx: usize, n: usize) {
    let base = out.len();
    out.resize(base + n, 0.0);
    out[base + idx] = 1.0;
}

/// Construct a benchmark environment by name.
pub fn make_env(name: &str) -> Result<Box<dyn Environment>, PomdpError> {
    match name {
        "tiger_door" => Ok(Box::new(make_tiger_door())),
        "lava_crossing" => Ok(Box::new(make_lava_crossing())),
        "memory" => Ok(Box::new(make_memory())),
        "light_dark" => Ok(Box::new(make_light_dark())),
        other => Err(PomdpError::UnknownEnv(other.to_string())),
    }
}

/// All benchmark names accepted by [`make_env`].
pub const ENV_NAMES: [&str; 4] = ["tiger_door", "lava_crossing", "memory", "light_dark"];
