//! Memory: a cue object sits inside a side room; two terminal objects sit
//! at the end of a corridor. Touching the object matching the cue succeeds,
//! the other fails. The student sees the cue only while inside the room;
//! the teacher knows it from the first step and walks straight to the
//! matching object.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tiger_door::decode_position;
use super::{bfs_distances, push_one_hot, CellKind, GridMap, DIRS4};
use crate::error::PomdpError;
use crate::pomdp::{EnvSpec, Environment, Transition};
use crate::teachers::{smoothed_probs, Teacher};

/// 11x11 layout: room in the top-left, door below it, corridor to the two
/// object slots on the right. The north slot holds object A, the south slot
/// object B.
const MAP: &str = "\
###########
#...#######
#...#######
#...#######
##.####O###
##S.....###
#######O###
###########
###########
###########
###########";

pub const WIDTH: usize = 11;
pub const HEIGHT: usize = 11;
const MAX_EPISODE_LEN: usize = 121;

/// The cue is visible while the agent stands inside the room proper.
const ROOM_MAX_Y: usize = 3;

// Student observation: x one-hot, y one-hot, cue identity (zero outside the
// room). Privileged adds the cue identity unmasked.
pub const STUDENT_OBS_DIM: usize = WIDTH + HEIGHT + 2;
pub const PRIVILEGED_OBS_DIM: usize = STUDENT_OBS_DIM + 2;

pub struct Memory {
    spec: EnvSpec,
    map: GridMap,
    start: (usize, usize),
    north_slot: (usize, usize),
    pos: (usize, usize),
    cue_is_a: bool,
    steps: usize,
    alive: bool,
}

pub fn make_memory() -> Memory {
    let map = GridMap::from_ascii(MAP);
    let start = map.find(CellKind::Start)[0];
    let slots = map.find(CellKind::ObjectSlot);
    let north_slot = slots.into_iter().min_by_key(|&(_, y)| y).unwrap();
    Memory {
        spec: EnvSpec {
            name: "memory".into(),
            num_actions: 4,
            student_obs_dim: STUDENT_OBS_DIM,
            privileged_obs_dim: PRIVILEGED_OBS_DIM,
            max_episode_len: MAX_EPISODE_LEN,
            discount: 0.9,
        },
        map,
        start,
        north_slot,
        pos: start,
        cue_is_a: false,
        steps: 0,
        alive: false,
    }
}

impl Memory {
    pub fn map(&self) -> &GridMap {
        &self.map
    }

    fn in_room(&self) -> bool {
        self.pos.1 <= ROOM_MAX_Y
    }

    fn observe(&self) -> (Vec<f64>, Vec<f64>) {
        let mut student = Vec::with_capacity(PRIVILEGED_OBS_DIM);
        push_one_hot(&mut student, self.pos.0, WIDTH);
        push_one_hot(&mut student, self.pos.1, HEIGHT);
        let cue = if self.cue_is_a { [1.0, 0.0] } else { [0.0, 1.0] };
        if self.in_room() {
            student.extend_from_slice(&cue);
        } else {
            student.extend_from_slice(&[0.0, 0.0]);
        }
        let mut privileged = student.clone();
        privileged.extend_from_slice(&cue);
        (student, privileged)
    }

    fn transition(&self, reward: f64, done: bool, timestep: usize) -> Transition {
        let (student_obs, privileged_obs) = self.observe();
        Transition {
            student_obs,
            privileged_obs,
            reward,
            done,
            timestep,
        }
    }
}

impl Environment for Memory {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Transition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.cue_is_a = rng.gen_bool(0.5);
        self.pos = self.start;
        self.steps = 0;
        self.alive = true;
        self.transition(0.0, false, 0)
    }

    fn step(&mut self, action: usize) -> Result<Transition, PomdpError> {
        if !self.alive {
            return Err(PomdpError::EpisodeOver);
        }
        if action >= 4 {
            return Err(PomdpError::InvalidAction {
                action,
                num_actions: 4,
            });
        }
        let (dx, dy) = DIRS4[action];
        let nx = (self.pos.0 as isize + dx) as usize;
        let ny = (self.pos.1 as isize + dy) as usize;
        if self.map.get(nx, ny) != CellKind::Wall {
            self.pos = (nx, ny);
        }
        let mut reward = 0.0;
        let mut done = false;
        if self.map.get(self.pos.0, self.pos.1) == CellKind::ObjectSlot {
            let touched_a = self.pos == self.north_slot;
            reward = if touched_a == self.cue_is_a { 1.0 } else { -1.0 };
            done = true;
        }
        let timestep = self.steps;
        self.steps += 1;
        if self.steps == MAX_EPISODE_LEN {
            done = true;
        }
        self.alive = !done;
        Ok(self.transition(reward, done, timestep))
    }
}

/// Shortest-path oracle toward the object matching the cue, which it reads
/// from the privileged channels at every step.
pub struct MemoryTeacher {
    eps: f64,
    dist_to_a: Vec<u32>,
    dist_to_b: Vec<u32>,
    map: GridMap,
}

impl MemoryTeacher {
    pub fn new(eps: f64) -> Self {
        let map = GridMap::from_ascii(MAP);
        let slots = map.find(CellKind::ObjectSlot);
        let a = *slots.iter().min_by_key(|&&(_, y)| y).unwrap();
        let b = *slots.iter().max_by_key(|&&(_, y)| y).unwrap();
        let mk = |goal: (usize, usize)| {
            let m = map.clone();
            bfs_distances(WIDTH, HEIGHT, move |x, y| m.get(x, y) != CellKind::Wall, &[goal])
        };
        Self {
            eps,
            dist_to_a: mk(a),
            dist_to_b: mk(b),
            map,
        }
    }
}

impl Teacher for MemoryTeacher {
    fn num_actions(&self) -> usize {
        4
    }

    fn action_probs(&self, privileged_obs: &[f64]) -> Vec<f64> {
        let (x, y) = decode_position(privileged_obs, WIDTH, HEIGHT);
        let cue_is_a = privileged_obs[STUDENT_OBS_DIM] == 1.0;
        let dist = if cue_is_a { &self.dist_to_a } else { &self.dist_to_b };
        assert!(dist[y * WIDTH + x] != u32::MAX, "object unreachable: map bug");
        let mut best = 0usize;
        let mut best_dist = u32::MAX;
        for (a, (dx, dy)) in DIRS4.iter().enumerate() {
            let nx = (x as isize + dx) as usize;
            let ny = (y as isize + dy) as usize;
            if self.map.get(nx, ny) == CellKind::Wall {
                continue;
            }
            let d = dist[ny * WIDTH + nx];
            if d < best_dist {
                best_dist = d;
                best = a;
            }
        }
        smoothed_probs(best, 4, self.eps)
    }
}
