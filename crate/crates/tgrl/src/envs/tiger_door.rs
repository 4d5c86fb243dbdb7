//! Tiger Door: reach the goal cell without touching the failure cell. The
//! two candidate cells swap roles randomly every episode and their identity
//! is hidden from the student until it touches the reveal button.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bfs_distances, push_one_hot, CellKind, GridMap, DIRS4};
use crate::error::PomdpError;
use crate::pomdp::{EnvSpec, Environment, Transition};
use crate::teachers::{smoothed_probs, Teacher};

/// Fixed 7x7 layout: a corridor from the start splits to the two candidate
/// cells; a side branch one cell off the corridor holds the button.
const MAP: &str = "\
#######
###S###
#P..###
###.###
###.###
#A...B#
#######";

pub const WIDTH: usize = 7;
pub const HEIGHT: usize = 7;
const MAX_EPISODE_LEN: usize = 100;

// Student observation: x one-hot, y one-hot, revealed flag, goal identity
// (zeroed until revealed). Privileged adds the identity channels unmasked.
pub const STUDENT_OBS_DIM: usize = WIDTH + HEIGHT + 1 + 2;
pub const PRIVILEGED_OBS_DIM: usize = STUDENT_OBS_DIM + 2;

pub struct TigerDoor {
    spec: EnvSpec,
    map: GridMap,
    start: (usize, usize),
    pos: (usize, usize),
    goal_at_a: bool,
    revealed: bool,
    steps: usize,
    alive: bool,
}

pub fn make_tiger_door() -> TigerDoor {
    let map = GridMap::from_ascii(MAP);
    let start = map.find(CellKind::Start)[0];
    TigerDoor {
        spec: EnvSpec {
            name: "tiger_door".into(),
            num_actions: 4,
            student_obs_dim: STUDENT_OBS_DIM,
            privileged_obs_dim: PRIVILEGED_OBS_DIM,
            max_episode_len: MAX_EPISODE_LEN,
            discount: 0.9,
        },
        map,
        start,
        pos: start,
        goal_at_a: false,
        revealed: false,
        steps: 0,
        alive: false,
    }
}

impl TigerDoor {
    pub fn map(&self) -> &GridMap {
        &self.map
    }

    fn observe(&self) -> (Vec<f64>, Vec<f64>) {
        let mut student = Vec::with_capacity(PRIVILEGED_OBS_DIM);
        push_one_hot(&mut student, self.pos.0, WIDTH);
        push_one_hot(&mut student, self.pos.1, HEIGHT);
        student.push(if self.revealed { 1.0 } else { 0.0 });
        let identity = if self.goal_at_a { [1.0, 0.0] } else { [0.0, 1.0] };
        if self.revealed {
            student.extend_from_slice(&identity);
        } else {
            student.extend_from_slice(&[0.0, 0.0]);
        }
        let mut privileged = student.clone();
        privileged.extend_from_slice(&identity);
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

impl Environment for TigerDoor {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Transition {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.goal_at_a = rng.gen_bool(0.5);
        self.pos = self.start;
        self.revealed = false;
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
        match self.map.get(self.pos.0, self.pos.1) {
            CellKind::Button => self.revealed = true,
            CellKind::GoalCandidateA => {
                reward = if self.goal_at_a { 1.0 } else { -1.0 };
                done = true;
            }
            CellKind::GoalCandidateB => {
                reward = if self.goal_at_a { -1.0 } else { 1.0 };
                done = true;
            }
            _ => {}
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

pub(crate) fn decode_position(obs: &[f64], width: usize, height: usize) -> (usize, usize) {
    let x = obs[..width].iter().position(|&v| v == 1.0).expect("x channel");
    let y = obs[width..width + height]
        .iter()
        .position(|&v| v == 1.0)
        .expect("y channel");
    (x, y)
}

/// Shortest-path oracle: walks the BFS distance field toward the true goal
/// cell, read from the privileged identity channels.
pub struct TigerDoorTeacher {
    eps: f64,
    dist_to_a: Vec<u32>,
    dist_to_b: Vec<u32>,
    map: GridMap,
}

impl TigerDoorTeacher {
    pub fn new(eps: f64) -> Self {
        let map = GridMap::from_ascii(MAP);
        let passable = |m: &GridMap| {
            let m = m.clone();
            move |x: usize, y: usize| m.get(x, y) != CellKind::Wall
        };
        let a = map.find(CellKind::GoalCandidateA)[0];
        let b = map.find(CellKind::GoalCandidateB)[0];
        let dist_to_a = bfs_distances(WIDTH, HEIGHT, passable(&map), &[a]);
        let dist_to_b = bfs_distances(WIDTH, HEIGHT, passable(&map), &[b]);
        Self {
            eps,
            dist_to_a,
            dist_to_b,
            map,
        }
    }
}

impl Teacher for TigerDoorTeacher {
    fn num_actions(&self) -> usize {
        4
    }

    fn action_probs(&self, privileged_obs: &[f64]) -> Vec<f64> {
        let (x, y) = decode_position(privileged_obs, WIDTH, HEIGHT);
        let goal_at_a = privileged_obs[STUDENT_OBS_DIM] == 1.0;
        let dist = if goal_at_a { &self.dist_to_a } else { &self.dist_to_b };
        let here = dist[y * WIDTH + x];
        assert!(here != u32::MAX, "goal unreachable: map generator bug");
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::seed_stream;
    use rand::Rng;

    #[test]
    fn identical_seeds_give_identical_episodes() {
        let mut a = make_tiger_door();
        let mut b = make_tiger_door();
        let t0a = a.reset(7);
        let t0b = b.reset(7);
        assert_eq!(t0a, t0b);
        for action in [1, 1, 2, 2, 3, 0] {
            assert_eq!(a.step(action).unwrap(), b.step(action).unwrap());
        }
    }

    #[test]
    fn goal_side_is_balanced_over_many_seeds() {
        let mut env = make_tiger_door();
        let mut at_a = 0usize;
        let n = 10_000;
        for seed in 0..n {
            env.reset(seed);
            if env.goal_at_a {
                at_a += 1;
            }
        }
        let freq = at_a as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.05, "goal-at-A frequency {freq}");
    }

    #[test]
    fn identity_channels_hidden_until_button() {
        let mut env = make_tiger_door();
        let t0 = env.reset(3);
        let id = &t0.student_obs[STUDENT_OBS_DIM - 2..];
        assert_eq!(id, &[0.0, 0.0]);
        // Privileged identity populated from t = 0.
        let priv_id = &t0.privileged_obs[STUDENT_OBS_DIM..];
        assert!(priv_id.iter().sum::<f64>() == 1.0);

        // Walk to the button: down, left, left.
        env.step(1).unwrap();
        env.step(2).unwrap();
        let t = env.step(2).unwrap();
        assert!(env.revealed);
        let student_id = &t.student_obs[STUDENT_OBS_DIM - 2..];
        let priv_id = &t.privileged_obs[STUDENT_OBS_DIM..];
        assert_eq!(student_id, priv_id);
    }

    #[test]
    fn reaching_candidates_pays_plus_or_minus_one() {
        // Find a seed with the goal at A, then move down the corridor and left.
        let mut env = make_tiger_door();
        let seed = (0..100).find(|&s| {
            env.reset(s);
            env.goal_at_a
        })
        .unwrap();
        env.reset(seed);
        for _ in 0..4 {
            env.step(1).unwrap();
        }
        env.step(2).unwrap();
        let t = env.step(2).unwrap();
        assert_eq!(t.reward, 1.0);
        assert!(t.done);

        // Same seed, wrong side.
        env.reset(seed);
        for _ in 0..4 {
            env.step(1).unwrap();
        }
        env.step(3).unwrap();
        let t = env.step(3).unwrap();
        assert_eq!(t.reward, -1.0);
        assert!(t.done);
        assert!(env.step(0).is_err());
    }

    #[test]
    fn projection_and_episode_bound_hold_on_random_rollouts() {
        let mut env = make_tiger_door();
        let mut rng = seed_stream(5, 0);
        for _ in 0..50 {
            let mut t = env.reset(rng.gen());
            assert!(t.projection_holds());
            let mut steps = 0;
            while !t.done {
                t = env.step(rng.gen_range(0..4)).unwrap();
                assert!(t.projection_holds());
                steps += 1;
                assert!(steps <= MAX_EPISODE_LEN);
            }
        }
    }

    #[test]
    fn timeout_terminates_at_the_cap() {
        let mut env = make_tiger_door();
        let mut t = env.reset(11);
        let mut steps = 0;
        while !t.done {
            t = env.step(0).unwrap(); // bump into the wall forever
            steps += 1;
        }
        assert_eq!(steps, MAX_EPISODE_LEN);
        assert_eq!(t.timestep, MAX_EPISODE_LEN - 1);
        assert_eq!(t.reward, 0.0);
    }

    #[test]
    fn teacher_turns_correctly_at_the_split() {
        let env_probs = |goal_at_a: bool| {
            let mut env = make_tiger_door();
            let seed = (0..100).find(|&s| {
                env.reset(s);
                env.goal_at_a == goal_at_a
            })
            .unwrap();
            env.reset(seed);
            let mut t = env.reset(seed);
            for _ in 0..4 {
                t = env.step(1).unwrap(); // walk to the split at (3, 5)
            }
            TigerDoorTeacher::new(0.02).action_probs(&t.privileged_obs)
        };
        let left = env_probs(true);
        assert!((left[2] - (0.98 + 0.02 / 4.0)).abs() < 1e-12);
        let right = env_probs(false);
        assert!((right[3] - (0.98 + 0.02 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn map_ascii_roundtrip() {
        let env = make_tiger_door();
        let text = env.map().ascii();
        assert_eq!(text.trim_end(), MAP);
    }
}
