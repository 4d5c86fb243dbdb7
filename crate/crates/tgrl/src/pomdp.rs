//! POMDP abstractions shared by every environment and learner: env specs,
//! transitions, fixed-length observation histories, trajectories, and the
//! seeded-randomness contract.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

use crate::error::PomdpError;

/// Static description of an environment: action count, the two observation
/// channel widths, episode cap, and discount.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: String,
    pub num_actions: usize,
    pub student_obs_dim: usize,
    pub privileged_obs_dim: usize,
    pub max_episode_len: usize,
    pub discount: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<(), PomdpError> {
        if self.num_actions < 2 {
            return Err(PomdpError::InvalidSpec("num_actions must be >= 2".into()));
        }
        if self.max_episode_len < 1 {
            return Err(PomdpError::InvalidSpec("max_episode_len must be >= 1".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(PomdpError::InvalidSpec("discount must lie in (0, 1]".into()));
        }
        if self.student_obs_dim == 0 || self.privileged_obs_dim <= self.student_obs_dim {
            return Err(PomdpError::InvalidSpec(
                "privileged_obs_dim must strictly exceed student_obs_dim".into(),
            ));
        }
        Ok(())
    }
}

/// One step of environment output. The observation pair describes the state
/// *after* the step; `reward` and `timestep` belong to the action that
/// produced it. The privileged vector always carries the student vector as
/// its prefix, so the student view is a fixed projection of the teacher view.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub student_obs: Vec<f64>,
    pub privileged_obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub timestep: usize,
}

impl Transition {
    /// The student channels are a bit-equal prefix of the privileged channels.
    pub fn projection_holds(&self) -> bool {
        self.privileged_obs.len() > self.student_obs.len()
            && self.privileged_obs[..self.student_obs.len()] == self.student_obs[..]
    }
}

/// Which policy produced a trajectory or replay record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Collector {
    MainPolicy,
    AuxPolicy,
    Teacher,
}

/// A POMDP with seeded resets. Instances are single-threaded and own their
/// RNG; a (seed, action sequence) pair fully determines every transition.
pub trait Environment {
    fn spec(&self) -> &EnvSpec;

    /// Start a fresh episode. Returns the initial observation pair as a
    /// pseudo-transition (reward 0, done false, timestep 0).
    fn reset(&mut self, seed: u64) -> Transition;

    /// Advance one step. Stepping a finished or un-reset episode is a
    /// contract violation and is reported as an error.
    fn step(&mut self, action: usize) -> Result<Transition, PomdpError>;
}

/// Fixed-length window of the last `window_len` (observation, action) pairs
/// plus the current observation, standing in for the full history. Encodes
/// to a constant-size vector regardless of episode age: zero padding fills
/// the oldest slots until the window is full.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    window_len: usize,
    obs_dim: usize,
    num_actions: usize,
    entries: VecDeque<(Vec<f64>, usize)>,
    current_obs: Vec<f64>,
}

impl HistoryWindow {
    pub fn new(
        window_len: usize,
        obs_dim: usize,
        num_actions: usize,
        initial_obs: Vec<f64>,
    ) -> Result<Self, PomdpError> {
        if initial_obs.len() != obs_dim {
            return Err(PomdpError::DimensionMismatch {
                what: "history initial observation",
                expected: obs_dim,
                got: initial_obs.len(),
            });
        }
        Ok(Self {
            window_len,
            obs_dim,
            num_actions,
            entries: VecDeque::with_capacity(window_len),
            current_obs: initial_obs,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn current_obs(&self) -> &[f64] {
        &self.current_obs
    }

    /// Number of real (non-padding) entries currently held.
    pub fn fill(&self) -> usize {
        self.entries.len()
    }

    /// Record that `action` was taken at the current observation, which then
    /// became `next_obs`. The oldest entry is evicted once the window is full.
    pub fn push(&mut self, next_obs: Vec<f64>, action: usize) -> Result<(), PomdpError> {
        if next_obs.len() != self.obs_dim {
            return Err(PomdpError::DimensionMismatch {
                what: "history observation",
                expected: self.obs_dim,
                got: next_obs.len(),
            });
        }
        if action >= self.num_actions {
            return Err(PomdpError::InvalidAction {
                action,
                num_actions: self.num_actions,
            });
        }
        let prev = std::mem::replace(&mut self.current_obs, next_obs);
        if self.entries.len() == self.window_len {
            self.entries.pop_front();
        }
        self.entries.push_back((prev, action));
        Ok(())
    }

    /// Length of the encoded vector: `K * (obs_dim + num_actions) + obs_dim`.
    pub fn encoded_len(&self) -> usize {
        self.window_len * (self.obs_dim + self.num_actions) + self.obs_dim
    }

    /// Flat encoding: zero-padded oldest slots, then (obs, one-hot action)
    /// pairs oldest to newest, then the current observation.
    pub fn encode(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.encoded_len());
        let slot = self.obs_dim + self.num_actions;
        out.resize((self.window_len - self.entries.len()) * slot, 0.0);
        for (obs, action) in &self.entries {
            out.extend_from_slice(obs);
            let base = out.len();
            out.resize(base + self.num_actions, 0.0);
            out[base + *action] = 1.0;
        }
        out.extend_from_slice(&self.current_obs);
        debug_assert_eq!(out.len(), self.encoded_len());
        out
    }

    /// Same encoding narrowed to f32 for replay storage. All observation
    /// channels are 0/1 indicators, so the narrowing is lossless.
    pub fn encode_f32(&self) -> Box<[f32]> {
        self.encode().iter().map(|&v| v as f32).collect()
    }
}

/// One collected step: the encoded history at decision time, the action
/// taken, and the transition it produced.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub history: Box<[f32]>,
    pub action: usize,
    pub transition: Transition,
}

/// A full episode collected by one policy.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub collector: Collector,
    pub seed: u64,
}

impl Trajectory {
    /// Timesteps are consecutive from 0 and at most the last step is terminal.
    pub fn well_formed(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| {
            s.transition.timestep == i && (!s.transition.done || i + 1 == self.steps.len())
        })
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.steps.iter().map(|s| s.transition.reward).sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.steps
            .iter()
            .map(|s| gamma.powi(s.transition.timestep as i32) * s.transition.reward)
            .sum()
    }
}

/// Deterministic substream of a master seed. Distinct labels give
/// independent streams, keeping e.g. evaluation seeds disjoint from
/// training seeds.
pub fn seed_stream(master: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(label);
    rng
}
