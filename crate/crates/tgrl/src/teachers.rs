//! Privileged teacher policies: shortest-path oracles over the full map and
//! calibrated sub-optimal variants.
//!
//! Teachers are pure functions of the privileged observation. Their action
//! distributions are smoothed so that every action keeps probability at
//! least `eps / num_actions`, which keeps log-probabilities finite before
//! any clipping happens downstream.

use rand::Rng;

use crate::error::TeacherError;
use crate::pomdp::Environment;

/// Default smoothing mass spread uniformly over the actions.
pub const DEFAULT_SMOOTHING: f64 = 0.02;

/// A policy over privileged observations. Immutable after construction and
/// safe to share read-only across parallel runs.
pub trait Teacher: Send + Sync {
    fn num_actions(&self) -> usize;

    /// Full action distribution; sums to one and every entry is positive.
    fn action_probs(&self, privileged_obs: &[f64]) -> Vec<f64>;
}

/// Distribution that puts `1 - eps` on `best` and spreads `eps` uniformly.
pub(crate) fn smoothed_probs(best: usize, num_actions: usize, eps: f64) -> Vec<f64> {
    let mut probs = vec![eps / num_actions as f64; num_actions];
    probs[best] += 1.0 - eps;
    probs
}

/// Natural log of the probability the teacher assigns to `action`. Finite
/// for every action by the smoothing invariant.
pub fn teacher_logprob(teacher: &dyn Teacher, privileged_obs: &[f64], action: usize) -> f64 {
    teacher.action_probs(privileged_obs)[action].ln()
}

fn corrupt_probs(base: &dyn Teacher, corruption: f64, privileged_obs: &[f64]) -> Vec<f64> {
    let mut probs = base.action_probs(privileged_obs);
    let u = corruption / probs.len() as f64;
    for p in &mut probs {
        *p = (1.0 - corruption) * *p + u;
    }
    probs
}

/// A base teacher degraded by substituting, with probability `corruption`
/// per step, a uniform-random action distribution. The per-step marginal is
/// the corresponding mixture; `corruption = 0` reduces exactly to the base.
pub struct SuboptimalTeacher {
    base: Box<dyn Teacher>,
    corruption: f64,
}

impl SuboptimalTeacher {
    pub fn new(base: Box<dyn Teacher>, corruption: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&corruption),
            "corruption must lie in [0, 1]"
        );
        Self { base, corruption }
    }

    pub fn corruption(&self) -> f64 {
        self.corruption
    }
}

impl Teacher for SuboptimalTeacher {
    fn num_actions(&self) -> usize {
        self.base.num_actions()
    }

    fn action_probs(&self, privileged_obs: &[f64]) -> Vec<f64> {
        corrupt_probs(self.base.as_ref(), self.corruption, privileged_obs)
    }
}

/// Borrowing variant used while calibrating, before ownership of the base
/// teacher is settled.
struct CorruptionProbe<'a> {
    base: &'a dyn Teacher,
    corruption: f64,
}

impl Teacher for CorruptionProbe<'_> {
    fn num_actions(&self) -> usize {
        self.base.num_actions()
    }

    fn action_probs(&self, privileged_obs: &[f64]) -> Vec<f64> {
        corrupt_probs(self.base, self.corruption, privileged_obs)
    }
}

/// Construct the shortest-path oracle for a benchmark environment.
pub fn make_shortest_path_teacher(env_name: &str) -> Result<Box<dyn Teacher>, TeacherError> {
    use crate::envs;
    Ok(match env_name {
        "tiger_door" => Box::new(envs::TigerDoorTeacher::new(DEFAULT_SMOOTHING)),
        "lava_crossing" => Box::new(envs::LavaCrossingTeacher::new(DEFAULT_SMOOTHING)),
        "memory" => Box::new(envs::MemoryTeacher::new(DEFAULT_SMOOTHING)),
        "light_dark" => Box::new(envs::LightDarkTeacher::new(DEFAULT_SMOOTHING)),
        other => {
            return Err(TeacherError::Env(crate::error::PomdpError::UnknownEnv(
                other.to_string(),
            )))
        }
    })
}

pub(crate) fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// Monte Carlo success rate of a teacher acting on its own privileged
/// observations. Success means the episode terminated with positive reward.
pub fn rollout_success(
    teacher: &dyn Teacher,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut impl Rng,
) -> f64 {
    let mut successes = 0usize;
    for _ in 0..episodes {
        let mut trans = env.reset(rng.gen());
        loop {
            let probs = teacher.action_probs(&trans.privileged_obs);
            let action = sample_categorical(&probs, rng);
            trans = env
                .step(action)
                .expect("teacher rollout stepped a live episode");
            if trans.done {
                if trans.reward > 0.0 {
                    successes += 1;
                }
                break;
            }
        }
    }
    successes as f64 / episodes as f64
}

/// Bisection on the corruption level until the measured success rate lands
/// within two percentage points of `target_success`. Measurement noise is
/// handled by widening the Monte Carlo sample and retrying, a bounded
/// number of times.
pub fn calibrate_suboptimal(
    base: Box<dyn Teacher>,
    target_success: f64,
    env: &mut dyn Environment,
    rng: &mut impl Rng,
) -> Result<SuboptimalTeacher, TeacherError> {
    const TOLERANCE: f64 = 0.02;

    let mut episodes = 1000usize;
    let base_success = {
        let probe = CorruptionProbe {
            base: base.as_ref(),
            corruption: 0.0,
        };
        rollout_success(&probe, env, episodes, rng)
    };
    if target_success > base_success + TOLERANCE {
        return Err(TeacherError::TargetAboveBase {
            target: target_success,
            base: base_success,
        });
    }
    if (base_success - target_success).abs() <= TOLERANCE {
        return Ok(SuboptimalTeacher::new(base, 0.0));
    }

    let mut best_miss = f64::INFINITY;
    for _attempt in 0..3 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..14 {
            let mid = 0.5 * (lo + hi);
            let probe = CorruptionProbe {
                base: base.as_ref(),
                corruption: mid,
            };
            let s = rollout_success(&probe, env, episodes, rng);
            if s > target_success {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        let probe = CorruptionProbe {
            base: base.as_ref(),
            corruption: p,
        };
        let confirmed = rollout_success(&probe, env, episodes.max(2000), rng);
        let miss = (confirmed - target_success).abs();
        if miss <= TOLERANCE {
            return Ok(SuboptimalTeacher::new(base, p));
        }
        best_miss = best_miss.min(miss);
        episodes *= 2;
    }
    Err(TeacherError::CalibrationFailed {
        target: target_success,
        tolerance: TOLERANCE,
        best_miss,
    })
}
