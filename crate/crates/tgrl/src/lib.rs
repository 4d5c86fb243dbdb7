//! Teacher-guided reinforcement learning for POMDPs.
//!
//! A student policy with restricted observations learns from both the task
//! reward and a privileged teacher, with the balance between the two set by
//! a Lagrangian dual variable that adapts over training. The crate bundles
//! the learner, four gridworld benchmarks with shortest-path teacher
//! oracles, comparison baselines, and a seeded experiment harness.

pub mod error;
pub mod nn;
pub mod pomdp;
