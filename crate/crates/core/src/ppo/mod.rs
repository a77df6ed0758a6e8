//! Actor-critic PPO with GAE, a clipped surrogate and an entropy bonus.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod mlp;
pub mod policy;
pub mod train;
pub mod update;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::Adam;
pub use buffer::{compute_gae, normalize_advantages, RolloutBuffer};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointInfo, CheckpointMeta};
pub use policy::{sample_action, ActionSample, PolicyParams};
pub use train::{evaluate, rollout_deterministic, train, RewardMode, TrainOutcome, UpdateRecord};
pub use update::{ppo_update, UpdateMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub rollout_length: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub total_timesteps: usize,
    pub seed: u64,
    /// Hidden layer widths shared by actor and critic.
    pub hidden: Vec<usize>,
    /// Initial value of every log-std entry.
    pub log_std_init: f64,
    /// Treat the horizon cut as truncation: add `gamma * V(s_T)` to the last
    /// reward of an episode that ended by time limit.
    pub bootstrap_truncation: bool,
    /// Updates between checkpoints; 0 keeps only the final one.
    pub checkpoint_interval: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            epochs_per_update: 10,
            minibatch_size: 64,
            rollout_length: 2048,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            total_timesteps: 1_000_000,
            seed: 0,
            hidden: vec![64, 64],
            log_std_init: 0.0,
            bootstrap_truncation: true,
            checkpoint_interval: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(format!("ppo: {m}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return fail("clip_eps must be positive");
        }
        if self.epochs_per_update == 0 || self.minibatch_size == 0 || self.rollout_length == 0 {
            return fail("epochs_per_update, minibatch_size and rollout_length must be positive");
        }
        if self.minibatch_size > self.rollout_length {
            return fail("minibatch_size exceeds rollout_length");
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0 && self.max_grad_norm > 0.0) {
            return fail("entropy_coef and value_coef must be >= 0, max_grad_norm > 0");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden layers must be non-empty with positive widths");
        }
        if !(policy::LOG_STD_MIN..=policy::LOG_STD_MAX).contains(&self.log_std_init) {
            return fail("log_std_init must lie in [-5, 2]");
        }
        Ok(())
    }

    /// Number of collect/update cycles needed to reach `total_timesteps`.
    pub fn n_updates(&self) -> usize {
        self.total_timesteps.div_ceil(self.rollout_length)
    }
}

/// `1 - Var(target - pred) / Var(target)`; `None` when the target is constant.
pub fn explained_variance(pred: &[f64], target: &[f64]) -> Result<Option<f64>> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    if target.len() < 2 {
        return Err(Error::contract("explained variance needs at least 2 samples"));
    }
    let var_target = variance(target);
    if var_target == 0.0 {
        return Ok(None);
    }
    let resid: Vec<f64> = target.iter().zip(pred).map(|(t, p)| t - p).collect();
    Ok(Some(1.0 - variance(&resid) / var_target))
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
