//! Rollout storage and advantage estimation.

use crate::error::{Error, Result};

/// One rollout of `len` transitions; observations and actions are flattened
/// row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub observations: Vec<f64>,
    /// Normalized (pre-clamp) actions the log-probs refer to.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// `dones[t]` is true when transition `t` ended its episode.
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, act_dim: usize, capacity: usize) -> Self {
        Self {
            obs_dim,
            act_dim,
            observations: Vec::with_capacity(capacity * obs_dim),
            actions: Vec::with_capacity(capacity * act_dim),
            log_probs: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], log_prob: f64, value: f64, reward: f64, done: bool) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        debug_assert_eq!(action.len(), self.act_dim);
        self.observations.extend_from_slice(obs);
        self.actions.extend_from_slice(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
        self.advantages.clear();
        self.returns.clear();
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }

    /// Fill `advantages` and `returns` from the stored transitions.
    pub fn finish(&mut self, last_value: f64, gamma: f64, lambda: f64) -> Result<()> {
        let (adv, ret) = compute_gae(&self.rewards, &self.values, &self.dones, last_value, gamma, lambda)?;
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }
}

/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}` with
/// `delta_t = r_t + gamma * (1 - done_t) * V_{t+1} - V_t`, where `V_T` is
/// `last_value`. Returns `(advantages, advantages + values)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::contract(format!(
            "buffer arrays differ in length: rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n { last_value } else { values[t + 1] };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shift and scale to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [1.0, -2.0, 0.5];
        let v = [0.3, 0.1, -0.4];
        let (adv, _) = compute_gae(&r, &v, &[false; 3], 0.7, 0.9, 0.0).unwrap();
        let next = [0.1, -0.4, 0.7];
        for t in 0..3 {
            assert_eq!(adv[t], r[t] + 0.9 * next[t] - v[t]);
        }
    }

    #[test]
    fn monte_carlo_limit() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let (adv, ret) = compute_gae(&r, &[0.0; 4], &[false; 4], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn done_blocks_bootstrap() {
        let (adv, _) = compute_gae(&[1.0, 1.0], &[0.0, 5.0], &[true, false], 0.0, 0.9, 0.9).unwrap();
        assert_eq!(adv[0], 1.0);
    }

    #[test]
    fn normalization() {
        let mut rng = SplitMix64::new(3);
        let mut a: Vec<f64> = (0..64).map(|_| 5.0 + 3.0 * rng.normal()).collect();
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 64.0;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 64.0).sqrt();
        assert!(mean.abs() < 1e-6);
        assert!((std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        assert!(compute_gae(&[1.0], &[1.0, 2.0], &[false], 0.0, 0.9, 0.9).is_err());
    }
}
