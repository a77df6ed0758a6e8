//! Gaussian actor-critic.
//!
//! The actor maps an observation to the mean of a diagonal Gaussian; the
//! standard deviation comes from a state-independent log-std vector. Samples
//! live in a normalized action space and are mapped affinely onto the
//! environment's box (`center + half_width * a`) and then clamped. Log-probs
//! are those of the unclamped Gaussian sample; no squashing correction is
//! applied.

use std::f64::consts::PI;

use super::mlp::{MlpCache, MlpShape};
use crate::env::ActionSpace;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// All trainable parameters in one flat vector:
/// `[actor MLP | log_std | critic MLP]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    actor: MlpShape,
    critic: MlpShape,
    data: Vec<f64>,
}

impl PolicyParams {
    /// Orthogonal initialization: gain sqrt(2) on hidden layers, 0.01 on the
    /// actor head, 1 on the critic head; log-std starts at 0.
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut SplitMix64) -> Self {
        Self::with_gains(obs_dim, act_dim, hidden, rng, 2f64.sqrt(), 0.01, 1.0)
    }

    pub fn with_gains(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        rng: &mut SplitMix64,
        hidden_gain: f64,
        actor_gain: f64,
        critic_gain: f64,
    ) -> Self {
        let actor = MlpShape::new([&[obs_dim][..], hidden, &[act_dim]].concat());
        let critic = MlpShape::new([&[obs_dim][..], hidden, &[1]].concat());
        let mut data = actor.init(rng, hidden_gain, actor_gain);
        data.extend(std::iter::repeat(0.0).take(act_dim));
        data.extend(critic.init(rng, hidden_gain, critic_gain));
        Self {
            actor,
            critic,
            data,
        }
    }

    /// Reassemble from shapes and a flat parameter vector.
    pub fn from_parts(actor: MlpShape, critic: MlpShape, data: Vec<f64>) -> Result<Self> {
        let expected = actor.n_params() + actor.output_dim() + critic.n_params();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        if actor.input_dim() != critic.input_dim() || critic.output_dim() != 1 {
            return Err(Error::contract("actor and critic shapes are inconsistent"));
        }
        Ok(Self {
            actor,
            critic,
            data,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn actor_shape(&self) -> &MlpShape {
        &self.actor
    }

    pub fn critic_shape(&self) -> &MlpShape {
        &self.critic
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn actor_end(&self) -> usize {
        self.actor.n_params()
    }

    fn log_std_end(&self) -> usize {
        self.actor_end() + self.act_dim()
    }

    pub fn actor_params(&self) -> &[f64] {
        &self.data[..self.actor_end()]
    }

    pub fn log_std(&self) -> &[f64] {
        &self.data[self.actor_end()..self.log_std_end()]
    }

    pub fn critic_params(&self) -> &[f64] {
        &self.data[self.log_std_end()..]
    }

    /// Split a gradient buffer laid out like the parameters.
    pub fn split_grad<'a>(&self, grad: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64], &'a mut [f64]) {
        let (actor, rest) = grad.split_at_mut(self.actor_end());
        let (log_std, critic) = rest.split_at_mut(self.act_dim());
        (actor, log_std, critic)
    }

    pub fn clamp_log_std(&mut self) {
        let range = self.actor_end()..self.log_std_end();
        for v in &mut self.data[range] {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Zero the actor's output layer so the mean action is 0 everywhere.
    pub fn zero_actor_head(&mut self) {
        let last = self.actor.n_layers() - 1;
        let off = self.actor.layer_offset(last);
        let end = self.actor_end();
        self.data[off..end].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn actor_forward(&self, obs: &[f64], batch: usize) -> MlpCache {
        self.actor.forward(self.actor_params(), obs, batch)
    }

    pub fn critic_forward(&self, obs: &[f64], batch: usize) -> MlpCache {
        self.critic.forward(self.critic_params(), obs, batch)
    }

    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        self.actor_forward(obs, 1).output().to_vec()
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.critic_forward(obs, 1).output()[0]
    }
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// Closed-form entropy of a diagonal Gaussian: `sum(log_std) + d/2 (1 + ln 2 pi)`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + (2.0 * PI).ln())).sum()
}

/// Map a normalized action onto the box: `center + half_width * a`, clamped.
pub fn to_env_action(action: &[f64], space: &ActionSpace) -> Vec<f64> {
    action
        .iter()
        .zip(space.low.iter().zip(&space.high))
        .map(|(a, (lo, hi))| {
            let center = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            (center + half * a).clamp(*lo, *hi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    /// Unclamped Gaussian sample in normalized units.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

pub fn sample_action(params: &PolicyParams, obs: &[f64], rng: &mut SplitMix64) -> Result<ActionSample> {
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract(format!("non-finite observation {obs:?}")));
    }
    let mean = params.mean_action(obs);
    let value = params.value(obs);
    if mean.iter().any(|v| !v.is_finite()) || !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "policy output mean {mean:?}, value {value} for observation {obs:?}"
        )));
    }
    let action: Vec<f64> = mean
        .iter()
        .zip(params.log_std())
        .map(|(m, ls)| m + ls.exp() * rng.normal())
        .collect();
    let log_prob = gaussian_log_prob(&action, &mean, params.log_std());
    Ok(ActionSample {
        action,
        log_prob,
        value,
    })
}

/// Gradient of `log pi(action | obs)` with respect to every parameter (critic
/// entries are zero). Used by the finite-difference checks.
pub fn log_prob_grad(params: &PolicyParams, obs: &[f64], action: &[f64]) -> Vec<f64> {
    let cache = params.actor_forward(obs, 1);
    let mean = cache.output();
    let mut grad = vec![0.0; params.len()];
    let mut d_mean = vec![0.0; params.act_dim()];
    {
        let log_std = params.log_std().to_vec();
        let (_, g_log_std, _) = params.split_grad(&mut grad);
        for j in 0..action.len() {
            let var = (2.0 * log_std[j]).exp();
            let diff = action[j] - mean[j];
            d_mean[j] = diff / var;
            g_log_std[j] = diff * diff / var - 1.0;
        }
    }
    let (g_actor, _, _) = params.split_grad(&mut grad);
    params.actor_shape().backward(params.actor_params(), &cache, &d_mean, g_actor);
    grad
}

/// Gradient of `V(obs)` with respect to every parameter (actor entries are zero).
pub fn value_grad(params: &PolicyParams, obs: &[f64]) -> Vec<f64> {
    let cache = params.critic_forward(obs, 1);
    let mut grad = vec![0.0; params.len()];
    let (_, _, g_critic) = params.split_grad(&mut grad);
    params.critic_shape().backward(params.critic_params(), &cache, &[1.0], g_critic);
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_head_gives_zero_mean() {
        let mut rng = SplitMix64::new(0);
        let mut p = PolicyParams::new(3, 2, &[64, 64], &mut rng);
        p.zero_actor_head();
        for k in 0..20 {
            let obs = [k as f64, -0.3 * k as f64, 1.0];
            assert_eq!(p.mean_action(&obs), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = PolicyParams::new(3, 1, &[8, 8], &mut SplitMix64::new(1));
        let draw = |seed| {
            let mut rng = SplitMix64::new(seed);
            (0..10)
                .map(|_| sample_action(&p, &[0.1, 0.2, 0.3], &mut rng).unwrap().action[0])
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn log_prob_matches_closed_form_density() {
        let mut rng = SplitMix64::new(2);
        let mut p = PolicyParams::new(2, 2, &[4], &mut rng);
        let i = p.actor_params().len();
        p.as_mut_slice()[i] = -0.4;
        p.as_mut_slice()[i + 1] = 0.3;
        let obs = [0.5, -1.0];
        let s = sample_action(&p, &obs, &mut rng).unwrap();
        let mean = p.mean_action(&obs);
        let density: f64 = (0..2)
            .map(|j| {
                let sigma = p.log_std()[j].exp();
                let z = (s.action[j] - mean[j]) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            })
            .product();
        assert!((s.log_prob - density.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_increases_with_log_std() {
        let mut prev = f64::NEG_INFINITY;
        for k in -10..=4 {
            let ls = k as f64 * 0.5;
            let h = gaussian_entropy(&[ls, ls]);
            assert!(h > prev);
            prev = h;
        }
        // Standard normal: 0.5 ln(2 pi e).
        assert!((gaussian_entropy(&[0.0]) - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-15);
    }

    #[test]
    fn env_action_mapping() {
        let space = ActionSpace::uniform(1, -2.0, 2.0);
        assert_eq!(to_env_action(&[0.5], &space), vec![1.0]);
        assert_eq!(to_env_action(&[3.0], &space), vec![2.0]);
        let space = ActionSpace::uniform(2, 0.0, 8.0);
        assert_eq!(to_env_action(&[-1.0, 0.0], &space), vec![0.0, 4.0]);
    }

    #[test]
    fn log_std_clamp() {
        let mut p = PolicyParams::new(2, 1, &[4], &mut SplitMix64::new(0));
        let i = p.actor_params().len();
        p.as_mut_slice()[i] = 7.0;
        p.clamp_log_std();
        assert_eq!(p.log_std()[0], LOG_STD_MAX);
        p.as_mut_slice()[i] = -9.0;
        p.clamp_log_std();
        assert_eq!(p.log_std()[0], LOG_STD_MIN);
    }
}
