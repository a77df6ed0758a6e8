//! The PPO optimization phase.
//!
//! Loss per minibatch of size B:
//! `-mean(min(r A, clip(r, 1-eps, 1+eps) A)) + c1 mean((V - R)^2) - c2 H`
//! with `r = exp(logp_new - logp_old)` and per-minibatch normalized `A`.

use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::buffer::{normalize_advantages, RolloutBuffer};
use super::policy::{gaussian_entropy, PolicyParams};
use super::{explained_variance, PpoConfig};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateMetrics {
    /// Means over all minibatches of the update.
    pub losses: LossParts,
    /// Explained variance of the pre-update values against the GAE returns.
    pub ev: Option<f64>,
    pub grad_norm: f64,
    pub std: f64,
}

/// Loss and its gradient on one minibatch. `advantages` must already be
/// normalized and aligned with `indices`.
pub fn minibatch_loss_and_grad(
    params: &PolicyParams,
    buffer: &RolloutBuffer,
    indices: &[usize],
    advantages: &[f64],
    config: &PpoConfig,
) -> (LossParts, Vec<f64>) {
    let b = indices.len();
    let bf = b as f64;
    let (obs_dim, act_dim) = (buffer.obs_dim, buffer.act_dim);
    let mut obs = Vec::with_capacity(b * obs_dim);
    for &i in indices {
        obs.extend_from_slice(buffer.obs(i));
    }
    let actor = params.actor_forward(&obs, b);
    let critic = params.critic_forward(&obs, b);
    let means = actor.output();
    let values = critic.output();
    let log_std = params.log_std();
    let inv_var: Vec<f64> = log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let log_norm: f64 = log_std.iter().sum::<f64>() + act_dim as f64 * 0.918_938_533_204_672_7;

    let mut grad = vec![0.0; params.len()];
    let mut d_mean = vec![0.0; b * act_dim];
    let mut d_log_std = vec![0.0; act_dim];
    let mut d_value = vec![0.0; b];
    let mut parts = LossParts::default();
    let (lo, hi) = (1.0 - config.clip_eps, 1.0 + config.clip_eps);

    for (k, &i) in indices.iter().enumerate() {
        let a = buffer.action(i);
        let m = &means[k * act_dim..(k + 1) * act_dim];
        let mut sq = 0.0;
        for j in 0..act_dim {
            let d = a[j] - m[j];
            sq += d * d * inv_var[j];
        }
        let logp = -0.5 * sq - log_norm;
        let log_ratio = logp - buffer.log_probs[i];
        let ratio = log_ratio.exp();
        let adv = advantages[k];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(lo, hi) * adv;
        parts.policy -= unclipped.min(clipped) / bf;
        if ratio < lo || ratio > hi {
            parts.clip_fraction += 1.0 / bf;
        }
        parts.approx_kl += ((ratio - 1.0) - log_ratio) / bf;
        // d(-min)/d(logp): the unclipped branch is active whenever it is the
        // smaller one (inside the band both coincide).
        let d_logp = if unclipped <= clipped { -adv * ratio / bf } else { 0.0 };
        if d_logp != 0.0 {
            for j in 0..act_dim {
                let d = a[j] - m[j];
                d_mean[k * act_dim + j] = d_logp * d * inv_var[j];
                d_log_std[j] += d_logp * (d * d * inv_var[j] - 1.0);
            }
        }
        let err = values[k] - buffer.returns[i];
        parts.value += err * err / bf;
        d_value[k] = config.value_coef * 2.0 * err / bf;
    }
    parts.entropy = gaussian_entropy(log_std);
    parts.total = parts.policy + config.value_coef * parts.value - config.entropy_coef * parts.entropy;

    {
        let (g_actor, g_log_std, g_critic) = params.split_grad(&mut grad);
        params.actor_shape().backward(params.actor_params(), &actor, &d_mean, g_actor);
        for j in 0..act_dim {
            g_log_std[j] = d_log_std[j] - config.entropy_coef;
        }
        params.critic_shape().backward(params.critic_params(), &critic, &d_value, g_critic);
    }
    (parts, grad)
}

/// Run `epochs_per_update` passes of shuffled minibatch Adam steps over a
/// finished buffer. A trailing partial minibatch is kept.
pub fn ppo_update(
    params: &mut PolicyParams,
    optimizer: &mut Adam,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut SplitMix64,
) -> Result<UpdateMetrics> {
    let n = buffer.len();
    if buffer.advantages.len() != n || buffer.returns.len() != n {
        return Err(Error::contract("ppo_update called before advantages were computed"));
    }
    let ev = if n >= 2 {
        explained_variance(&buffer.values, &buffer.returns)?
    } else {
        None
    };
    let mut indices: Vec<usize> = (0..n).collect();
    let mut sum = LossParts::default();
    let mut grad_norm_sum = 0.0;
    let mut count = 0usize;
    for epoch in 0..config.epochs_per_update {
        rng.shuffle(&mut indices);
        for (mb, chunk) in indices.chunks(config.minibatch_size).enumerate() {
            let mut adv: Vec<f64> = chunk.iter().map(|&i| buffer.advantages[i]).collect();
            normalize_advantages(&mut adv);
            let (parts, mut grad) = minibatch_loss_and_grad(params, buffer, chunk, &adv, config);
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NanLoss { epoch, minibatch: mb });
            }
            grad_norm_sum += clip_grad_norm(&mut grad, config.max_grad_norm);
            optimizer.step(params.as_mut_slice(), &grad);
            params.clamp_log_std();
            if !params.is_finite() {
                return Err(Error::NonFinite(format!(
                    "parameters after epoch {epoch}, minibatch {mb}"
                )));
            }
            sum.policy += parts.policy;
            sum.value += parts.value;
            sum.entropy += parts.entropy;
            sum.total += parts.total;
            sum.approx_kl += parts.approx_kl;
            sum.clip_fraction += parts.clip_fraction;
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    let losses = LossParts {
        policy: sum.policy / c,
        value: sum.value / c,
        entropy: sum.entropy / c,
        total: sum.total / c,
        approx_kl: sum.approx_kl / c,
        clip_fraction: sum.clip_fraction / c,
    };
    let std = params.log_std().iter().map(|l| l.exp()).sum::<f64>() / params.act_dim() as f64;
    Ok(UpdateMetrics {
        losses,
        ev,
        grad_norm: grad_norm_sum / c,
        std,
    })
}
