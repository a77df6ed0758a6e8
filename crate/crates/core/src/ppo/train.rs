//! Collect, estimate advantages, update; repeat.

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::RolloutBuffer;
use super::policy::{sample_action, to_env_action, PolicyParams};
use super::update::{ppo_update, LossParts};
use super::PpoConfig;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::trajectory::{Trajectory, TrajectoryHeader, TrajectoryStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Semantic,
    Raw,
}

impl std::str::FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semantic" => Ok(RewardMode::Semantic),
            "raw" => Ok(RewardMode::Raw),
            other => Err(Error::config(format!("unknown reward mode {other:?} (expected semantic, raw)"))),
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub update: usize,
    pub timesteps: usize,
    /// Mean episode return of each channel over episodes finished during
    /// this update's rollout.
    pub mean_sem_reward: Option<f64>,
    pub mean_raw_reward: Option<f64>,
    pub ev: Option<f64>,
    pub losses: LossParts,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<UpdateRecord>,
    pub timesteps: usize,
    pub episodes: usize,
}

/// Fresh policy for an environment under `config`'s seed.
pub fn initial_params<E: Environment + ?Sized>(env: &E, config: &PpoConfig, rng: &mut SplitMix64) -> PolicyParams {
    let mut params = PolicyParams::new(env.obs_dim(), env.action_space().dim(), &config.hidden, rng);
    let n = params.actor_params().len();
    let act = params.act_dim();
    params.as_mut_slice()[n..n + act].fill(config.log_std_init);
    params
}

/// Train a fresh policy on `env`. `on_update` sees every log record with the
/// parameters right after that update; an error from it aborts training.
///
/// In semantic mode the environment must fill `semantic_reward` (see
/// [`crate::semantic::wrap_env`]).
pub fn train<E, F>(env: &mut E, mode: RewardMode, config: &PpoConfig, mut on_update: F) -> Result<TrainOutcome>
where
    E: Environment + ?Sized,
    F: FnMut(&UpdateRecord, &PolicyParams) -> Result<()>,
{
    config.validate()?;
    let mut root = SplitMix64::new(config.seed);
    let mut params = initial_params(env, config, &mut root.fork());
    let mut sample_rng = root.fork();
    let mut shuffle_rng = root.fork();
    let mut episode_seeds = root.fork();
    let mut optimizer = Adam::new(params.len(), config.learning_rate);
    let space = env.action_space();
    let mut buffer = RolloutBuffer::new(params.obs_dim(), params.act_dim(), config.rollout_length);
    let mut log = Vec::new();
    let mut timesteps = 0;
    let mut episodes = 0;

    let n_updates = config.n_updates();
    if n_updates == 0 {
        return Ok(TrainOutcome {
            params,
            log,
            timesteps,
            episodes,
        });
    }
    let mut obs = env.reset(episode_seeds.next_u64())?;
    let (mut ep_sem, mut ep_raw) = (0.0, 0.0);
    let mut sem_seen = false;

    for update in 1..=n_updates {
        buffer.clear();
        let mut finished_sem = Vec::new();
        let mut finished_raw = Vec::new();
        for _ in 0..config.rollout_length {
            let s = sample_action(&params, &obs, &mut sample_rng)?;
            let result = env.step(&to_env_action(&s.action, &space))?;
            timesteps += 1;
            ep_raw += result.raw_reward;
            if let Some(r) = result.semantic_reward {
                ep_sem += r;
                sem_seen = true;
            }
            let mut reward = match mode {
                RewardMode::Raw => result.raw_reward,
                RewardMode::Semantic => result.semantic_reward.ok_or_else(|| {
                    Error::config("semantic reward mode needs an environment wrapped with a semantic reward")
                })?,
            };
            if result.done {
                if config.bootstrap_truncation && result.diagnostic.is_none() {
                    reward += config.gamma * params.value(&result.observation);
                }
                finished_raw.push(ep_raw);
                if sem_seen {
                    finished_sem.push(ep_sem);
                }
                (ep_sem, ep_raw, sem_seen) = (0.0, 0.0, false);
                episodes += 1;
            }
            buffer.push(&obs, &s.action, s.log_prob, s.value, reward, result.done);
            obs = if result.done {
                env.reset(episode_seeds.next_u64())?
            } else {
                result.observation
            };
        }
        let last_value = params.value(&obs);
        buffer.finish(last_value, config.gamma, config.gae_lambda)?;
        let metrics = ppo_update(&mut params, &mut optimizer, &buffer, config, &mut shuffle_rng)?;
        let record = UpdateRecord {
            update,
            timesteps,
            mean_sem_reward: mean(&finished_sem),
            mean_raw_reward: mean(&finished_raw),
            ev: metrics.ev,
            losses: metrics.losses,
        };
        log::info!(
            "update {update}/{n_updates} t={timesteps} raw={:?} sem={:?} ev={:?} std={:.3}",
            record.mean_raw_reward,
            record.mean_sem_reward,
            record.ev,
            metrics.std
        );
        on_update(&record, &params)?;
        log.push(record);
    }
    Ok(TrainOutcome {
        params,
        log,
        timesteps,
        episodes,
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// One episode with the policy mean (no sampling noise) from `env.reset(seed)`.
pub fn rollout_deterministic<E: Environment + ?Sized>(
    params: &PolicyParams,
    env: &mut E,
    seed: u64,
) -> Result<Trajectory> {
    if params.obs_dim() != env.obs_dim() || params.act_dim() != env.action_space().dim() {
        return Err(Error::Checkpoint(format!(
            "policy expects obs {} / action {}, environment has obs {} / action {}",
            params.obs_dim(),
            params.act_dim(),
            env.obs_dim(),
            env.action_space().dim()
        )));
    }
    let space = env.action_space();
    let mut obs = env.reset(seed)?;
    let mut steps = Vec::with_capacity(env.horizon());
    for t in 0..env.horizon() {
        let mean = params.mean_action(&obs);
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("policy mean {mean:?} at step {t}")));
        }
        let action = to_env_action(&mean, &space);
        let result = env.step(&action)?;
        steps.push(TrajectoryStep::from_result(t, obs, action, &result));
        obs = result.observation;
        if result.done {
            break;
        }
    }
    Ok(Trajectory {
        header: TrajectoryHeader {
            task: env.task(),
            seed,
            episode_length: steps.len(),
            checkpoint: None,
            embedder: None,
            goal: None,
        },
        steps,
    })
}

/// Deterministic rollouts on seeds `base_seed + i`, `i < n`.
pub fn evaluate<E: Environment + ?Sized>(
    params: &PolicyParams,
    env: &mut E,
    base_seed: u64,
    n: usize,
) -> Result<Vec<Trajectory>> {
    (0..n as u64)
        .map(|i| rollout_deterministic(params, env, base_seed.wrapping_add(i)))
        .collect()
}
