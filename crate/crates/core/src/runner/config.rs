//! Experiment configuration files (JSON, versioned).
//!
//! ```json
//! {
//!   "version": 1,
//!   "task": "pendulum",
//!   "reward_mode": "semantic",
//!   "embedder": { "backend": "numeric_oracle", "dim": 768 },
//!   "ppo": { "total_timesteps": 200000, "seed": 0 },
//!   "eval": { "n_rollouts": 100, "base_seed": 10000 },
//!   "output_dir": "runs/pendulum-semantic"
//! }
//! ```
//!
//! Omitted `ppo` and `eval` keys take their defaults; unknown keys are
//! rejected. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbedderSpec;
use crate::env::{ActionToXi, BurgersEnv, Environment, FluidTrace, FluidTraceEnv, PendulumEnv, Task};
use crate::error::{Error, Result};
use crate::ppo::{PpoConfig, RewardMode};
use crate::semantic::{wrap_env, SemanticRewardSpec};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_rollouts: usize,
    /// Rollout `i` runs on seed `base_seed + i`.
    pub base_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_rollouts: 100,
            base_seed: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub task: Task,
    pub reward_mode: RewardMode,
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
    /// Fluid task only: trace CSV to replay (defaults to the built-in
    /// synthetic trace).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid_trace: Option<PathBuf>,
    /// Fluid task only: action-to-spin map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_to_xi: Option<ActionToXi>,
    /// Use this trained policy instead of training (for `compare`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(task: Task, reward_mode: RewardMode, embedder: EmbedderSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            version: CONFIG_VERSION,
            task,
            reward_mode,
            embedder,
            ppo: PpoConfig::default(),
            eval: EvalConfig::default(),
            output_dir: output_dir.into(),
            fluid_trace: None,
            action_to_xi: None,
            checkpoint: None,
        }
    }

    /// Read, parse and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::ConfigNotFound(path.to_owned()),
            _ => Error::Io(e),
        })?;
        let mut config = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    /// Parse and validate; parse errors carry line and column.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_owned(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "unsupported config version {} (this build reads version {CONFIG_VERSION})",
                self.version
            )));
        }
        self.embedder.validate()?;
        self.ppo.validate()?;
        if self.task != Task::Fluid && (self.fluid_trace.is_some() || self.action_to_xi.is_some()) {
            return Err(Error::config("fluid_trace and action_to_xi apply to the fluid task only"));
        }
        if let Some(map) = self.action_to_xi {
            if !(map.scale.is_finite() && map.offset.is_finite() && map.scale != 0.0) {
                return Err(Error::config("action_to_xi needs finite offset and non-zero scale"));
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = self.fluid_trace.as_mut() {
            fix(p);
        }
        if let Some(p) = self.checkpoint.as_mut() {
            fix(p);
        }
    }
}

/// Bare environment for a task. The fluid task replays `trace` (or the
/// synthetic trace).
pub fn make_env(task: Task, trace: Option<&Path>, action_to_xi: Option<ActionToXi>) -> Result<Box<dyn Environment>> {
    Ok(match task {
        Task::Pendulum => Box::new(PendulumEnv::new()),
        Task::Burgers => Box::new(BurgersEnv::new()),
        Task::Fluid => {
            let trace = match trace {
                Some(p) => FluidTrace::load(p)?,
                None => FluidTrace::synthetic(),
            };
            Box::new(FluidTraceEnv::new(trace, action_to_xi.unwrap_or_default())?)
        }
    })
}

/// Environment that reports both reward channels.
pub fn make_semantic_env(
    task: Task,
    embedder: &EmbedderSpec,
    trace: Option<&Path>,
    action_to_xi: Option<ActionToXi>,
) -> Result<Box<dyn Environment>> {
    let spec = SemanticRewardSpec::from_embedder_spec(task, embedder)?;
    Ok(Box::new(wrap_env(make_env(task, trace, action_to_xi)?, spec)?))
}

impl ExperimentConfig {
    pub fn environment(&self) -> Result<Box<dyn Environment>> {
        make_semantic_env(self.task, &self.embedder, self.fluid_trace.as_deref(), self.action_to_xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "task": "pendulum",
        "reward_mode": "semantic",
        "embedder": {"backend": "hash", "dim": 64},
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MINIMAL, "mem").unwrap();
        assert_eq!(c.ppo, PpoConfig::default());
        assert_eq!(c.eval.n_rollouts, 100);
        let echoed = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&echoed, "echo").unwrap(), c);
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let text = MINIMAL.replace("\"output_dir\"", "\"outptu_dir\": 1,\n \"output_dir\"");
        let err = ExperimentConfig::parse(&text, "cfg.json").unwrap_err().to_string();
        assert!(err.contains("outptu_dir") && err.contains("line 6"), "{err}");
    }

    #[test]
    fn wrong_version_and_bad_ppo_rejected() {
        let text = MINIMAL.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(ExperimentConfig::parse(&text, "c"), Err(Error::Config(_))));
        let text = MINIMAL.replace("\"output_dir\"", "\"ppo\": {\"gamma\": 1.0}, \"output_dir\"");
        assert!(matches!(ExperimentConfig::parse(&text, "c"), Err(Error::Config(_))));
    }

    #[test]
    fn missing_file() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/cfg.json")).unwrap_err();
        assert!(matches!(err, Error::ConfigNotFound(_)));
        assert!(err.to_string().contains("config not found"));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.json");
        std::fs::write(&path, MINIMAL).unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.output_dir, dir.path().join("out"));
    }

    #[test]
    fn every_task_builds_a_semantic_env() {
        for task in [Task::Pendulum, Task::Burgers, Task::Fluid] {
            let mut env = make_semantic_env(task, &EmbedderSpec::hash(64), None, None).unwrap();
            env.reset(0).unwrap();
            let a = vec![0.0; env.action_space().dim()];
            assert!(env.step(&a).unwrap().semantic_reward.is_some());
        }
    }
}
