//! Per-step rollout records and their JSON Lines form.
//!
//! A trajectory file starts with one header object (`{"header": {...}}`)
//! followed by one object per step with keys `t`, `obs`, `action`,
//! `raw_reward`, `semantic_reward`, `sentence`, plus `done` and `metrics`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{StepResult, Task, TaskMetrics};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub t: usize,
    /// Observation the action was chosen from.
    pub obs: Vec<f64>,
    /// Action as applied to the environment.
    pub action: Vec<f64>,
    pub raw_reward: f64,
    pub semantic_reward: Option<f64>,
    pub sentence: Option<String>,
    pub done: bool,
    pub metrics: TaskMetrics,
}

impl TrajectoryStep {
    pub fn from_result(t: usize, obs: Vec<f64>, action: Vec<f64>, result: &StepResult) -> Self {
        Self {
            t,
            obs,
            action,
            raw_reward: result.raw_reward,
            semantic_reward: result.semantic_reward,
            sentence: result.sentence.clone(),
            done: result.done,
            metrics: result.metrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub task: Task,
    pub seed: u64,
    pub episode_length: usize,
    #[serde(default)]
    pub checkpoint: Option<String>,
    #[serde(default)]
    pub embedder: Option<String>,
    #[serde(default)]
    pub goal: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    header: TrajectoryHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn new(header: TrajectoryHeader) -> Self {
        Self {
            header,
            steps: Vec::new(),
        }
    }

    /// Names accepted by [`Trajectory::channel`] for this trajectory.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names = vec!["t".to_owned(), "raw_reward".to_owned()];
        let Some(first) = self.steps.first() else {
            return names;
        };
        if first.semantic_reward.is_some() {
            names.push("semantic_reward".to_owned());
        }
        names.extend(first.metrics.named().into_iter().map(|(n, _)| n.to_owned()));
        names.extend((0..first.obs.len()).map(|i| format!("obs[{i}]")));
        names.extend((0..first.action.len()).map(|i| format!("action[{i}]")));
        names
    }

    /// Per-step values of a named channel: `t`, `raw_reward`,
    /// `semantic_reward`, a task metric (`theta`, `theta_dot`, `l2`, `cp`,
    /// `abs_cp`, `xi`), or an indexed `obs[i]` / `action[i]`.
    pub fn channel(&self, name: &str) -> Result<Vec<f64>> {
        let unknown = || {
            Error::config(format!(
                "unknown channel {name:?}; available: {}",
                self.channel_names().join(", ")
            ))
        };
        let indexed = |prefix: &str| -> Option<usize> {
            name.strip_prefix(prefix)?.strip_suffix(']')?.parse().ok()
        };
        self.steps
            .iter()
            .map(|s| {
                let v = match name {
                    "t" => Some(s.t as f64),
                    "raw_reward" => Some(s.raw_reward),
                    "semantic_reward" => s.semantic_reward,
                    _ => {
                        if let Some(i) = indexed("obs[") {
                            s.obs.get(i).copied()
                        } else if let Some(i) = indexed("action[") {
                            s.action.get(i).copied()
                        } else {
                            s.metrics.named().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
                        }
                    }
                };
                v.ok_or_else(unknown)
            })
            .collect()
    }

    pub fn raw_return(&self) -> f64 {
        self.steps.iter().map(|s| s.raw_reward).sum()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(
            &mut w,
            &HeaderLine {
                header: self.header.clone(),
            },
        )?;
        w.write_all(b"\n")?;
        for step in &self.steps {
            serde_json::to_writer(&mut w, step)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }

    pub fn read_jsonl<R: Read>(r: R, context: &str) -> Result<Self> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            context: format!("{context}:{}", line + 1),
            message,
        };
        let (i, first) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty trajectory file".into()))?;
        let header: HeaderLine =
            serde_json::from_str(&first?).map_err(|e| parse_err(i, e.to_string()))?;
        let mut steps = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            steps.push(serde_json::from_str(&line).map_err(|e| parse_err(i, e.to_string()))?);
        }
        Ok(Self {
            header: header.header,
            steps,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_jsonl(std::fs::File::open(path)?, &path.display().to_string())
    }
}

/// Concatenate the steps of several trajectories (for pooled correlation).
pub fn pool(trajectories: &[Trajectory]) -> Result<Trajectory> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::config("no trajectories to pool"))?;
    let mut pooled = Trajectory::new(first.header.clone());
    for t in trajectories {
        if t.header.task != first.header.task {
            return Err(Error::config(format!(
                "cannot pool {} and {} trajectories",
                first.header.task, t.header.task
            )));
        }
        pooled.steps.extend(t.steps.iter().cloned());
    }
    Ok(pooled)
}
