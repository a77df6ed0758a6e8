//! Episodic control tasks behind one interface.
//!
//! Every environment reports its classical ("raw") reward plus the task
//! metrics a describer needs to phrase the state in words. The metrics in a
//! [`StepResult`] always describe the same state the raw reward was computed
//! on, so the two reward channels are directly comparable step by step.

pub mod burgers;
pub mod fluid;
pub mod pendulum;

use serde::{Deserialize, Serialize};

pub use burgers::{BurgersEnv, BurgersState};
pub use fluid::{ActionToXi, FluidTrace, FluidTraceEnv, FluidTraceRecord};
pub use pendulum::{PendulumEnv, PendulumState};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Pendulum,
    Burgers,
    Fluid,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Pendulum => "pendulum",
            Task::Burgers => "burgers",
            Task::Fluid => "fluid",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(Task::Pendulum),
            "burgers" => Ok(Task::Burgers),
            "fluid" => Ok(Task::Fluid),
            other => Err(Error::config(format!(
                "unknown task {other:?} (expected pendulum, burgers, fluid)"
            ))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical quantities a describer renders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskMetrics {
    Pendulum { theta: f64, theta_dot: f64 },
    Burgers { l2: f64 },
    Fluid { cp: f64, xi: f64 },
}

impl TaskMetrics {
    pub fn task(&self) -> Task {
        match self {
            TaskMetrics::Pendulum { .. } => Task::Pendulum,
            TaskMetrics::Burgers { .. } => Task::Burgers,
            TaskMetrics::Fluid { .. } => Task::Fluid,
        }
    }

    /// Named scalar channels, in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            TaskMetrics::Pendulum { theta, theta_dot } => {
                vec![("theta", theta), ("theta_dot", theta_dot)]
            }
            TaskMetrics::Burgers { l2 } => vec![("l2", l2)],
            TaskMetrics::Fluid { cp, xi } => vec![("cp", cp), ("abs_cp", cp.abs()), ("xi", xi)],
        }
    }
}

/// Axis-aligned action box.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionSpace {
    pub fn uniform(dim: usize, low: f64, high: f64) -> Self {
        Self {
            low: vec![low; dim],
            high: vec![high; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn clamp(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub raw_reward: f64,
    /// Filled in by a semantic wrapper; `None` for a bare environment.
    pub semantic_reward: Option<f64>,
    pub sentence: Option<String>,
    pub done: bool,
    pub metrics: TaskMetrics,
    /// Set when the episode ended abnormally (e.g. solver blowup).
    pub diagnostic: Option<String>,
}

pub trait Environment: Send {
    fn task(&self) -> Task;
    fn obs_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    /// Steps per episode; `done` is raised on the last one.
    fn horizon(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
    /// Metrics of the current state.
    fn metrics(&self) -> TaskMetrics;
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn task(&self) -> Task {
        (**self).task()
    }
    fn obs_dim(&self) -> usize {
        (**self).obs_dim()
    }
    fn action_space(&self) -> ActionSpace {
        (**self).action_space()
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        (**self).reset(seed)
    }
    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        (**self).step(action)
    }
    fn metrics(&self) -> TaskMetrics {
        (**self).metrics()
    }
}

pub(crate) fn check_action(action: &[f64], dim: usize) -> Result<()> {
    if action.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: action.len(),
        });
    }
    if let Some(a) = action.iter().find(|a| !a.is_finite()) {
        return Err(Error::contract(format!("non-finite action component {a}")));
    }
    Ok(())
}
