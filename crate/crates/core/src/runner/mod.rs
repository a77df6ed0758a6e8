//! Experiment orchestration: config files, training runs, rollouts,
//! correlation reports and policy comparisons.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_compare, cmd_correlate, cmd_describe, cmd_embed, cmd_rollout, cmd_train, compare_policies, exit_code,
    run_training, ComparisonRow, MeanStd, RunManifest, TrainSummary,
};
pub use config::{make_env, make_semantic_env, EvalConfig, ExperimentConfig};
