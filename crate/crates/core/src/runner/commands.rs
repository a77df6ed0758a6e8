//! The command implementations behind the CLI.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{make_semantic_env, ExperimentConfig};
use crate::describer::SentenceTemplate;
use crate::embedding::{cosine, Embedder, EmbedderSpec};
use crate::env::{Task, TaskMetrics};
use crate::error::{Error, Result};
use crate::ppo::checkpoint::{config_hash, CheckpointInfo};
use crate::ppo::{evaluate, load_checkpoint, save_checkpoint, train, PolicyParams, UpdateRecord};
use crate::stats::{correlate_rollout, CorrelationReport, TauVariant};
use crate::trajectory::{pool, Trajectory};

pub const LOG_FILE: &str = "train_log.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FINAL_CHECKPOINT: &str = "policy.bin";

/// Everything needed to re-run an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub git_describe: String,
    pub crate_version: String,
    pub embedder_id: String,
    pub model_id: String,
    pub goal_sentence: String,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub output_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub log: Vec<UpdateRecord>,
    pub params: PolicyParams,
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_owned())
}

fn checkpoint_info(config: &ExperimentConfig, hash: &str, timesteps: usize, update: usize) -> CheckpointInfo {
    CheckpointInfo {
        task: config.task,
        config_hash: hash.to_owned(),
        timesteps,
        update,
        embedder: Some(config.embedder.clone()),
    }
}

/// Train per `config`, writing the manifest, the JSON Lines log and
/// checkpoints under `config.output_dir`.
pub fn run_training(config: &ExperimentConfig) -> Result<TrainSummary> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    let hash = config_hash(config)?;
    let mut env = config.environment()?;
    let embedder = Embedder::from_spec(&config.embedder)?;
    let manifest = RunManifest {
        config: config.clone(),
        config_hash: hash.clone(),
        git_describe: git_describe(),
        crate_version: env!("CARGO_PKG_VERSION").to_owned(),
        embedder_id: config.embedder.identifier(),
        model_id: embedder.model_id(),
        goal_sentence: SentenceTemplate::new(config.task).goal().into_string(),
    };
    let mut manifest_json = serde_json::to_vec_pretty(&manifest)?;
    manifest_json.push(b'\n');
    std::fs::write(out.join(MANIFEST_FILE), manifest_json)?;

    let mut log_file = std::io::BufWriter::new(std::fs::File::create(out.join(LOG_FILE))?);
    let interval = config.ppo.checkpoint_interval;
    let ckpt_dir = out.join("checkpoints");
    let outcome = train(&mut env, config.reward_mode, &config.ppo, |record, params| {
        serde_json::to_writer(&mut log_file, record)?;
        log_file.write_all(b"\n")?;
        log_file.flush()?;
        if interval > 0 && record.update % interval == 0 {
            std::fs::create_dir_all(&ckpt_dir)?;
            let path = ckpt_dir.join(format!("update_{:05}.bin", record.update));
            save_checkpoint(&path, params, &checkpoint_info(config, &hash, record.timesteps, record.update))?;
        }
        Ok(())
    })?;
    let checkpoint = out.join(FINAL_CHECKPOINT);
    save_checkpoint(
        &checkpoint,
        &outcome.params,
        &checkpoint_info(config, &hash, outcome.timesteps, outcome.log.len()),
    )?;
    Ok(TrainSummary {
        output_dir: out.clone(),
        checkpoint,
        log: outcome.log,
        params: outcome.params,
    })
}

/// `train <config>`.
pub fn cmd_train(config_path: &Path) -> Result<TrainSummary> {
    run_training(&ExperimentConfig::load(config_path)?)
}

/// `rollout <ckpt> --n --seed --out`: deterministic rollouts on seeds
/// `seed..seed + n`, one JSON Lines file each. Returns the written paths.
pub fn cmd_rollout(checkpoint: &Path, n: usize, seed: u64, out_dir: &Path, fluid_trace: Option<&Path>) -> Result<Vec<PathBuf>> {
    let (params, meta) = load_checkpoint(checkpoint)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let embedder = meta
        .embedder
        .clone()
        .ok_or_else(|| Error::Checkpoint("checkpoint sidecar names no embedder".into()))?;
    let mut env = make_semantic_env(meta.task, &embedder, fluid_trace, None)?;
    std::fs::create_dir_all(out_dir)?;
    let goal = SentenceTemplate::new(meta.task).goal().into_string();
    let mut paths = Vec::with_capacity(n);
    for mut traj in evaluate(&params, &mut env, seed, n)? {
        traj.header.checkpoint = Some(checkpoint.display().to_string());
        traj.header.embedder = Some(embedder.identifier());
        traj.header.goal = Some(goal.clone());
        let path = out_dir.join(format!("rollout_{}_{}.jsonl", meta.task, traj.header.seed));
        traj.save(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// `correlate <files...> --x --y`: pool the steps of all files and correlate
/// two channels. Writes `<out>.json` (the report) and `<out>.csv` (the two
/// columns) when `out` is given.
pub fn cmd_correlate(
    files: &[PathBuf],
    x: &str,
    y: &str,
    variant: TauVariant,
    out: Option<&Path>,
) -> Result<CorrelationReport> {
    if files.is_empty() {
        return Err(Error::config("no trajectory files given"));
    }
    let trajectories = files.iter().map(|f| Trajectory::load(f)).collect::<Result<Vec<_>>>()?;
    let pooled = pool(&trajectories)?;
    let report = correlate_rollout(&pooled, x, y, variant)?;
    if let Some(prefix) = out {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut json = serde_json::to_vec_pretty(&report)?;
        json.push(b'\n');
        std::fs::write(prefix.with_extension("json"), json)?;
        write_pairs_csv(&prefix.with_extension("csv"), x, &pooled.channel(x)?, y, &pooled.channel(y)?)?;
    }
    Ok(report)
}

pub fn write_pairs_csv(path: &Path, x_name: &str, x: &[f64], y_name: &str, y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([x_name, y_name]).map_err(csv_err)?;
    for (a, b) in x.iter().zip(y) {
        w.write_record([a.to_string(), b.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a two-column CSV written by [`write_pairs_csv`].
pub fn read_pairs_csv(path: &Path) -> Result<(String, Vec<f64>, String, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 {
        return Err(Error::Parse {
            context: path.display().to_string(),
            message: format!("expected 2 columns, found {}", headers.len()),
        });
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: format!("{s:?}: {e}"),
            })
        };
        x.push(parse(&row[0])?);
        y.push(parse(&row[1])?);
    }
    Ok((headers[0].to_owned(), x, headers[1].to_owned(), y))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        context: "csv".into(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self { mean, std }
    }
}

/// One row of the semantic-vs-baseline comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub task: Task,
    /// Mean over the semantic policy's rollouts of tau(semantic_reward, raw_reward).
    pub mean_tau: Option<f64>,
    pub mean_rho: Option<f64>,
    pub semantic_policy_raw_reward: MeanStd,
    pub baseline_policy_raw_reward: MeanStd,
}

pub const COMPARISON_CSV_HEADER: [&str; 7] = [
    "task",
    "mean_tau",
    "mean_rho",
    "semantic_policy_raw_reward_mean",
    "semantic_policy_raw_reward_std",
    "baseline_policy_raw_reward_mean",
    "baseline_policy_raw_reward_std",
];

impl ComparisonRow {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(COMPARISON_CSV_HEADER).map_err(csv_err)?;
        w.write_record([
            self.task.to_string(),
            opt(self.mean_tau),
            opt(self.mean_rho),
            self.semantic_policy_raw_reward.mean.to_string(),
            self.semantic_policy_raw_reward.std.to_string(),
            self.baseline_policy_raw_reward.mean.to_string(),
            self.baseline_policy_raw_reward.std.to_string(),
        ])
        .map_err(csv_err)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.iter().ne(COMPARISON_CSV_HEADER) {
            return Err(Error::Parse {
                context: path.display().to_string(),
                message: format!("unexpected header {headers:?}"),
            });
        }
        let row = r
            .records()
            .next()
            .ok_or_else(|| Error::Parse {
                context: path.display().to_string(),
                message: "no data row".into(),
            })?
            .map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: format!("column {}: {e}", COMPARISON_CSV_HEADER[i]),
            })
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        Ok(Self {
            task: row[0].parse()?,
            mean_tau: opt(1)?,
            mean_rho: opt(2)?,
            semantic_policy_raw_reward: MeanStd { mean: num(3)?, std: num(4)? },
            baseline_policy_raw_reward: MeanStd { mean: num(5)?, std: num(6)? },
        })
    }
}

/// Policy for one side of a comparison: the configured checkpoint, or a
/// fresh training run.
fn policy_for(config: &ExperimentConfig) -> Result<PolicyParams> {
    match &config.checkpoint {
        Some(path) => {
            let (params, meta) = load_checkpoint(path)?;
            if meta.task != config.task {
                return Err(Error::config(format!(
                    "checkpoint {} is for {}, config says {}",
                    path.display(),
                    meta.task,
                    config.task
                )));
            }
            Ok(params)
        }
        None => Ok(run_training(config)?.params),
    }
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Evaluate two policies on the same seeds and tabulate their raw returns.
/// `semantic` is evaluated with `semantic`'s environment and eval settings;
/// the baseline reuses the same seeds.
pub fn compare_policies(
    semantic: &PolicyParams,
    baseline: &PolicyParams,
    config: &ExperimentConfig,
) -> Result<ComparisonRow> {
    if config.eval.n_rollouts == 0 {
        return Err(Error::config("eval.n_rollouts must be positive for a comparison"));
    }
    let mut env = config.environment()?;
    let (n, seed) = (config.eval.n_rollouts, config.eval.base_seed);
    let sem_rollouts = evaluate(semantic, &mut env, seed, n)?;
    let base_rollouts = evaluate(baseline, &mut env, seed, n)?;
    let mut taus = Vec::with_capacity(n);
    let mut rhos = Vec::with_capacity(n);
    for t in &sem_rollouts {
        if t.steps.len() < 3 {
            continue;
        }
        let r = correlate_rollout(t, "semantic_reward", "raw_reward", TauVariant::B)?;
        taus.push(r.tau);
        rhos.push(r.rho);
    }
    let returns = |ts: &[Trajectory]| ts.iter().map(Trajectory::raw_return).collect::<Vec<_>>();
    Ok(ComparisonRow {
        task: config.task,
        mean_tau: mean_of(&taus),
        mean_rho: mean_of(&rhos),
        semantic_policy_raw_reward: MeanStd::of(&returns(&sem_rollouts)),
        baseline_policy_raw_reward: MeanStd::of(&returns(&base_rollouts)),
    })
}

/// `compare <cfgA> <cfgB>`: A is the semantic-reward run, B the baseline.
/// Writes `comparison.json` and `comparison.csv` to `out` (default: A's
/// output directory).
pub fn cmd_compare(config_a: &Path, config_b: &Path, out: Option<&Path>) -> Result<ComparisonRow> {
    let a = ExperimentConfig::load(config_a)?;
    let b = ExperimentConfig::load(config_b)?;
    if a.task != b.task {
        return Err(Error::config(format!("task mismatch: {} vs {}", a.task, b.task)));
    }
    if a.checkpoint.is_some() != b.checkpoint.is_some() {
        return Err(Error::config(
            "either both configs name a checkpoint or both request training",
        ));
    }
    let row = compare_policies(&policy_for(&a)?, &policy_for(&b)?, &a)?;
    let out = out.map_or_else(|| a.output_dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out)?;
    let mut json = serde_json::to_vec_pretty(&row)?;
    json.push(b'\n');
    std::fs::write(out.join("comparison.json"), json)?;
    row.write_csv(&out.join("comparison.csv"))?;
    Ok(row)
}

/// `describe <task> --values...`: pendulum takes `theta theta_dot`, burgers
/// `l2`, fluid `cp` (optionally `xi`).
pub fn cmd_describe(task: Task, values: &[f64]) -> Result<String> {
    let metrics = match (task, values) {
        (Task::Pendulum, [theta, theta_dot]) => TaskMetrics::Pendulum {
            theta: *theta,
            theta_dot: *theta_dot,
        },
        (Task::Burgers, [l2]) => TaskMetrics::Burgers { l2: *l2 },
        (Task::Fluid, [cp]) => TaskMetrics::Fluid { cp: *cp, xi: 0.0 },
        (Task::Fluid, [cp, xi]) => TaskMetrics::Fluid { cp: *cp, xi: *xi },
        _ => {
            return Err(Error::config(format!(
                "{task} takes {} values, got {}",
                match task {
                    Task::Pendulum => "2 (theta theta_dot)",
                    Task::Burgers => "1 (l2)",
                    Task::Fluid => "1 or 2 (cp [xi])",
                },
                values.len()
            )))
        }
    };
    Ok(SentenceTemplate::new(task).describe(&metrics)?.into_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedOutput {
    pub model: String,
    pub text: String,
    pub dim: usize,
    pub norm: f64,
    /// Cosine similarity to the goal sentence of `task`, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_similarity: Option<f64>,
    pub embedding: Vec<f64>,
}

/// `embed --backend --text`: embed each text, optionally scoring it against
/// a task's goal sentence.
pub fn cmd_embed(spec: &EmbedderSpec, texts: &[String], goal: Option<Task>) -> Result<Vec<EmbedOutput>> {
    if texts.is_empty() {
        return Err(Error::config("no --text given"));
    }
    let embedder = Embedder::from_spec(spec)?;
    let goal_vec = goal
        .map(|t| embedder.embed_one(SentenceTemplate::new(t).goal().as_str()))
        .transpose()?;
    let vectors = embedder.embed(texts)?;
    texts
        .iter()
        .zip(vectors)
        .map(|(text, v)| {
            Ok(EmbedOutput {
                model: embedder.model_id(),
                text: text.clone(),
                dim: v.dim(),
                norm: v.norm(),
                goal_similarity: goal_vec.as_ref().map(|g| cosine(g, &v)).transpose()?,
                embedding: v.as_slice().to_vec(),
            })
        })
        .collect()
}

/// Exit status for an error: 2 for configuration and input problems, 3 for
/// failures while running.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::ConfigNotFound(_) | Error::Parse { .. } => 2,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::PpoConfig;

    #[test]
    fn describe_commands() {
        assert_eq!(
            cmd_describe(Task::Pendulum, &[0.0, 0.0]).unwrap(),
            "The state is at θ = 0.00, θ̇ = 0.00."
        );
        assert!(cmd_describe(Task::Burgers, &[0.1]).unwrap().contains("L2 = 0.10."));
        assert!(matches!(cmd_describe(Task::Pendulum, &[0.0]), Err(Error::Config(_))));
    }

    #[test]
    fn embed_command_reports_unit_norm_and_goal_similarity() {
        let goal = SentenceTemplate::new(Task::Burgers).goal().into_string();
        let out = cmd_embed(&EmbedderSpec::hash(64), &[goal], Some(Task::Burgers)).unwrap();
        assert!((out[0].norm - 1.0).abs() < 1e-12);
        assert!((out[0].goal_similarity.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::ConfigNotFound("x".into())), 2);
        assert_eq!(exit_code(&Error::config("x")), 2);
        assert_eq!(exit_code(&Error::Checkpoint("x".into())), 3);
    }

    #[test]
    fn comparison_csv_round_trip_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let row = ComparisonRow {
            task: Task::Pendulum,
            mean_tau: Some(0.7123456789),
            mean_rho: None,
            semantic_policy_raw_reward: MeanStd { mean: -150.25, std: 30.5 },
            baseline_policy_raw_reward: MeanStd { mean: -160.0, std: 1e-3 },
        };
        let path = dir.path().join("c.csv");
        row.write_csv(&path).unwrap();
        assert_eq!(ComparisonRow::read_csv(&path).unwrap(), row);
        let json = serde_json::to_value(&row).unwrap();
        assert_eq!(json.as_object().unwrap().len(), 5);
    }

    #[test]
    fn identical_policies_compare_equal() {
        let mut config = ExperimentConfig::new(Task::Pendulum, crate::ppo::RewardMode::Raw, EmbedderSpec::hash(64), "unused");
        config.eval.n_rollouts = 3;
        let env = config.environment().unwrap();
        let params = crate::ppo::train::initial_params(&*env, &PpoConfig::default(), &mut crate::rng::SplitMix64::new(0));
        let row = compare_policies(&params, &params, &config).unwrap();
        assert_eq!(row.semantic_policy_raw_reward, row.baseline_policy_raw_reward);
    }

    #[test]
    fn pairs_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let x = vec![0.1, -2.5e-7, 3.0];
        let y = vec![1.0 / 3.0, 2.0, f64::MAX];
        write_pairs_csv(&path, "semantic_reward", &x, "raw_reward", &y).unwrap();
        let (xn, xr, yn, yr) = read_pairs_csv(&path).unwrap();
        assert_eq!((xn.as_str(), yn.as_str()), ("semantic_reward", "raw_reward"));
        assert_eq!((xr, yr), (x, y));
    }
}
