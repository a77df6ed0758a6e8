//! Train a pendulum swing-up policy on the semantic reward and evaluate it
//! on the classical reward.
//!
//! ```text
//! cargo run --release --example train_pendulum -- [timesteps] [seed] [semantic|raw]
//! ```

use linguareward::embedding::EmbedderSpec;
use linguareward::env::{PendulumEnv, Task};
use linguareward::ppo::{evaluate, train, PpoConfig, RewardMode};
use linguareward::semantic::{wrap_env, SemanticRewardSpec};
use linguareward::stats::{correlate_rollout, TauVariant};

fn main() -> linguareward::Result<()> {
    let mut args = std::env::args().skip(1);
    let total: usize = args.next().map_or(200_000, |a| a.parse().expect("timesteps"));
    let seed: u64 = args.next().map_or(0, |a| a.parse().expect("seed"));
    let mode: RewardMode = args.next().map_or(Ok(RewardMode::Semantic), |a| a.parse())?;

    let spec = SemanticRewardSpec::from_embedder_spec(Task::Pendulum, &EmbedderSpec::numeric_oracle(768))?;
    let mut env = wrap_env(PendulumEnv::new(), spec)?;
    let config = PpoConfig {
        total_timesteps: total,
        seed,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let outcome = train(&mut env, mode, &config, |rec, _| {
        println!(
            "update {:3}  t={:7}  raw={:9.1}  sem={:7.2}  ev={:.3}",
            rec.update,
            rec.timesteps,
            rec.mean_raw_reward.unwrap_or(f64::NAN),
            rec.mean_sem_reward.unwrap_or(f64::NAN),
            rec.ev.unwrap_or(f64::NAN)
        );
        Ok(())
    })?;
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());

    let rollouts = evaluate(&outcome.params, &mut env, 10_000, 100)?;
    let returns: Vec<f64> = rollouts.iter().map(|t| t.raw_return()).collect();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / returns.len() as f64).sqrt();
    println!("deterministic raw return over 100 rollouts: {mean:.1} ± {std:.1}");

    let report = correlate_rollout(&rollouts[0], "semantic_reward", "raw_reward", TauVariant::B)?;
    println!("first rollout: tau = {:?}, rho = {:?}", report.tau, report.rho);
    Ok(())
}
