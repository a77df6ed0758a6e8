//! Suppress a 1D Burgers field with bump forcing, trained on the semantic
//! reward of the L2-bucket describer, and compare against zero control.
//!
//! ```text
//! cargo run --release --example burgers_control -- [timesteps] [seed] [oracle|hash]
//! ```

use linguareward::embedding::EmbedderSpec;
use linguareward::env::{BurgersEnv, Environment, Task};
use linguareward::ppo::{evaluate, train, PpoConfig, RewardMode};
use linguareward::semantic::{wrap_env, SemanticRewardSpec};

fn final_l2(traj: &linguareward::trajectory::Trajectory) -> f64 {
    traj.channel("l2").expect("l2 channel").last().copied().unwrap_or(f64::NAN)
}

fn main() -> linguareward::Result<()> {
    let mut args = std::env::args().skip(1);
    let total: usize = args.next().map_or(300_000, |a| a.parse().expect("timesteps"));
    let seed: u64 = args.next().map_or(0, |a| a.parse().expect("seed"));
    let embedder = match args.next().as_deref() {
        Some("hash") => EmbedderSpec::hash(768),
        _ => EmbedderSpec::numeric_oracle(768),
    };

    let spec = SemanticRewardSpec::from_embedder_spec(Task::Burgers, &embedder)?;
    let mut env = wrap_env(BurgersEnv::new(), spec)?;
    let config = PpoConfig {
        total_timesteps: total,
        seed,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let outcome = train(&mut env, RewardMode::Semantic, &config, |rec, _| {
        if rec.update % 10 == 0 {
            println!(
                "update {:3}  t={:7}  raw={:8.2}  sem={:7.2}  ev={:.3}",
                rec.update,
                rec.timesteps,
                rec.mean_raw_reward.unwrap_or(f64::NAN),
                rec.mean_sem_reward.unwrap_or(f64::NAN),
                rec.ev.unwrap_or(f64::NAN)
            );
        }
        Ok(())
    })?;
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());

    let trained = evaluate(&outcome.params, &mut env, 10_000, 100)?;
    let mut zero = Vec::new();
    let mut bare = BurgersEnv::new();
    for i in 0..100 {
        bare.reset(10_000 + i)?;
        let mut l2 = f64::NAN;
        for _ in 0..bare.horizon() {
            let r = bare.step(&[0.0; 8])?;
            l2 = match r.metrics {
                linguareward::env::TaskMetrics::Burgers { l2 } => l2,
                _ => unreachable!(),
            };
            if r.done {
                break;
            }
        }
        zero.push(l2);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let controlled: Vec<f64> = trained.iter().map(final_l2).collect();
    println!(
        "final sensor L2: controlled {:.3}, zero control {:.3}, ratio {:.3}",
        mean(&controlled),
        mean(&zero),
        mean(&controlled) / mean(&zero)
    );
    Ok(())
}
