//! Train one pendulum policy on the semantic reward and one on the raw
//! reward, then evaluate both on the same seeds.
//!
//! ```text
//! cargo run --release --example compare_policies -- [timesteps] [out_dir]
//! ```

use linguareward::embedding::EmbedderSpec;
use linguareward::env::Task;
use linguareward::ppo::RewardMode;
use linguareward::runner::{compare_policies, run_training, ExperimentConfig};

fn main() -> linguareward::Result<()> {
    let mut args = std::env::args().skip(1);
    let total: usize = args.next().map_or(100_000, |a| a.parse().expect("timesteps"));
    let out = args.next().unwrap_or_else(|| "runs/compare".to_owned());

    let config = |mode: RewardMode, name: &str| {
        let mut c = ExperimentConfig::new(Task::Pendulum, mode, EmbedderSpec::numeric_oracle(768), format!("{out}/{name}"));
        c.ppo.total_timesteps = total;
        c
    };
    let semantic = config(RewardMode::Semantic, "semantic");
    let baseline = config(RewardMode::Raw, "raw");
    let sem = run_training(&semantic)?;
    let base = run_training(&baseline)?;
    let row = compare_policies(&sem.params, &base.params, &semantic)?;
    println!("{}", serde_json::to_string_pretty(&row)?);
    Ok(())
}
