//! Kendall's tau and Spearman's rho between the semantic and raw reward of
//! random-policy pendulum rollouts, per rollout and pooled.
//!
//! ```text
//! cargo run --release --example rank_correlation -- [n_rollouts]
//! ```

use linguareward::embedding::EmbedderSpec;
use linguareward::env::{PendulumEnv, Task};
use linguareward::ppo::{evaluate, PolicyParams};
use linguareward::rng::SplitMix64;
use linguareward::semantic::{wrap_env, SemanticRewardSpec};
use linguareward::stats::{correlate_rollout, TauVariant};
use linguareward::trajectory::pool;

fn main() -> linguareward::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(5, |a| a.parse().expect("n_rollouts"));
    let spec = SemanticRewardSpec::from_embedder_spec(Task::Pendulum, &EmbedderSpec::numeric_oracle(768))?;
    let mut env = wrap_env(PendulumEnv::new(), spec)?;
    // An untrained network with a large head gives varied, non-trivial motion.
    let params = PolicyParams::with_gains(3, 1, &[64, 64], &mut SplitMix64::new(7), 2f64.sqrt(), 1.0, 1.0);
    let rollouts = evaluate(&params, &mut env, 0, n)?;
    for t in &rollouts {
        let r = correlate_rollout(t, "semantic_reward", "raw_reward", TauVariant::B)?;
        println!(
            "seed {:3}: tau_b {:+.3} (p {:.2e})  rho {:+.3}  return {:8.1}",
            t.header.seed,
            r.tau.unwrap_or(f64::NAN),
            r.p_tau.unwrap_or(f64::NAN),
            r.rho.unwrap_or(f64::NAN),
            t.raw_return()
        );
    }
    let pooled = pool(&rollouts)?;
    for variant in [TauVariant::A, TauVariant::B] {
        let r = correlate_rollout(&pooled, "semantic_reward", "raw_reward", variant)?;
        println!("pooled tau_{variant:?}: {:+.3}  rho {:+.3}  n {}", r.tau.unwrap_or(f64::NAN), r.rho.unwrap_or(f64::NAN), r.n);
    }
    Ok(())
}
