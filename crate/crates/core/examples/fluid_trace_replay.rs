//! Replay a fluid trace under constant spin commands and report how drag and
//! the semantic reward respond.
//!
//! ```text
//! cargo run --example fluid_trace_replay -- [trace.csv]
//! ```
//! Without an argument the built-in synthetic trace is used.

use std::path::Path;

use linguareward::embedding::EmbedderSpec;
use linguareward::env::{ActionToXi, Environment, FluidTrace, FluidTraceEnv, Task, TaskMetrics};
use linguareward::semantic::{wrap_env, SemanticRewardSpec};

fn main() -> linguareward::Result<()> {
    let trace = match std::env::args().nth(1) {
        Some(p) => FluidTrace::load(Path::new(&p))?,
        None => FluidTrace::synthetic(),
    };
    println!("trace: {} control steps", trace.n_steps());
    let spec = SemanticRewardSpec::from_embedder_spec(Task::Fluid, &EmbedderSpec::numeric_oracle(768))?;
    let mut env = wrap_env(FluidTraceEnv::new(trace, ActionToXi::default())?, spec)?;

    println!("{:>7} {:>6} {:>10} {:>10}  last sentence", "action", "xi", "mean cp", "mean sem");
    for k in 0..=8 {
        let action = -1.0 + 0.25 * k as f64;
        env.reset(0)?;
        let (mut cp_sum, mut sem_sum, mut n) = (0.0, 0.0, 0);
        let mut last = None;
        for _ in 0..env.horizon() {
            let r = env.step(&[action])?;
            if let TaskMetrics::Fluid { cp, .. } = r.metrics {
                cp_sum += cp;
            }
            sem_sum += r.semantic_reward.unwrap_or(f64::NAN);
            n += 1;
            last = r.sentence;
            if r.done {
                break;
            }
        }
        println!(
            "{action:>7.2} {:>6.2} {:>10.4} {:>10.4}  {}",
            ActionToXi::default().apply(action),
            cp_sum / n as f64,
            sem_sum / n as f64,
            last.unwrap_or_default()
        );
    }
    Ok(())
}
