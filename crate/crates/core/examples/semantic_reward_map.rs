//! Tabulate the pendulum semantic reward over a (theta, theta_dot) grid
//! alongside the environment's own reward.
//!
//! ```text
//! cargo run --example semantic_reward_map -- [hash|oracle]
//! ```

use linguareward::embedding::EmbedderSpec;
use linguareward::env::{Task, TaskMetrics};
use linguareward::semantic::SemanticRewardSpec;

fn main() -> linguareward::Result<()> {
    let embedder = match std::env::args().nth(1).as_deref() {
        Some("hash") => EmbedderSpec::hash(768),
        _ => EmbedderSpec::numeric_oracle(768),
    };
    let spec = SemanticRewardSpec::from_embedder_spec(Task::Pendulum, &embedder)?;
    let thetas = [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];
    let dots = [-6.0, -2.0, 0.0, 2.0, 6.0];

    println!("semantic reward ({})", spec.embedder().model_id());
    print!("{:>8}", "θ \\ θ̇");
    for d in dots {
        print!("{d:>8.1}");
    }
    println!();
    for theta in thetas {
        print!("{theta:>8.1}");
        for theta_dot in dots {
            let r = spec.semantic_reward(&TaskMetrics::Pendulum { theta, theta_dot })?;
            print!("{r:>8.3}");
        }
        println!();
    }
    println!("\nraw reward -(θ² + 0.1 θ̇²)");
    for theta in thetas {
        print!("{theta:>8.1}");
        for d in dots {
            print!("{:>8.2}", -(theta * theta + 0.1 * d * d));
        }
        println!();
    }
    Ok(())
}
