//! Print the sentences the describers produce for a few states of each task,
//! next to each task's goal sentence.

use linguareward::describer::SentenceTemplate;
use linguareward::env::{Task, TaskMetrics};

fn main() -> linguareward::Result<()> {
    let cases = [
        (Task::Pendulum, TaskMetrics::Pendulum { theta: 0.0, theta_dot: 0.0 }),
        (Task::Pendulum, TaskMetrics::Pendulum { theta: 3.14159, theta_dot: -0.005 }),
        (Task::Pendulum, TaskMetrics::Pendulum { theta: -1.2, theta_dot: 4.005 }),
        (Task::Burgers, TaskMetrics::Burgers { l2: 0.0 }),
        (Task::Burgers, TaskMetrics::Burgers { l2: 0.65 }),
        (Task::Burgers, TaskMetrics::Burgers { l2: 1.7 }),
        (Task::Fluid, TaskMetrics::Fluid { cp: 0.02, xi: 4.0 }),
        (Task::Fluid, TaskMetrics::Fluid { cp: 0.41, xi: 0.0 }),
    ];
    for (task, metrics) in &cases {
        let template = SentenceTemplate::new(*task);
        println!("{task:8} {metrics:?}");
        println!("         state: {}", template.describe(metrics)?);
        println!("         goal:  {}", template.goal());
    }
    Ok(())
}
