//! Embed the same sentences with every local backend and show how each one
//! scores them against the pendulum goal.
//!
//! ```text
//! cargo run --example embed_backends -- [remote-url]
//! ```
//! With a URL (or `LINGUAREWARD_REMOTE_URL` set) the remote backend joins in.

use linguareward::describer::{describe_pendulum, pendulum_goal};
use linguareward::embedding::{cosine, Embedder, EmbedderSpec, REMOTE_URL_ENV};

fn main() -> linguareward::Result<()> {
    let mut specs = vec![EmbedderSpec::hash(768), EmbedderSpec::numeric_oracle(768)];
    let url = std::env::args().nth(1).or_else(|| std::env::var(REMOTE_URL_ENV).ok());
    if let Some(url) = url {
        specs.push(EmbedderSpec::remote(url, 384));
    }
    let states = [(0.0, 0.0), (0.1, 0.0), (0.5, -1.0), (1.5, 3.0), (3.1, 0.0)];
    for spec in &specs {
        let embedder = Embedder::from_spec(spec)?;
        let goal = embedder.embed_one(pendulum_goal().as_str())?;
        println!("{}", embedder.model_id());
        for (theta, theta_dot) in states {
            let sentence = describe_pendulum(theta, theta_dot)?;
            let v = embedder.embed_one(sentence.as_str())?;
            println!("  {:<40} cos = {:.4}", sentence.as_str(), cosine(&goal, &v)?);
        }
    }
    Ok(())
}
