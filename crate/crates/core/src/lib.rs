//! Semantic rewards for continuous control: describe a state in words, embed
//! the sentence, and score it by cosine similarity to a goal sentence.

pub mod describer;
pub mod embedding;
pub mod env;
pub mod error;
pub mod ppo;
pub mod rng;
pub mod runner;
pub mod semantic;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
