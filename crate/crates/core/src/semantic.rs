//! Semantic reward: cosine similarity between the embedded goal sentence and
//! the embedded description of the current state.

use crate::describer::{GoalSentence, SentenceTemplate, StateSentence};
use crate::embedding::{cosine, Embedder, EmbedderSpec, EmbeddingVector};
use crate::env::{ActionSpace, Environment, StepResult, Task, TaskMetrics};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SemanticRewardSpec {
    template: SentenceTemplate,
    goal_sentence: GoalSentence,
    goal_embedding: EmbeddingVector,
    embedder: Embedder,
}

impl SemanticRewardSpec {
    /// Embeds the goal once. The embedding is computed twice and compared so
    /// that a nondeterministic backend is caught before training starts.
    pub fn new(task: Task, embedder: Embedder) -> Result<Self> {
        let template = SentenceTemplate::new(task);
        let goal_sentence = template.goal();
        let goal_embedding = embedder.embed_one(goal_sentence.as_str())?;
        let again = embedder.embed_one(goal_sentence.as_str())?;
        let drift = goal_embedding.distance(&again)?;
        if drift > 1e-6 {
            return Err(Error::config(format!(
                "embedder {} is not deterministic on the goal sentence (drift {drift:e})",
                embedder.model_id()
            )));
        }
        Ok(Self {
            template,
            goal_sentence,
            goal_embedding,
            embedder,
        })
    }

    pub fn from_embedder_spec(task: Task, spec: &EmbedderSpec) -> Result<Self> {
        Self::new(task, Embedder::from_spec(spec)?)
    }

    pub fn task(&self) -> Task {
        self.template.task
    }

    pub fn goal_sentence(&self) -> &GoalSentence {
        &self.goal_sentence
    }

    pub fn goal_embedding(&self) -> &EmbeddingVector {
        &self.goal_embedding
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn describe(&self, metrics: &TaskMetrics) -> Result<StateSentence> {
        self.template.describe(metrics)
    }

    /// Reward in `[-1, 1]` together with the sentence it was computed from.
    pub fn reward_with_sentence(&self, metrics: &TaskMetrics) -> Result<(f64, StateSentence)> {
        let sentence = self.describe(metrics)?;
        let e = self.embedder.embed_one(sentence.as_str())?;
        Ok((cosine(&self.goal_embedding, &e)?, sentence))
    }

    pub fn semantic_reward(&self, metrics: &TaskMetrics) -> Result<f64> {
        self.reward_with_sentence(metrics).map(|(r, _)| r)
    }

    /// Embedding of the sentence describing `metrics`.
    pub fn embed_state(&self, metrics: &TaskMetrics) -> Result<EmbeddingVector> {
        self.embedder.embed_one(self.describe(metrics)?.as_str())
    }
}

/// An environment whose steps also carry the semantic reward and sentence.
/// Dynamics, observations, termination and the raw reward pass through.
#[derive(Debug, Clone)]
pub struct SemanticEnv<E> {
    inner: E,
    spec: SemanticRewardSpec,
}

/// Wrap `env`, failing if the describer cannot render this task's metrics.
pub fn wrap_env<E: Environment>(env: E, spec: SemanticRewardSpec) -> Result<SemanticEnv<E>> {
    if env.task() != spec.task() {
        return Err(Error::config(format!(
            "semantic reward configured for {} but environment is {}",
            spec.task(),
            env.task()
        )));
    }
    // Probe the describer with the environment's current metrics.
    spec.describe(&env.metrics())?;
    Ok(SemanticEnv { inner: env, spec })
}

impl<E: Environment> SemanticEnv<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }

    pub fn spec(&self) -> &SemanticRewardSpec {
        &self.spec
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Environment> Environment for SemanticEnv<E> {
    fn task(&self) -> Task {
        self.inner.task()
    }

    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    fn action_space(&self) -> ActionSpace {
        self.inner.action_space()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.inner.reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let mut result = self.inner.step(action)?;
        let (reward, sentence) = self.spec.reward_with_sentence(&result.metrics)?;
        result.semantic_reward = Some(reward);
        result.sentence = Some(sentence.into_string());
        Ok(result)
    }

    fn metrics(&self) -> TaskMetrics {
        self.inner.metrics()
    }
}
