//! Dialogue generation: prompt templates, chat-completion providers, retry
//! and bounded-concurrency batching.

mod prompt;
mod provider;

use std::sync::Arc;
use std::time::{Duration, Instant};

use emodial_core::lexicons::EmotionLexicon;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

pub use prompt::{build_prompt, grid, PromptSpec, SpecError, DEFAULT_SCENARIO, DEFAULT_TURNS};
pub use provider::{
    cell_key, template, ChatProvider, HttpProvider, MockProvider, ProviderConfig, ProviderError, ProviderKind,
};

const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub spec: PromptSpec,
    pub raw_text: String,
    pub provider: String,
    pub temperature: f64,
    pub latency_ms: u64,
    /// 1 when the first request succeeded.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error(transparent)]
    InvalidSpec(#[from] SpecError),
    #[error("{error} (after {attempts} attempt(s))")]
    Provider { error: ProviderError, attempts: u32 },
    #[error("batch has no specs")]
    EmptyBatch,
}

impl GenerationError {
    pub fn provider_error(&self) -> Option<&ProviderError> {
        match self {
            GenerationError::Provider { error, .. } => Some(error),
            _ => None,
        }
    }
}

/// Builds the provider named by `config`.
pub fn provider_from_config(config: &ProviderConfig) -> Result<Arc<dyn ChatProvider>, ProviderError> {
    config.validate()?;
    Ok(match config.kind {
        provider::ProviderKind::Http => Arc::new(HttpProvider::new(config)?),
        provider::ProviderKind::Mock => match &config.mock_dir {
            Some(dir) => Arc::new(MockProvider::from_dir(dir).map_err(|e| ProviderError::Config(format!("mock_dir: {e}")))?),
            None => Arc::new(MockProvider::new()),
        },
    })
}

/// Prompt building plus a provider, with retries.
pub struct Generator {
    provider: Arc<dyn ChatProvider>,
    config: ProviderConfig,
    denylists: EmotionLexicon,
}

impl Generator {
    pub fn new(provider: Arc<dyn ChatProvider>, config: ProviderConfig, denylists: EmotionLexicon) -> Self {
        Generator {
            provider,
            config,
            denylists,
        }
    }

    pub fn prompt(&self, spec: &PromptSpec) -> String {
        build_prompt(spec, self.denylists.words(spec.target_emotion))
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = Duration::from_millis(self.config.initial_backoff_ms);
        base.saturating_mul(1u32 << (attempt - 1).min(16)).min(MAX_BACKOFF)
    }

    /// One dialogue. Transient failures are retried up to `max_retries` times
    /// with exponential backoff.
    pub async fn generate(&self, spec: &PromptSpec) -> Result<GenerationResult, GenerationError> {
        spec.validate()?;
        let prompt = self.prompt(spec);
        let started = Instant::now();
        let mut attempt = 1;
        loop {
            match self.provider.complete(&prompt, spec).await {
                Ok(raw_text) => {
                    return Ok(GenerationResult {
                        spec: spec.clone(),
                        raw_text,
                        provider: self.provider.name().to_string(),
                        temperature: self.config.temperature,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt,
                    })
                }
                Err(e) if e.is_transient() && attempt <= self.config.max_retries => {
                    tracing::warn!(attempt, error = %e, "provider call failed, retrying");
                    tokio::time::sleep(self.backoff(attempt)).await;
                    attempt += 1;
                }
                Err(error) => return Err(GenerationError::Provider { error, attempts: attempt }),
            }
        }
    }

    /// Results in input order, at most `max_parallel` requests in flight.
    pub async fn generate_batch(
        &self,
        specs: &[PromptSpec],
    ) -> Result<Vec<Result<GenerationResult, GenerationError>>, GenerationError> {
        if specs.is_empty() {
            return Err(GenerationError::EmptyBatch);
        }
        Ok(stream::iter(specs)
            .map(|s| self.generate(s))
            .buffered(self.config.max_parallel.max(1))
            .collect()
            .await)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use emodial_core::{CefrLevel, Emotion};

    #[tokio::test]
    async fn mock_passthrough() {
        let canned = "Client (angry): I am not pleased.\nAgent (calm): Sorry.\n";
        let mock = MockProvider::new().with_cell(Emotion::Anger, CefrLevel::A2, false, canned);
        let g = Generator::new(Arc::new(mock), ProviderConfig::mock(), EmotionLexicon::bundled());
        let r = g.generate(&PromptSpec::new(Emotion::Anger, CefrLevel::A2, false)).await.unwrap();
        assert_eq!(r.raw_text, canned);
        assert_eq!(r.attempt, 1);
        assert_eq!(r.temperature, 0.7);
    }

    #[tokio::test]
    async fn empty_batch_rejected() {
        let g = Generator::new(Arc::new(MockProvider::new()), ProviderConfig::mock(), EmotionLexicon::bundled());
        assert_eq!(g.generate_batch(&[]).await.unwrap_err(), GenerationError::EmptyBatch);
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let g = Generator::new(Arc::new(MockProvider::new()), ProviderConfig::mock(), EmotionLexicon::bundled());
        assert_eq!(g.backoff(1), Duration::from_millis(500));
        assert_eq!(g.backoff(3), Duration::from_millis(2000));
        assert_eq!(g.backoff(40), MAX_BACKOFF);
    }
}
