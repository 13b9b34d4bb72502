use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::StreamExt;
use tokio::sync::Semaphore;

use super::{ChatProvider, LlmRequest, LlmResponse, ProviderError, ProviderErrorKind, TextStream};
use crate::retrieval::Embedder;

/// Caps in-flight requests and applies a per-request timeout.
///
/// A streamed reply holds its permit until the stream is dropped; the
/// timeout covers opening the stream only.
pub struct Bounded<P> {
    inner: P,
    permits: Arc<Semaphore>,
    timeout: Duration,
}

impl<P> Bounded<P> {
    pub fn new(inner: P, max_inflight: usize, timeout: Duration) -> Self {
        Self {
            inner,
            permits: Arc::new(Semaphore::new(max_inflight.max(1))),
            timeout,
        }
    }

    /// Shares the permit pool with another wrapper.
    pub fn with_permits(inner: P, permits: Arc<Semaphore>, timeout: Duration) -> Self {
        Self {
            inner,
            permits,
            timeout,
        }
    }

    pub fn available_permits(&self) -> usize {
        self.permits.available_permits()
    }
}

fn timed_out(timeout: Duration) -> ProviderError {
    ProviderError::new(
        ProviderErrorKind::Timeout,
        format!("no response within {} ms", timeout.as_millis()),
    )
}

#[async_trait]
impl<P: ChatProvider> ChatProvider for Bounded<P> {
    async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, ProviderError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        tokio::time::timeout(self.timeout, self.inner.complete(request))
            .await
            .map_err(|_| timed_out(self.timeout))?
    }

    async fn stream(&self, request: &LlmRequest) -> Result<TextStream, ProviderError> {
        let permit = self
            .permits
            .clone()
            .acquire_owned()
            .await
            .expect("semaphore never closed");
        let inner = tokio::time::timeout(self.timeout, self.inner.stream(request))
            .await
            .map_err(|_| timed_out(self.timeout))??;
        Ok(inner
            .map(move |chunk| {
                let _held = &permit;
                chunk
            })
            .boxed())
    }
}

/// [`Bounded`] for embedding providers.
pub struct BoundedEmbedder<E> {
    inner: E,
    permits: Arc<Semaphore>,
    timeout: Duration,
}

impl<E> BoundedEmbedder<E> {
    pub fn new(inner: E, permits: Arc<Semaphore>, timeout: Duration) -> Self {
        Self {
            inner,
            permits,
            timeout,
        }
    }
}

#[async_trait]
impl<E: Embedder> Embedder for BoundedEmbedder<E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        tokio::time::timeout(self.timeout, self.inner.embed(text))
            .await
            .map_err(|_| timed_out(self.timeout))?
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, ModelRole, Usage};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Slow {
        delay: Duration,
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    #[async_trait]
    impl ChatProvider for Slow {
        async fn complete(&self, _r: &LlmRequest) -> Result<LlmResponse, ProviderError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            tokio::time::sleep(self.delay).await;
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(LlmResponse {
                raw_text: "ok".into(),
                usage: Usage::default(),
            })
        }
    }

    fn request() -> LlmRequest {
        LlmRequest {
            model_role: ModelRole::Chat,
            system_prompt: String::new(),
            messages: vec![ChatMessage::user("hi")],
            response_schema: None,
            temperature: 0.0,
        }
    }

    #[tokio::test]
    async fn caps_concurrency() {
        let slow = Slow {
            delay: Duration::from_millis(20),
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        };
        let bounded = Bounded::new(slow, 2, Duration::from_secs(5));
        let req = request();
        let calls: Vec<_> = (0..6).map(|_| bounded.complete(&req)).collect();
        for r in futures::future::join_all(calls).await {
            assert!(r.is_ok());
        }
        assert_eq!(bounded.inner.peak.load(Ordering::SeqCst), 2);
    }

    #[tokio::test]
    async fn times_out() {
        let slow = Slow {
            delay: Duration::from_millis(200),
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        };
        let bounded = Bounded::new(slow, 1, Duration::from_millis(10));
        let err = bounded.complete(&request()).await.unwrap_err();
        assert_eq!(err.kind, ProviderErrorKind::Timeout);
        assert!(err.retryable);
        assert_eq!(bounded.available_permits(), 1);
    }
}
