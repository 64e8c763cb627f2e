use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use emodial_core::lexicons::EmotionLexicon;
use emodial_core::{CefrLevel, Emotion};
use emodial_generator::{
    grid, ChatProvider, GenerationError, Generator, HttpProvider, PromptSpec, ProviderConfig, ProviderError,
    ProviderKind, DEFAULT_SCENARIO,
};
use serde_json::{json, Value};

const TRANSCRIPT: &str = "Client (angry): My phone is broken.\nAgent (calm): I can help.\n";

#[derive(Clone)]
struct Script {
    calls: Arc<AtomicUsize>,
    /// Status per call; the last entry repeats.
    statuses: Arc<Vec<u16>>,
    body: Arc<String>,
    seen: Arc<std::sync::Mutex<Vec<(Value, Option<String>)>>>,
}

async fn handler(State(s): State<Script>, headers: HeaderMap, Json(req): Json<Value>) -> (StatusCode, String) {
    let n = s.calls.fetch_add(1, Ordering::SeqCst);
    let auth = headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);
    s.seen.lock().unwrap().push((req, auth));
    let status = s.statuses[n.min(s.statuses.len() - 1)];
    let body = if status == 200 { s.body.to_string() } else { "oops".into() };
    (StatusCode::from_u16(status).unwrap(), body)
}

async fn serve(statuses: Vec<u16>, body: String) -> (String, Script) {
    let script = Script {
        calls: Arc::default(),
        statuses: Arc::new(statuses),
        body: Arc::new(body),
        seen: Arc::default(),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(handler))
        .with_state(script.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), script)
}

fn ok_body(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn config(endpoint: &str, key_env: Option<&str>) -> ProviderConfig {
    ProviderConfig {
        kind: ProviderKind::Http,
        endpoint: endpoint.to_string(),
        model: "test-model".into(),
        api_key_env: key_env.map(str::to_string),
        timeout_secs: 5.0,
        max_retries: 3,
        initial_backoff_ms: 1,
        ..Default::default()
    }
}

fn generator(cfg: &ProviderConfig) -> Generator {
    let provider = HttpProvider::new(cfg).unwrap();
    Generator::new(Arc::new(provider), cfg.clone(), EmotionLexicon::bundled())
}

fn spec() -> PromptSpec {
    PromptSpec::new(Emotion::Anger, CefrLevel::A2, true)
}

#[tokio::test]
async fn retries_transient_errors_then_succeeds() {
    let (url, script) = serve(vec![500, 500, 200], ok_body(TRANSCRIPT)).await;
    let r = generator(&config(&url, None)).generate(&spec()).await.unwrap();
    assert_eq!(r.attempt, 3);
    assert_eq!(r.raw_text, TRANSCRIPT);
    assert_eq!(r.provider, "test-model");
    assert_eq!(script.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn request_body_shape() {
    let (url, script) = serve(vec![200], ok_body(TRANSCRIPT)).await;
    let g = generator(&config(&url, None));
    g.generate(&spec()).await.unwrap();
    let seen = script.seen.lock().unwrap();
    let (body, auth) = &seen[0];
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], g.prompt(&spec()));
    assert!(auth.is_none());
}

#[tokio::test]
async fn empty_body_is_malformed() {
    let (url, _) = serve(vec![200], String::new()).await;
    let err = generator(&config(&url, None)).generate(&spec()).await.unwrap_err();
    assert!(matches!(err.provider_error(), Some(ProviderError::MalformedResponse(_))));
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (url, script) = serve(vec![401], String::new()).await;
    let err = generator(&config(&url, None)).generate(&spec()).await.unwrap_err();
    assert_eq!(
        err,
        GenerationError::Provider {
            error: ProviderError::AuthFailure(401),
            attempts: 1
        }
    );
    assert_eq!(script.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn retries_are_bounded() {
    let (url, script) = serve(vec![503], String::new()).await;
    let err = generator(&config(&url, None)).generate(&spec()).await.unwrap_err();
    assert!(matches!(err, GenerationError::Provider { attempts: 4, .. }));
    assert_eq!(script.calls.load(Ordering::SeqCst), 4);
}

#[tokio::test]
async fn unreachable_provider() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    drop(listener);
    let mut cfg = config(&url, None);
    cfg.max_retries = 1;
    let err = generator(&cfg).generate(&spec()).await.unwrap_err();
    assert!(matches!(err.provider_error(), Some(ProviderError::ProviderUnavailable(_))));
}

#[tokio::test]
async fn slow_provider_times_out() {
    let app = Router::new().route(
        "/v1/chat/completions",
        post(|| async {
            tokio::time::sleep(Duration::from_secs(3)).await;
            ok_body(TRANSCRIPT)
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    let mut cfg = config(&url, None);
    cfg.timeout_secs = 0.2;
    cfg.max_retries = 0;
    let err = generator(&cfg).generate(&spec()).await.unwrap_err();
    assert_eq!(err.provider_error(), Some(&ProviderError::Timeout));
}

#[tokio::test]
async fn secret_never_leaks() {
    const SECRET: &str = "sk-test-very-secret-value-123";
    const VAR: &str = "EMODIAL_TEST_SECRET_KEY";
    // SAFETY: no other test reads or writes this variable.
    unsafe { std::env::set_var(VAR, SECRET) };
    let (url, script) = serve(vec![500, 200], ok_body(TRANSCRIPT)).await;
    let cfg = config(&url, Some(VAR));
    let provider = HttpProvider::new(&cfg).unwrap();
    let debug = format!("{provider:?}");
    let g = Generator::new(Arc::new(provider), cfg.clone(), EmotionLexicon::bundled());
    let ok = g.generate(&spec()).await.unwrap();
    let (fail_url, _) = serve(vec![401], String::new()).await;
    let fail = generator(&config(&fail_url, Some(VAR))).generate(&spec()).await.unwrap_err();

    let auth = script.seen.lock().unwrap()[0].1.clone();
    assert_eq!(auth.as_deref(), Some(format!("Bearer {SECRET}").as_str()));
    for text in [
        serde_json::to_string(&ok).unwrap(),
        serde_json::to_string(&cfg).unwrap(),
        format!("{ok:?}"),
        format!("{cfg:?}"),
        format!("{fail:?} {fail}"),
        debug,
    ] {
        assert!(!text.contains(SECRET), "secret leaked in {text}");
    }
}

/// Completes later specs first.
struct Reversing {
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

#[async_trait]
impl ChatProvider for Reversing {
    fn name(&self) -> &str {
        "reversing"
    }

    async fn complete(&self, _prompt: &str, spec: &PromptSpec) -> Result<String, ProviderError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        let rank = spec.target_emotion as u64 * 6 + spec.cefr as u64 * 2 + u64::from(spec.implicit);
        tokio::time::sleep(Duration::from_millis(40 - rank)).await;
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        if spec.target_emotion == Emotion::Fear && spec.cefr == CefrLevel::B2 && spec.implicit {
            return Err(ProviderError::Rejected(400));
        }
        Ok(format!("{}/{}/{}", spec.target_emotion, spec.cefr, spec.implicit))
    }
}

#[tokio::test]
async fn batch_preserves_order_and_bounds_parallelism() {
    let provider = Arc::new(Reversing {
        in_flight: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
    });
    let cfg = ProviderConfig {
        max_parallel: 5,
        ..ProviderConfig::mock()
    };
    let g = Generator::new(provider.clone(), cfg, EmotionLexicon::bundled());
    let specs = grid(DEFAULT_SCENARIO);
    let results = g.generate_batch(&specs).await.unwrap();
    assert_eq!(results.len(), 36);
    let mut failures = 0;
    for (spec, r) in specs.iter().zip(&results) {
        match r {
            Ok(r) => assert_eq!(r.raw_text, format!("{}/{}/{}", spec.target_emotion, spec.cefr, spec.implicit)),
            Err(e) => {
                failures += 1;
                assert_eq!(e.provider_error(), Some(&ProviderError::Rejected(400)));
            }
        }
    }
    assert_eq!(failures, 1);
    let peak = provider.peak.load(Ordering::SeqCst);
    assert!((2..=5).contains(&peak), "peak in-flight {peak}");
}
