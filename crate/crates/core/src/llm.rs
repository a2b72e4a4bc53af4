//! Chat-completion wire format shared by every model-backed component.
//!
//! Requests always carry the pinned greedy decoding parameters. The remote
//! backend speaks the common `POST {base_url}/chat/completions` JSON shape;
//! [`ReplayEndpoint`] answers from a recorded JSONL file.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Greedy decoding. The evaluation protocol pins these; they are not
/// configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
}

impl DecodingParams {
    pub const PINNED: DecodingParams = DecodingParams { temperature: 0.0, top_p: 1.0, top_k: 1 };
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self::PINNED
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAttachment {
    pub media_type: String,
    /// Base64 payload.
    pub data: String,
}

/// Identifies the benchmark item a request belongs to; replay backends key on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestTag {
    pub item_id: String,
    pub repeat: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageAttachment>,
    pub decoding: DecodingParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<RequestTag>,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest {
            system: system.into(),
            user: user.into(),
            images: Vec::new(),
            decoding: DecodingParams::PINNED,
            tag: None,
        }
    }

    pub fn with_tag(mut self, item_id: impl Into<String>, repeat: u32) -> Self {
        self.tag = Some(RequestTag { item_id: item_id.into(), repeat });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub text: String,
    /// Wall-clock latency; only remote backends measure it.
    pub latency_ms: Option<u64>,
}

impl ChatResponse {
    pub fn text(text: impl Into<String>) -> Self {
        ChatResponse { text: text.into(), latency_ms: None }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EndpointError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("no recorded response for {0}")]
    ReplayMiss(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
}

impl EndpointError {
    pub fn is_retriable(&self) -> bool {
        match self {
            EndpointError::Transport(_) => true,
            EndpointError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatEndpoint: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError>;

    fn supports_images(&self) -> bool {
        false
    }
}

impl<T: ChatEndpoint + ?Sized> ChatEndpoint for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        (**self).complete(request)
    }
    fn supports_images(&self) -> bool {
        (**self).supports_images()
    }
}

impl<T: ChatEndpoint + ?Sized> ChatEndpoint for std::sync::Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        (**self).complete(request)
    }
    fn supports_images(&self) -> bool {
        (**self).supports_images()
    }
}

/// Endpoint backed by a closure; the building block for deterministic stubs.
pub struct FnEndpoint<F> {
    f: F,
    images: bool,
}

impl<F> FnEndpoint<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse, EndpointError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnEndpoint { f, images: false }
    }

    pub fn accepting_images(mut self) -> Self {
        self.images = true;
        self
    }
}

impl<F> ChatEndpoint for FnEndpoint<F>
where
    F: Fn(&ChatRequest) -> Result<ChatResponse, EndpointError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        (self.f)(request)
    }

    fn supports_images(&self) -> bool {
        self.images
    }
}

/// Retry retriable failures up to `attempts` total tries.
pub fn complete_with_retry(
    endpoint: &dyn ChatEndpoint,
    request: &ChatRequest,
    attempts: u32,
) -> Result<ChatResponse, EndpointError> {
    let mut last = None;
    for _ in 0..attempts.max(1) {
        match endpoint.complete(request) {
            Ok(r) => return Ok(r),
            Err(e) if e.is_retriable() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub supports_images: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

pub struct RemoteEndpoint {
    config: RemoteConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl RemoteEndpoint {
    pub fn new(config: RemoteConfig) -> Result<Self, EndpointError> {
        let token = match &config.credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| EndpointError::MissingCredential(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteEndpoint { config, token, agent })
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        request_body(&self.config.model, request)
    }
}

/// JSON body of a chat-completions request.
pub fn request_body(model: &str, request: &ChatRequest) -> Value {
    let user_content = if request.images.is_empty() {
        Value::String(request.user.clone())
    } else {
        let mut parts = vec![json!({ "type": "text", "text": request.user })];
        for img in &request.images {
            parts.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:{};base64,{}", img.media_type, img.data) }
            }));
        }
        Value::Array(parts)
    };
    json!({
        "model": model,
        "messages": [
            { "role": "system", "content": request.system },
            { "role": "user", "content": user_content },
        ],
        "temperature": request.decoding.temperature,
        "top_p": request.decoding.top_p,
        "top_k": request.decoding.top_k,
    })
}

/// Extract `choices[0].message.content` from a chat-completions response.
pub fn parse_response_body(body: &str) -> Result<String, EndpointError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| EndpointError::MalformedResponse(e.to_string()))?;
    let content = value
        .pointer("/choices/0/message/content")
        .ok_or_else(|| EndpointError::MalformedResponse("missing choices[0].message.content".into()))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        // some servers return content parts
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        Value::Null => Ok(String::new()),
        other => Err(EndpointError::MalformedResponse(format!("unexpected content {other}"))),
    }
}

impl ChatEndpoint for RemoteEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        if !request.images.is_empty() && !self.config.supports_images {
            return Err(EndpointError::Unsupported(format!(
                "model {} does not accept images",
                self.config.model
            )));
        }
        let body = self.request_body(request);
        let start = Instant::now();
        let mut call = self.agent.post(&self.url()).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            call = call.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = call
            .send(serde_json::to_vec(&body).expect("json body").as_slice())
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(EndpointError::Http { status, body: text });
        }
        let content = parse_response_body(&text)?;
        Ok(ChatResponse { text: content, latency_ms: Some(start.elapsed().as_millis() as u64) })
    }

    fn supports_images(&self) -> bool {
        self.config.supports_images
    }
}

/// One recorded answer in a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub item_id: String,
    /// When absent the entry answers every repeat of the item.
    #[serde(default)]
    pub repeat: Option<u32>,
    pub response: String,
}

/// Answers tagged requests from recorded responses.
#[derive(Debug, Clone, Default)]
pub struct ReplayEndpoint {
    exact: HashMap<(String, u32), String>,
    any_repeat: HashMap<String, String>,
    supports_images: bool,
}

impl ReplayEndpoint {
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut out = ReplayEndpoint::default();
        for e in entries {
            match e.repeat {
                Some(r) => {
                    out.exact.insert((e.item_id, r), e.response);
                }
                None => {
                    out.any_repeat.insert(e.item_id, e.response);
                }
            }
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<ReplayEntry>)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Replayed frames are opaque; pretend to accept them so the visual
    /// variant can be replayed.
    pub fn accepting_images(mut self) -> Self {
        self.supports_images = true;
        self
    }
}

impl ChatEndpoint for ReplayEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, EndpointError> {
        let tag = request
            .tag
            .as_ref()
            .ok_or_else(|| EndpointError::ReplayMiss("untagged request".into()))?;
        self.exact
            .get(&(tag.item_id.clone(), tag.repeat))
            .or_else(|| self.any_repeat.get(&tag.item_id))
            .map(|t| ChatResponse::text(t.clone()))
            .ok_or_else(|| EndpointError::ReplayMiss(format!("{} repeat {}", tag.item_id, tag.repeat)))
    }

    fn supports_images(&self) -> bool {
        self.supports_images
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicU32, Ordering};

    #[test]
    fn body_pins_greedy_decoding() {
        let req = ChatRequest::new("sys", "user");
        let body = request_body("m", &req);
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["top_k"], 1);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "user");
    }

    #[test]
    fn body_with_images_uses_content_parts() {
        let mut req = ChatRequest::new("s", "u");
        req.images.push(ImageAttachment { media_type: "image/png".into(), data: "AAAA".into() });
        let body = request_body("m", &req);
        let parts = body["messages"][1]["content"].as_array().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1]["image_url"]["url"], "data:image/png;base64,AAAA");
    }

    #[test]
    fn response_parsing() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"B"}}]}"#;
        assert_eq!(parse_response_body(ok).unwrap(), "B");
        assert!(matches!(parse_response_body("{}"), Err(EndpointError::MalformedResponse(_))));
        assert!(matches!(parse_response_body("nope"), Err(EndpointError::MalformedResponse(_))));
    }

    #[test]
    fn replay_lookup() {
        let rp = ReplayEndpoint::from_jsonl(
            "{\"item_id\":\"q1\",\"repeat\":1,\"response\":\"A\"}\n{\"item_id\":\"q1\",\"response\":\"C\"}\n",
        )
        .unwrap();
        let r1 = rp.complete(&ChatRequest::new("", "").with_tag("q1", 1)).unwrap();
        assert_eq!(r1.text, "A");
        let r2 = rp.complete(&ChatRequest::new("", "").with_tag("q1", 2)).unwrap();
        assert_eq!(r2.text, "C");
        assert!(rp.complete(&ChatRequest::new("", "").with_tag("q2", 1)).is_err());
    }

    struct Flaky(AtomicU32);
    impl ChatEndpoint for Flaky {
        fn complete(&self, _: &ChatRequest) -> Result<ChatResponse, EndpointError> {
            if self.0.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(EndpointError::Transport("reset".into()))
            } else {
                Ok(ChatResponse::text("ok"))
            }
        }
    }

    #[test]
    fn retries_only_retriable_errors() {
        let flaky = Flaky(AtomicU32::new(0));
        assert_eq!(complete_with_retry(&flaky, &ChatRequest::new("", ""), 3).unwrap().text, "ok");
        let flaky = Flaky(AtomicU32::new(0));
        assert!(complete_with_retry(&flaky, &ChatRequest::new("", ""), 2).is_err());
        assert!(!EndpointError::Http { status: 400, body: String::new() }.is_retriable());
        assert!(EndpointError::Http { status: 503, body: String::new() }.is_retriable());
    }

    /// Serve one canned HTTP response and hand back the raw request body.
    fn one_shot_server(response_body: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                response_body.len(),
                response_body
            )
            .unwrap();
            format!("{auth}\n{}", String::from_utf8(body).unwrap())
        });
        (format!("http://{addr}/v1"), handle)
    }

    #[test]
    fn remote_endpoint_round_trip() {
        let (url, handle) =
            one_shot_server(r#"{"choices":[{"message":{"role":"assistant","content":"Answer: D"}}]}"#);
        std::env::set_var("RULESCENE_TEST_TOKEN", "secret");
        let ep = RemoteEndpoint::new(RemoteConfig {
            base_url: url,
            model: "test-model".into(),
            credential_env: Some("RULESCENE_TEST_TOKEN".into()),
            supports_images: false,
            timeout_secs: 10,
        })
        .unwrap();
        let resp = ep.complete(&ChatRequest::new("sys", "question")).unwrap();
        assert_eq!(resp.text, "Answer: D");
        assert!(resp.latency_ms.is_some());
        let seen = handle.join().unwrap();
        let (auth, body) = seen.split_once('\n').unwrap();
        assert!(auth.eq_ignore_ascii_case("authorization: Bearer secret"), "{auth}");
        let body: Value = serde_json::from_str(body).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn text_only_remote_rejects_images() {
        let ep = RemoteEndpoint::new(RemoteConfig {
            base_url: "http://127.0.0.1:9".into(),
            model: "m".into(),
            credential_env: None,
            supports_images: false,
            timeout_secs: 1,
        })
        .unwrap();
        let mut req = ChatRequest::new("s", "u");
        req.images.push(ImageAttachment { media_type: "image/png".into(), data: String::new() });
        assert!(matches!(ep.complete(&req), Err(EndpointError::Unsupported(_))));
    }

    #[test]
    fn missing_credential_is_reported() {
        let err = RemoteEndpoint::new(RemoteConfig {
            base_url: "http://x".into(),
            model: "m".into(),
            credential_env: Some("RULESCENE_DEFINITELY_UNSET_VAR".into()),
            supports_images: false,
            timeout_secs: 1,
        })
        .err()
        .unwrap();
        assert_eq!(err, EndpointError::MissingCredential("RULESCENE_DEFINITELY_UNSET_VAR".into()));
    }
}
