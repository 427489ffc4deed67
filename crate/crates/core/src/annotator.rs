//! VLM annotator client: OpenAI-compatible chat-completions requests with
//! retries and an offline-capable disk cache keyed by (image ref, prompt).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotation::{ImageAnnotation, ParseStatus, RawAnnotation};
use crate::error::{Error, Result};

/// A prompt stored verbatim; `<image>` marks where the image reference goes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
}

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    2
}
fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

/// Injectable HTTP layer; tests substitute a stub that counts calls.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<TransportResponse>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout_secs: u64) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| Error::Annotator(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<TransportResponse> {
        let resp = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| Error::Annotator(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| Error::Annotator(e.to_string()))?;
        Ok(TransportResponse { status, body })
    }
}

#[derive(Debug, Clone)]
pub struct AnnotationFetch {
    pub raw: RawAnnotation,
    pub attempts: u32,
    pub from_cache: bool,
}

pub struct AnnotatorClient {
    config: ClientConfig,
    transport: Box<dyn Transport>,
    cache_dir: PathBuf,
    offline: bool,
}

impl AnnotatorClient {
    pub fn new(
        config: ClientConfig,
        transport: Box<dyn Transport>,
        cache_dir: impl Into<PathBuf>,
    ) -> Self {
        AnnotatorClient {
            config,
            transport,
            cache_dir: cache_dir.into(),
            offline: false,
        }
    }

    /// Offline mode: serve only from cache, never touch the transport.
    pub fn offline(cache_dir: impl Into<PathBuf>) -> Self {
        AnnotatorClient {
            config: ClientConfig {
                endpoint: String::new(),
                model: String::new(),
                timeout_secs: default_timeout(),
                max_retries: 0,
                max_concurrency: 1,
            },
            transport: Box::new(NullTransport),
            cache_dir: cache_dir.into(),
            offline: true,
        }
    }

    pub fn cache_key(image_ref: &str, prompt: &PromptTemplate) -> String {
        let mut hasher = Sha256::new();
        hasher.update(image_ref.as_bytes());
        hasher.update(b"\0");
        hasher.update(prompt.hash().as_bytes());
        hex::encode(hasher.finalize())
    }

    fn cache_path(&self, image_ref: &str, prompt: &PromptTemplate) -> PathBuf {
        self.cache_dir
            .join(format!("{}.json", Self::cache_key(image_ref, prompt)))
    }

    pub fn request_annotation(
        &self,
        image_ref: &str,
        prompt: &PromptTemplate,
    ) -> Result<AnnotationFetch> {
        let path = self.cache_path(image_ref, prompt);
        if let Some(raw) = read_cache(&path)? {
            return Ok(AnnotationFetch {
                raw,
                attempts: 0,
                from_cache: true,
            });
        }
        if self.offline {
            return Err(Error::CacheMiss(image_ref.to_string()));
        }
        let (raw, attempts) = self.fetch(image_ref, prompt)?;
        write_cache(&path, &raw)?;
        Ok(AnnotationFetch {
            raw,
            attempts,
            from_cache: false,
        })
    }

    fn fetch(&self, image_ref: &str, prompt: &PromptTemplate) -> Result<(RawAnnotation, u32)> {
        let body = chat_completion_payload(&self.config.model, image_ref, &prompt.text);
        let url = format!(
            "{}/chat/completions",
            self.config.endpoint.trim_end_matches('/')
        );
        let mut attempts = 0;
        let mut last_err = None;
        while attempts <= self.config.max_retries {
            attempts += 1;
            match self.transport.post_json(&url, &body) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    let raw = parse_completion(image_ref, &resp.body)?;
                    return Ok((raw, attempts));
                }
                Ok(resp) => {
                    last_err = Some(Error::Annotator(format!(
                        "http {} from annotator endpoint",
                        resp.status
                    )));
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Annotator("no attempts made".into())))
    }
}

struct NullTransport;

impl Transport for NullTransport {
    fn post_json(&self, _url: &str, _body: &serde_json::Value) -> Result<TransportResponse> {
        Err(Error::Annotator("offline client has no transport".into()))
    }
}

fn chat_completion_payload(model: &str, image_ref: &str, prompt: &str) -> serde_json::Value {
    serde_json::json!({
        "model": model,
        "messages": [{
            "role": "user",
            "content": [
                {"type": "text", "text": prompt},
                {"type": "image_url", "image_url": {"url": image_ref}}
            ]
        }],
        "temperature": 0.0,
    })
}

fn parse_completion(image_ref: &str, body: &str) -> Result<RawAnnotation> {
    #[derive(Deserialize)]
    struct Choice {
        message: Message,
    }
    #[derive(Deserialize)]
    struct Message {
        content: String,
    }
    #[derive(Deserialize)]
    struct Completion {
        choices: Vec<Choice>,
    }
    let completion: Completion = serde_json::from_str(body)
        .map_err(|e| Error::Annotator(format!("malformed completion response: {e}")))?;
    let content = completion
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| Error::Annotator("completion has no choices".into()))?;
    let parse_status = match serde_json::from_str::<serde_json::Value>(&content) {
        Ok(serde_json::Value::Object(_)) => ParseStatus::Ok,
        _ => ParseStatus::Malformed,
    };
    Ok(RawAnnotation {
        image_id: image_ref.to_string(),
        raw_text: content,
        parse_status,
    })
}

/// Convert a well-formed raw response into a typed annotation. Malformed
/// raws are rejected, never repaired.
pub fn raw_to_annotation(
    raw: &RawAnnotation,
    source: crate::annotation::AnnotationSource,
) -> Result<ImageAnnotation> {
    if raw.parse_status == ParseStatus::Malformed {
        return Err(Error::Data(format!(
            "raw annotation for {} is malformed",
            raw.image_id
        )));
    }
    #[derive(Deserialize)]
    struct Payload {
        #[serde(default)]
        objects: Vec<crate::annotation::ObjectEntry>,
        #[serde(default)]
        persons: Vec<crate::annotation::PersonEntry>,
        #[serde(default)]
        scene: Option<crate::annotation::SceneEntry>,
    }
    let payload: Payload = serde_json::from_str(&raw.raw_text)
        .map_err(|e| Error::Data(format!("annotation payload for {}: {e}", raw.image_id)))?;
    Ok(ImageAnnotation {
        image_id: raw.image_id.clone(),
        objects: payload.objects,
        persons: payload.persons,
        scene: payload.scene,
        source,
    })
}

fn read_cache(path: &Path) -> Result<Option<RawAnnotation>> {
    match fs::read_to_string(path) {
        Ok(text) => {
            let raw = serde_json::from_str(&text)
                .map_err(|e| Error::Data(format!("corrupt cache entry {}: {e}", path.display())))?;
            Ok(Some(raw))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

// Atomic per-key write: temp file in the same directory, then rename.
fn write_cache(path: &Path, raw: &RawAnnotation) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string(raw).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    struct ScriptedTransport {
        calls: Arc<AtomicU32>,
        statuses: Vec<u16>,
    }

    impl Transport for ScriptedTransport {
        fn post_json(&self, _url: &str, _body: &serde_json::Value) -> Result<TransportResponse> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) as usize;
            let status = *self.statuses.get(n).unwrap_or(&500);
            let body = serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": "{\"objects\":[]}"}}]
            })
            .to_string();
            Ok(TransportResponse { status, body })
        }
    }

    fn prompt() -> PromptTemplate {
        PromptTemplate {
            name: "annotate".into(),
            text: "List the salient objects in <image>.".into(),
        }
    }

    #[test]
    fn offline_cached_image_makes_zero_network_calls() {
        let dir = tempfile::tempdir().unwrap();
        let raw = RawAnnotation {
            image_id: "img1".into(),
            raw_text: "{\"objects\":[]}".into(),
            parse_status: ParseStatus::Ok,
        };
        let path = dir
            .path()
            .join(format!("{}.json", AnnotatorClient::cache_key("img1", &prompt())));
        std::fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();

        let client = AnnotatorClient::offline(dir.path());
        let fetch = client.request_annotation("img1", &prompt()).unwrap();
        assert!(fetch.from_cache);
        assert_eq!(fetch.attempts, 0);
        assert_eq!(fetch.raw.raw_text, raw.raw_text);
        // determinism: a second call returns the same thing
        let fetch2 = client.request_annotation("img1", &prompt()).unwrap();
        assert_eq!(fetch2.raw.raw_text, fetch.raw.raw_text);
    }

    #[test]
    fn offline_uncached_image_is_cache_miss() {
        let dir = tempfile::tempdir().unwrap();
        let client = AnnotatorClient::offline(dir.path());
        let err = client.request_annotation("imgX", &prompt()).unwrap_err();
        assert!(matches!(err, Error::CacheMiss(_)));
    }

    #[test]
    fn retry_budget_recovers_from_transient_500() {
        let dir = tempfile::tempdir().unwrap();
        let calls = Arc::new(AtomicU32::new(0));
        let transport = ScriptedTransport {
            calls: calls.clone(),
            statuses: vec![500, 200],
        };
        let config = ClientConfig {
            endpoint: "http://localhost:1".into(),
            model: "test-model".into(),
            timeout_secs: 1,
            max_retries: 2,
            max_concurrency: 1,
        };
        let client = AnnotatorClient::new(config, Box::new(transport), dir.path());
        let fetch = client.request_annotation("img1", &prompt()).unwrap();
        assert_eq!(fetch.attempts, 2);
        assert_eq!(calls.load(Ordering::SeqCst), 2);
        assert_eq!(fetch.raw.parse_status, ParseStatus::Ok);
        // response was persisted to cache; a rerun is served without network
        let fetch2 = client.request_annotation("img1", &prompt()).unwrap();
        assert!(fetch2.from_cache);
        assert_eq!(calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn exhausted_retries_surface_last_error() {
        let dir = tempfile::tempdir().unwrap();
        let transport = ScriptedTransport {
            calls: Arc::new(AtomicU32::new(0)),
            statuses: vec![500, 500, 500],
        };
        let config = ClientConfig {
            endpoint: "http://localhost:1".into(),
            model: "test-model".into(),
            timeout_secs: 1,
            max_retries: 2,
            max_concurrency: 1,
        };
        let client = AnnotatorClient::new(config, Box::new(transport), dir.path());
        let err = client.request_annotation("img1", &prompt()).unwrap_err();
        assert!(matches!(err, Error::Annotator(_)));
    }

    #[test]
    fn non_json_content_is_marked_malformed() {
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "not json at all"}}]
        })
        .to_string();
        let raw = parse_completion("img1", &body).unwrap();
        assert_eq!(raw.parse_status, ParseStatus::Malformed);
        assert!(raw_to_annotation(&raw, crate::annotation::AnnotationSource::AnnotatorA).is_err());
    }
}
