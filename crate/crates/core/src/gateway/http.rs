//! OpenAI-compatible completions client.
//!
//! Speaks the legacy `/completions` shape: one prompt in, `n` sampled
//! completions out, with per-token log probabilities when the server
//! reports them. Transient failures (transport errors, 429, 5xx) are
//! retried with exponential backoff; a `Retry-After` header is honored
//! when present.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CompletionBackend, GenParams, Generation, API_KEY_ENV};
use crate::error::{Error, Result};
use crate::prompt::Prompt;

/// The completions API accepts at most four stop sequences.
const MAX_STOP_SEQUENCES: usize = 4;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL of the API, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry_base_delay: Duration,
}

impl HttpConfig {
    /// Reads the API key from `MODEL_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>, model: impl Into<String>) -> HttpConfig {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            retry_base_delay: Duration::from_millis(500),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    n: usize,
    temperature: f64,
    max_tokens: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    stop: Vec<&'a str>,
    logprobs: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<HttpBackend> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Backend {
                attempts: 0,
                last: e.to_string(),
            })?;
        Ok(HttpBackend { config, client })
    }

    fn url(&self) -> String {
        format!("{}/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn send(
        &self,
        body: &serde_json::Value,
    ) -> std::result::Result<CompletionResponse, SendFailure> {
        let mut request = self.client.post(self.url()).json(body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| SendFailure {
            message: e.to_string(),
            retryable: true,
            retry_after: None,
        })?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(SendFailure {
                message: format!("HTTP {status}"),
                retryable: true,
                retry_after,
            });
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Err(SendFailure {
                message: format!("HTTP {status}: {}", detail.trim()),
                retryable: false,
                retry_after: None,
            });
        }
        response
            .json::<CompletionResponse>()
            .map_err(|e| SendFailure {
                message: format!("bad response body: {e}"),
                retryable: false,
                retry_after: None,
            })
    }
}

struct SendFailure {
    message: String,
    retryable: bool,
    retry_after: Option<Duration>,
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, prompt: &Prompt, params: &GenParams) -> Result<Vec<Generation>> {
        let stop: Vec<&str> = params
            .stop_markers
            .iter()
            .map(String::as_str)
            .take(MAX_STOP_SEQUENCES)
            .collect();
        let body = serde_json::to_value(CompletionRequest {
            model: &self.config.model,
            prompt: &prompt.text,
            n: params.samples_per_prompt,
            temperature: params.temperature,
            max_tokens: params.max_new_tokens,
            stop,
            logprobs: 0,
        })
        .expect("request serializes");

        let mut last = String::new();
        let mut attempts = 0;
        while attempts <= self.config.max_retries {
            attempts += 1;
            match self.send(&body) {
                Ok(response) => {
                    let gens = response
                        .choices
                        .into_iter()
                        .take(params.samples_per_prompt)
                        .map(|choice| Generation {
                            mean_logprob: mean_logprob(choice.logprobs.as_ref()),
                            text: choice.text,
                        })
                        .collect();
                    return Ok(gens);
                }
                Err(failure) => {
                    last = failure.message;
                    if !failure.retryable {
                        break;
                    }
                    if attempts <= self.config.max_retries {
                        let backoff = self.config.retry_base_delay * 2u32.pow(attempts - 1);
                        std::thread::sleep(failure.retry_after.unwrap_or(backoff));
                    }
                }
            }
        }
        Err(Error::Backend { attempts, last })
    }
}

fn mean_logprob(logprobs: Option<&ChoiceLogprobs>) -> Option<f64> {
    let values: Vec<f64> = logprobs?.token_logprobs.iter().filter_map(|v| *v).collect();
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{PromptKind, Sections};
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn prompt() -> Prompt {
        Prompt {
            text: "fix it".to_string(),
            kind: PromptKind::Semantic,
            structure: Sections::default(),
            shots: 0,
        }
    }

    fn quick_config(endpoint: String) -> HttpConfig {
        HttpConfig {
            endpoint,
            model: "test-model".to_string(),
            api_key: Some("key".to_string()),
            timeout: Duration::from_secs(5),
            max_retries: 2,
            retry_base_delay: Duration::from_millis(1),
        }
    }

    /// Minimal canned-response HTTP server: answers `responses.len()`
    /// requests, each with the paired status and JSON body.
    fn serve(responses: Vec<(u16, String)>) -> String {
        serve_with_headers(
            responses
                .into_iter()
                .map(|(status, body)| (status, String::new(), body))
                .collect(),
        )
    }

    fn serve_with_headers(responses: Vec<(u16, String, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, extra_headers, body) in responses {
                let Ok((mut stream, _)) = listener.accept() else {
                    return;
                };
                let mut buf = [0u8; 65536];
                let mut total = 0;
                // Read until the end of headers plus the announced body.
                while let Ok(n) = stream.read(&mut buf[total..]) {
                    total += n;
                    let text = String::from_utf8_lossy(&buf[..total]);
                    if let Some(header_end) = text.find("\r\n\r\n") {
                        let content_length = text
                            .lines()
                            .find_map(|l| {
                                l.to_ascii_lowercase()
                                    .strip_prefix("content-length:")
                                    .map(str::trim)
                                    .map(String::from)
                            })
                            .and_then(|v| v.parse::<usize>().ok())
                            .unwrap_or(0);
                        if total >= header_end + 4 + content_length {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n{extra_headers}\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        format!("http://{addr}/v1")
    }

    #[test]
    fn parses_completions_and_mean_logprobs() {
        let body = serde_json::json!({
            "choices": [
                {"text": "print(1)", "logprobs": {"token_logprobs": [null, -0.2, -0.4]}},
                {"text": "print(2)"}
            ]
        })
        .to_string();
        let endpoint = serve(vec![(200, body)]);
        let backend = HttpBackend::new(quick_config(endpoint)).unwrap();
        let gens = backend.complete(&prompt(), &GenParams::default()).unwrap();
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[0].text, "print(1)");
        let lp = gens[0].mean_logprob.unwrap();
        assert!((lp - (-0.3)).abs() < 1e-9, "null leading token is skipped");
        assert_eq!(gens[1].mean_logprob, None);
    }

    #[test]
    fn retries_transient_failures() {
        let ok = serde_json::json!({"choices": [{"text": "ok"}]}).to_string();
        let endpoint = serve(vec![(500, "{}".to_string()), (200, ok)]);
        let backend = HttpBackend::new(quick_config(endpoint)).unwrap();
        let gens = backend.complete(&prompt(), &GenParams::default()).unwrap();
        assert_eq!(gens[0].text, "ok");
    }

    #[test]
    fn rate_limit_honors_retry_after() {
        let ok = serde_json::json!({"choices": [{"text": "ok"}]}).to_string();
        let endpoint = serve_with_headers(vec![
            (429, "retry-after: 1\r\n".to_string(), "{}".to_string()),
            (200, String::new(), ok),
        ]);
        let backend = HttpBackend::new(quick_config(endpoint)).unwrap();
        let start = std::time::Instant::now();
        let gens = backend.complete(&prompt(), &GenParams::default()).unwrap();
        assert_eq!(gens[0].text, "ok");
        assert!(
            start.elapsed() >= Duration::from_secs(1),
            "waited out the advertised window"
        );
    }

    #[test]
    fn unreachable_endpoint_errors_after_retries() {
        // A port from the ephemeral range with nothing listening.
        let backend = HttpBackend::new(quick_config("http://127.0.0.1:1/v1".to_string())).unwrap();
        match backend.complete(&prompt(), &GenParams::default()) {
            Err(Error::Backend { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected backend error, got {other:?}"),
        }
    }

    #[test]
    fn non_transient_status_fails_without_retries() {
        let endpoint = serve(vec![(401, "{\"error\": \"bad key\"}".to_string())]);
        let backend = HttpBackend::new(quick_config(endpoint)).unwrap();
        match backend.complete(&prompt(), &GenParams::default()) {
            Err(Error::Backend { attempts, last }) => {
                assert_eq!(attempts, 1);
                assert!(last.contains("401"));
            }
            other => panic!("expected backend error, got {other:?}"),
        }
    }
}
