//! Chat-completion client for a live language model.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{OracleError, PromptText, VoteOracle};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "OBJNAV_LLM_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_s: f64,
    /// Extra attempts after a failed request.
    pub retries: u32,
    /// Directory for per-episode request/response transcripts.
    pub transcript_dir: Option<PathBuf>,
    /// Reuse tallies for repeated identical questions within an episode.
    pub memoize: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4.1".into(),
            temperature: 0.0,
            timeout_s: 30.0,
            retries: 2,
            transcript_dir: None,
            memoize: true,
        }
    }
}

/// First standalone run of uppercase letters that names one of `labels`.
pub fn parse_choice<'a, I>(reply: &str, labels: I) -> Option<usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let labels: Vec<&str> = labels.into_iter().collect();
    reply
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|tok| !tok.is_empty() && tok.chars().all(|c| c.is_ascii_uppercase()))
        .find_map(|tok| labels.iter().position(|l| *l == tok))
}

pub struct LlmClient {
    cfg: LlmConfig,
    api_key: String,
    agent: ureq::Agent,
    transcript: Option<Mutex<File>>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("endpoint", &self.cfg.endpoint)
            .field("model", &self.cfg.model)
            .finish_non_exhaustive()
    }
}

impl LlmClient {
    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(cfg: LlmConfig) -> Result<Self, OracleError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(OracleError::MissingCredential(API_KEY_ENV))?;
        Ok(Self::with_key(cfg, key))
    }

    pub fn with_key(cfg: LlmConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            cfg,
            api_key,
            agent,
            transcript: None,
        }
    }

    /// Appends every exchange as one JSON line to `path`.
    pub fn with_transcript(mut self, path: &Path) -> Result<Self, OracleError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        self.transcript = Some(Mutex::new(f));
        Ok(self)
    }

    fn log(&self, request: &Value, reply: Result<&str, &str>) {
        let Some(t) = &self.transcript else { return };
        let line = match reply {
            Ok(text) => json!({"request": request, "reply": text}),
            Err(e) => json!({"request": request, "error": e}),
        };
        let mut f = t.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(f, "{line}") {
            log::warn!("transcript write failed: {e}");
        }
    }

    /// Sends one prompt and returns the completion text.
    pub fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let attempts = self.cfg.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
            }
            let resp = self
                .agent
                .post(&self.cfg.endpoint)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body);
            let mut resp = match resp {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    self.log(&body, Err(&last));
                    continue;
                }
            };
            let status = resp.status().as_u16();
            if status == 401 || status == 403 {
                self.log(&body, Err("unauthorized"));
                return Err(OracleError::Auth(status));
            }
            if status == 429 || status >= 500 {
                last = format!("HTTP {status}");
                self.log(&body, Err(&last));
                continue;
            }
            let value: Value = match resp.body_mut().read_json() {
                Ok(v) => v,
                Err(e) => {
                    last = format!("unreadable body: {e}");
                    self.log(&body, Err(&last));
                    continue;
                }
            };
            if status >= 400 {
                return Err(OracleError::Response(format!("HTTP {status}: {value}")));
            }
            let text = value
                .pointer("/choices/0/message/content")
                .and_then(Value::as_str)
                .ok_or_else(|| OracleError::Response(format!("no choices[0].message.content in {value}")))?;
            self.log(&body, Ok(text));
            return Ok(text.to_string());
        }
        Err(OracleError::Transport { attempts, reason: last })
    }
}

impl VoteOracle for LlmClient {
    fn answer(&self, prompt: &PromptText, options: &[usize]) -> Result<Option<usize>, OracleError> {
        let text = prompt.to_string();
        let labels: Vec<&str> = prompt.labels().take(options.len()).collect();
        for attempt in 0..2 {
            let reply = self.complete(&text)?;
            if let Some(i) = parse_choice(&reply, labels.iter().copied()) {
                return Ok(Some(options[i]));
            }
            if attempt == 0 {
                log::debug!("unparseable reply {reply:?}, asking again");
            } else {
                log::warn!("no option label in reply {reply:?}; counting an abstention");
            }
        }
        Ok(None)
    }
}
