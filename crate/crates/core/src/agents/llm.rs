//! Chat-completion client and the agent built on it.

use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::parse::{parse_response, Parsed};
use super::prompt::PromptSet;
use super::{Agent, AgentError, CallContext, JudgmentContext, Rater};
use crate::item::{ChainItem, Sentence, Tone};
use crate::ratings::{Feature, SimilarityValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmParams {
    pub model: String,
    pub temperature: f64,
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: String,
    pub max_retries: u32,
    /// Base delay of the exponential backoff.
    pub backoff_ms: u64,
}

impl Default for LlmParams {
    fn default() -> Self {
        Self {
            model: "gpt-4-0613".into(),
            temperature: 0.8,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            auth_env: "OPENAI_API_KEY".into(),
            max_retries: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking HTTP interface so the client can run over any stack.
pub trait HttpTransport: Send + Sync {
    /// POSTs a JSON body with a bearer token. `Err` means the request never
    /// produced an HTTP response.
    fn post_json(&self, url: &str, bearer: &str, body: &str) -> Result<HttpResponse, String>;
}

type AuditSink = Arc<Mutex<Box<dyn Write + Send>>>;

/// Chat-completion client with retry and audit logging.
pub struct LlmClient {
    params: LlmParams,
    token: String,
    transport: Arc<dyn HttpTransport>,
    audit: Option<AuditSink>,
    sequence: Mutex<u64>,
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    seq: u64,
    attempt: u32,
    request: &'a Value,
    status: Option<u16>,
    response: Option<&'a str>,
    error: Option<&'a str>,
}

impl LlmClient {
    pub fn new(params: LlmParams, token: String, transport: Arc<dyn HttpTransport>) -> Result<Self, AgentError> {
        if !(params.temperature >= 0.0) {
            return Err(AgentError::Transport(format!("invalid temperature {}", params.temperature)));
        }
        Ok(Self {
            params,
            token,
            transport,
            audit: None,
            sequence: Mutex::new(0),
        })
    }

    /// Reads the token from the environment variable named in `params`.
    pub fn from_env(params: LlmParams, transport: Arc<dyn HttpTransport>) -> Result<Self, AgentError> {
        let token = std::env::var(&params.auth_env)
            .ok()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| AgentError::MissingCredential(params.auth_env.clone()))?;
        Self::new(params, token, transport)
    }

    /// Appends every request/response pair to `sink` as one JSON line.
    pub fn with_audit(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.audit = Some(Arc::new(Mutex::new(sink)));
        self
    }

    pub fn params(&self) -> &LlmParams {
        &self.params
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.params.temperature,
        })
    }

    fn audit(&self, seq: u64, attempt: u32, request: &Value, outcome: &Result<HttpResponse, String>) {
        let Some(sink) = &self.audit else { return };
        let rec = match outcome {
            Ok(r) => AuditRecord {
                seq,
                attempt,
                request,
                status: Some(r.status),
                response: Some(&r.body),
                error: None,
            },
            Err(e) => AuditRecord {
                seq,
                attempt,
                request,
                status: None,
                response: None,
                error: Some(e),
            },
        };
        if let Ok(line) = serde_json::to_string(&rec) {
            let mut w = sink.lock().unwrap_or_else(|p| p.into_inner());
            let _ = writeln!(w, "{line}");
            let _ = w.flush();
        }
    }

    /// Sends one single-turn prompt and returns the message content.
    /// Transport failures, 429 and 5xx are retried with exponential backoff;
    /// 401/403 fail immediately.
    pub fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        let body = self.request_body(prompt);
        let text = body.to_string();
        let seq = {
            let mut s = self.sequence.lock().unwrap_or_else(|p| p.into_inner());
            *s += 1;
            *s
        };
        let mut last_err = String::new();
        for attempt in 0..=self.params.max_retries {
            if attempt > 0 && self.params.backoff_ms > 0 {
                let delay = self.params.backoff_ms.saturating_mul(1u64 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let outcome = self.transport.post_json(&self.params.endpoint, &self.token, &text);
            self.audit(seq, attempt, &body, &outcome);
            match outcome {
                Err(e) => last_err = e,
                Ok(r) if r.status == 401 || r.status == 403 => return Err(AgentError::Auth(r.status)),
                Ok(r) if r.status == 429 || r.status >= 500 => last_err = format!("HTTP {}", r.status),
                Ok(r) if !(200..300).contains(&r.status) => {
                    return Err(AgentError::Transport(format!("HTTP {}: {}", r.status, r.body)))
                }
                Ok(r) => return extract_content(&r.body),
            }
        }
        Err(AgentError::Transport(format!(
            "giving up after {} attempts: {last_err}",
            self.params.max_retries + 1
        )))
    }
}

fn extract_content(body: &str) -> Result<String, AgentError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AgentError::MalformedResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| AgentError::MalformedResponse("missing choices[0].message.content".into()))
}

/// Agent and rater answering through an [`LlmClient`] with the given prompts.
pub struct LlmAgent {
    client: LlmClient,
    prompts: PromptSet,
}

impl LlmAgent {
    pub fn new(client: LlmClient, prompts: PromptSet) -> Self {
        Self { client, prompts }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl Agent for LlmAgent {
    /// Tone answers are normalized by the adjective parser when possible;
    /// otherwise the raw text is returned so the filters reject it.
    fn respond(&self, prompt: &ChainItem, _ctx: &CallContext) -> Result<String, AgentError> {
        match prompt {
            ChainItem::Tone(t) => {
                let p = self.prompts.sentence_given_tone.render(&[("tone", t.as_str())])?;
                Ok(self.client.complete(&p)?.trim().to_string())
            }
            ChainItem::Sentence(s) => {
                let p = self.prompts.tone_given_sentence.render(&[("sentence", s.text())])?;
                let raw = self.client.complete(&p)?;
                Ok(match parse_response(self.prompts.tone_given_sentence.format(), &raw) {
                    Ok(parsed) => parsed.canonical(),
                    Err(_) => raw.trim().to_string(),
                })
            }
        }
    }
}

fn integer(p: Parsed) -> Result<u8, AgentError> {
    match p {
        Parsed::Integer(v) => Ok(v),
        other => Err(AgentError::MalformedResponse(format!("expected integer, got {other:?}"))),
    }
}

impl Rater for LlmAgent {
    fn rate_fit(&self, tone: &Tone, sentence: &Sentence, _ctx: &JudgmentContext) -> Result<u8, AgentError> {
        let t = &self.prompts.fit_rating;
        let p = t.render(&[("tone", tone.as_str()), ("sentence", sentence.text())])?;
        integer(parse_response(t.format(), &self.client.complete(&p)?)?)
    }

    fn rate_similarity(&self, a: &Tone, b: &Tone, _ctx: &JudgmentContext) -> Result<SimilarityValue, AgentError> {
        let t = &self.prompts.similarity;
        let p = t.render(&[("tone_a", a.as_str()), ("tone_b", b.as_str())])?;
        match parse_response(t.format(), &self.client.complete(&p)?)? {
            Parsed::Number(v) => Ok(SimilarityValue::Unit(v)),
            Parsed::Integer(v) => Ok(SimilarityValue::Likert5(v)),
            other => Err(AgentError::MalformedResponse(format!("expected number, got {other:?}"))),
        }
    }

    fn rate_feature(&self, tone: &Tone, feature: Feature, _ctx: &JudgmentContext) -> Result<u8, AgentError> {
        let t = &self.prompts.feature_rating;
        let p = t.render(&[
            ("feature_definition", feature.definition()),
            ("feature", feature.label()),
            ("tone", tone.as_str()),
        ])?;
        integer(parse_response(t.format(), &self.client.complete(&p)?)?)
    }
}

/// Transport returning scripted responses in order, for tests and dry runs.
#[derive(Default)]
pub struct ScriptedTransport {
    responses: Mutex<std::collections::VecDeque<Result<HttpResponse, String>>>,
    requests: Mutex<Vec<String>>,
}

impl ScriptedTransport {
    pub fn new<I: IntoIterator<Item = Result<HttpResponse, String>>>(responses: I) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// A 200 response carrying `content` as the message.
    pub fn ok(content: &str) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: 200,
            body: json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string(),
        })
    }

    pub fn status(code: u16) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: code,
            body: String::new(),
        })
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl HttpTransport for ScriptedTransport {
    fn post_json(&self, _url: &str, _bearer: &str, body: &str) -> Result<HttpResponse, String> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).push(body.to_string());
        self.responses
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .pop_front()
            .unwrap_or_else(|| Err("script exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LlmParams {
        LlmParams {
            backoff_ms: 0,
            max_retries: 3,
            ..LlmParams::default()
        }
    }

    fn client(script: Vec<Result<HttpResponse, String>>) -> (LlmClient, Arc<ScriptedTransport>) {
        let t = Arc::new(ScriptedTransport::new(script));
        (LlmClient::new(params(), "tok".into(), t.clone()).unwrap(), t)
    }

    #[test]
    fn echoes_content() {
        let (c, t) = client(vec![ScriptedTransport::ok("excited")]);
        assert_eq!(c.complete("hi").unwrap(), "excited");
        let req: Value = serde_json::from_str(&t.requests()[0]).unwrap();
        assert_eq!(req["messages"][0]["content"], "hi");
        assert_eq!(req["messages"][0]["role"], "user");
        assert_eq!(req["temperature"], 0.8);
    }

    #[test]
    fn retries_server_errors() {
        let (c, t) = client(vec![
            ScriptedTransport::status(500),
            ScriptedTransport::status(503),
            ScriptedTransport::ok("calm"),
        ]);
        assert_eq!(c.complete("x").unwrap(), "calm");
        assert_eq!(t.requests().len(), 3);
    }

    #[test]
    fn auth_error_is_not_retried() {
        let (c, t) = client(vec![ScriptedTransport::status(401), ScriptedTransport::ok("calm")]);
        assert!(matches!(c.complete("x"), Err(AgentError::Auth(401))));
        assert_eq!(t.requests().len(), 1);
    }

    #[test]
    fn gives_up_after_budget() {
        let (c, t) = client(vec![Err("refused".into()); 10]);
        assert!(matches!(c.complete("x"), Err(AgentError::Transport(_))));
        assert_eq!(t.requests().len(), 4);
    }

    #[test]
    fn malformed_body() {
        let (c, _) = client(vec![Ok(HttpResponse {
            status: 200,
            body: "{\"choices\": []}".into(),
        })]);
        assert!(matches!(c.complete("x"), Err(AgentError::MalformedResponse(_))));
        let (c, _) = client(vec![Ok(HttpResponse {
            status: 200,
            body: "not json".into(),
        })]);
        assert!(matches!(c.complete("x"), Err(AgentError::MalformedResponse(_))));
    }

    #[test]
    fn missing_env_names_variable() {
        let p = LlmParams {
            auth_env: "SWP_TEST_SURELY_UNSET_VAR".into(),
            ..params()
        };
        let err = LlmClient::from_env(p, Arc::new(ScriptedTransport::default())).err().unwrap();
        assert!(err.to_string().contains("SWP_TEST_SURELY_UNSET_VAR"));
    }

    #[derive(Clone, Default)]
    struct Buf(Arc<Mutex<Vec<u8>>>);
    impl Write for Buf {
        fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(b);
            Ok(b.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn audit_log_has_one_line_per_attempt() {
        let buf = Buf::default();
        let (c, _) = client(vec![ScriptedTransport::status(500), ScriptedTransport::ok("sad")]);
        let c = c.with_audit(Box::new(buf.clone()));
        c.complete("x").unwrap();
        let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["status"], 500);
        assert_eq!(lines[1]["attempt"], 1);
        assert_eq!(lines[1]["request"]["messages"][0]["content"], "x");
    }

    #[test]
    fn agent_parses_tone_and_ratings() {
        let t = Arc::new(ScriptedTransport::new(vec![
            ScriptedTransport::ok("Excited."),
            ScriptedTransport::ok("very very excited"),
            ScriptedTransport::ok(" 4 "),
            ScriptedTransport::ok("0.7"),
            ScriptedTransport::ok("2"),
        ]));
        let agent = LlmAgent::new(LlmClient::new(params(), "k".into(), t.clone()).unwrap(), PromptSet::builtin());
        let ctx = CallContext {
            agent_id: "g".into(),
            chain_id: 0,
            iteration: 1,
            attempt: 0,
        };
        let s = Sentence::new("We won the game last night, finally!").unwrap();
        assert_eq!(agent.respond(&ChainItem::Sentence(s.clone()), &ctx).unwrap(), "excited");
        assert_eq!(agent.respond(&ChainItem::Sentence(s.clone()), &ctx).unwrap(), "very very excited");
        let tone = Tone::new("happy").unwrap();
        let jc = JudgmentContext {
            rater_id: "g".into(),
            slot: 0,
        };
        assert_eq!(agent.rate_fit(&tone, &s, &jc).unwrap(), 4);
        assert_eq!(agent.rate_similarity(&tone, &tone, &jc).unwrap(), SimilarityValue::Unit(0.7));
        assert_eq!(agent.rate_feature(&tone, Feature::Relational, &jc).unwrap(), 2);
        let req: Value = serde_json::from_str(&t.requests()[0]).unwrap();
        assert!(req["messages"][0]["content"].as_str().unwrap().contains(s.text()));
        let req: Value = serde_json::from_str(&t.requests()[4]).unwrap();
        assert!(req["messages"][0]["content"].as_str().unwrap().contains("how relational is"));
    }
}
