use std::time::Duration;

use serde_json::{json, Value};

use super::{FinishReason, ModelProvider, ModelResponse, PromptRequest, ProviderError, Usage};

/// Connection settings for a `generateContent`-style JSON endpoint.
#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Base URL, e.g. `https://generativelanguage.googleapis.com/v1beta`.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

/// Live provider: one POST per `generate` call, no retries.
pub struct HttpProvider {
    cfg: HttpProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(cfg: HttpProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { cfg, agent }
    }

    fn url(&self, model_id: &str) -> String {
        format!(
            "{}/models/{}:generateContent",
            self.cfg.endpoint.trim_end_matches('/'),
            model_id
        )
    }

    fn body(req: &PromptRequest) -> Value {
        json!({
            "systemInstruction": { "parts": [{ "text": req.system_prompt }] },
            "contents": [{ "role": "user", "parts": [{ "text": req.user_content }] }],
            "generationConfig": {
                "temperature": req.temperature,
                "maxOutputTokens": req.max_output_chars.div_ceil(4).max(1),
            },
        })
    }
}

/// Extract text and finish reason from a `generateContent` response body.
fn parse_response(body: &Value, max_chars: usize) -> Result<(String, FinishReason), ProviderError> {
    if body.pointer("/promptFeedback/blockReason").is_some() {
        return Ok((String::new(), FinishReason::Refused));
    }
    let candidate = body
        .pointer("/candidates/0")
        .ok_or_else(|| ProviderError::new(None, "response has no candidates"))?;
    let text: String = candidate
        .pointer("/content/parts")
        .and_then(Value::as_array)
        .map(|parts| {
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect()
        })
        .unwrap_or_default();
    let mut reason = match candidate.get("finishReason").and_then(Value::as_str) {
        Some("MAX_TOKENS") => FinishReason::Truncated,
        Some("SAFETY" | "RECITATION" | "PROHIBITED_CONTENT" | "BLOCKLIST" | "SPII") => {
            FinishReason::Refused
        }
        _ => FinishReason::Complete,
    };
    if reason == FinishReason::Complete && text.trim().is_empty() {
        reason = FinishReason::Refused;
    }
    if text.chars().count() > max_chars {
        return Ok((
            text.chars().take(max_chars).collect(),
            FinishReason::Truncated,
        ));
    }
    Ok((text, reason))
}

impl ModelProvider for HttpProvider {
    fn generate(&self, req: &PromptRequest) -> Result<ModelResponse, ProviderError> {
        req.validate()?;
        let payload = Self::body(req).to_string();
        let mut request = self
            .agent
            .post(self.url(&req.model_id))
            .header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            request = request.header("x-goog-api-key", key);
        }
        let mut response = request
            .send(payload.as_str())
            .map_err(|e| ProviderError::new(None, e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::new(None, format!("reading response body: {e}")))?;
        if status >= 400 {
            let snippet: String = text.chars().take(300).collect();
            return Err(ProviderError::new(Some(status), snippet));
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::new(None, format!("malformed response JSON: {e}")))?;
        let (out, finish_reason) = parse_response(&body, req.max_output_chars)?;
        Ok(ModelResponse {
            usage: Usage::estimate(&req.user_content, &out),
            text: out,
            finish_reason,
        })
    }
}
