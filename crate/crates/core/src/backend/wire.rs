//! Request and response bodies, shared by the client, the stub and the
//! server. Field names are the wire names.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRequest {
    pub video_id: String,
    pub audio_url_or_b64: String,
    pub window_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub language: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscribeRequest {
    pub video_id: String,
    pub audio_url_or_b64: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSegment {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribeResponse {
    pub segments: Vec<WireSegment>,
    pub has_speech: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParseRequest {
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsaRequest {
    pub text: String,
    pub aspect: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsaResponse {
    pub label: String,
    pub confidence: f64,
    pub model_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRequest {
    pub image_b64: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub routes: Vec<String>,
    pub models: BTreeMap<String, ModelInfo>,
    pub device: String,
}

impl BackendInfo {
    pub fn model_version(&self, role: &str) -> Option<&str> {
        self.models.get(role).map(|m| m.version.as_str())
    }
}

/// Human-readable request schema per route, returned with HTTP 400.
pub fn schema_hint(route: super::Route) -> &'static str {
    use super::Route::*;
    match route {
        Probe => "/probe {video_id: string, audio_url_or_b64: string, window_s: number}",
        Transcribe => "/transcribe {video_id: string, audio_url_or_b64: string, language: string}",
        Parse => "/parse {sentences: [string]}",
        Absa => "/absa {text: string, aspect: string}",
        Scene => "/scene {image_b64: string, prompt: string, model_version?: string}",
        Info => "GET /info",
    }
}
