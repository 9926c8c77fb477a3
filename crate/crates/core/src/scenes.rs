//! Frame labeling against the closed seven-type scene taxonomy.
//!
//! Responses are validated strictly: one JSON object with a known
//! `scene_type` and a boolean `abstain`. The only repair is unwrapping a
//! single object from code fences or surrounding prose (plus truncating
//! over-long evidence strings); anything else fails, is retried once with a
//! reminder, and then becomes an abstaining `failed` label.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use base64::Engine;
use image::imageops::FilterType;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::backend::wire::SceneRequest;
use crate::backend::{BackendClient, BackendError};
use crate::corpus::{read_jsonl, to_jsonl, write_atomic};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_TEMPLATE_VERSION: &str = "a1";
pub const JSON_ONLY: &str = "Output JSON ONLY";
pub const RETRY_REMINDER: &str = "\n\nReminder: Output JSON ONLY. Return exactly one JSON object.";
pub const MAX_LONG_SIDE: u32 = 1280;
pub const MAX_EVIDENCE_WORDS: usize = 12;
pub const DEFAULT_VLM_WORKERS: usize = 4;

const A1_TEMPLATE: &str = include_str!("../data/scene_prompt.a1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneType {
    CombatOrMilitaryAction,
    DestructionOrHumanitarianCrisis,
    PoliticalOrDiplomaticEvents,
    NewsMediaOrInterviewSettings,
    PublicProtestOrDemonstration,
    SymbolicOrReligiousRitual,
    OtherOrUnknown,
}

impl SceneType {
    pub const ALL: [SceneType; 7] = [
        SceneType::CombatOrMilitaryAction,
        SceneType::DestructionOrHumanitarianCrisis,
        SceneType::PoliticalOrDiplomaticEvents,
        SceneType::NewsMediaOrInterviewSettings,
        SceneType::PublicProtestOrDemonstration,
        SceneType::SymbolicOrReligiousRitual,
        SceneType::OtherOrUnknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneType::CombatOrMilitaryAction => "combat_or_military_action",
            SceneType::DestructionOrHumanitarianCrisis => "destruction_or_humanitarian_crisis",
            SceneType::PoliticalOrDiplomaticEvents => "political_or_diplomatic_events",
            SceneType::NewsMediaOrInterviewSettings => "news_media_or_interview_settings",
            SceneType::PublicProtestOrDemonstration => "public_protest_or_demonstration",
            SceneType::SymbolicOrReligiousRitual => "symbolic_or_religious_ritual",
            SceneType::OtherOrUnknown => "other_or_unknown",
        }
    }

    /// Short column name for tables.
    pub fn short_name(self) -> &'static str {
        match self {
            SceneType::CombatOrMilitaryAction => "combat",
            SceneType::DestructionOrHumanitarianCrisis => "destruction",
            SceneType::PoliticalOrDiplomaticEvents => "political",
            SceneType::NewsMediaOrInterviewSettings => "news",
            SceneType::PublicProtestOrDemonstration => "protest",
            SceneType::SymbolicOrReligiousRitual => "symbolic",
            SceneType::OtherOrUnknown => "other",
        }
    }
}

impl fmt::Display for SceneType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SceneType {
    type Err = Error;

    /// Exact snake-case names, or the short names.
    fn from_str(s: &str) -> Result<Self> {
        SceneType::ALL
            .into_iter()
            .find(|t| t.as_str() == s || t.short_name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown scene_type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenePrompt {
    pub template_version: String,
    pub rendered_text: String,
}

impl ScenePrompt {
    /// Hex sha256 of the rendered text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.rendered_text.as_bytes()))
    }

    /// A prompt read from a file; it must name all seven types and carry the
    /// JSON-only instruction.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let prompt = ScenePrompt {
            template_version: String::new(),
            rendered_text: text,
        };
        check_prompt(&prompt.rendered_text)?;
        Ok(ScenePrompt {
            template_version: format!("file:{}", &prompt.hash()[..12]),
            ..prompt
        })
    }
}

fn check_prompt(text: &str) -> Result<()> {
    let missing: Vec<&str> = SceneType::ALL.iter().map(|t| t.as_str()).filter(|n| !text.contains(n)).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!("prompt lacks categories: {}", missing.join(", "))));
    }
    if !text.contains(JSON_ONLY) {
        return Err(Error::Validation(format!("prompt lacks the instruction {JSON_ONLY:?}")));
    }
    Ok(())
}

pub fn build_prompt(template_version: &str) -> Result<ScenePrompt> {
    match template_version {
        DEFAULT_TEMPLATE_VERSION => Ok(ScenePrompt {
            template_version: DEFAULT_TEMPLATE_VERSION.into(),
            rendered_text: A1_TEMPLATE.to_string(),
        }),
        other => Err(Error::Config(format!(
            "unknown prompt template version {other:?} (known: {DEFAULT_TEMPLATE_VERSION})"
        ))),
    }
}

/// The validated fields of one response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedScene {
    /// Effective type: `OtherOrUnknown` whenever `abstain` is set.
    pub scene_type: SceneType,
    pub abstain: bool,
    pub text_overlay: bool,
    pub evidence: Vec<String>,
    pub parse_status: ParseStatus,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

/// Byte spans of balanced top-level `{...}` objects, skipping braces inside
/// JSON strings.
fn object_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let (mut depth, mut start, mut in_str, mut escaped) = (0usize, 0usize, false, false);
    for (i, c) in text.char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_str = true,
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    spans.push((start, i + 1));
                }
            }
            _ => {}
        }
    }
    spans
}

pub fn validate_response(raw: &str) -> Result<ValidatedScene> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(invalid("empty response"));
    }
    let (value, mut status) = match serde_json::from_str::<Value>(trimmed) {
        Ok(v @ Value::Object(_)) => (v, ParseStatus::Ok),
        Ok(_) => return Err(invalid("top-level JSON value is not an object")),
        Err(_) => {
            let spans = object_spans(trimmed);
            match spans.as_slice() {
                [] => return Err(invalid("no JSON object in response")),
                [(a, b)] => {
                    let v: Value = serde_json::from_str(&trimmed[*a..*b]).map_err(|e| invalid(format!("unparseable object: {e}")))?;
                    (v, ParseStatus::Repaired)
                }
                _ => return Err(invalid(format!("{} JSON objects in response", spans.len()))),
            }
        }
    };
    let obj = value.as_object().expect("object checked above");
    let abstain = match obj.get("abstain") {
        Some(Value::Bool(b)) => *b,
        Some(other) => return Err(invalid(format!("abstain must be boolean, got {other}"))),
        None => return Err(invalid("missing required key abstain")),
    };
    let declared = match obj.get("scene_type") {
        Some(Value::String(s)) => Some(
            SceneType::ALL
                .into_iter()
                .find(|t| t.as_str() == s)
                .ok_or_else(|| invalid(format!("unknown scene_type {s:?}")))?,
        ),
        Some(Value::Null) | None => None,
        Some(other) => return Err(invalid(format!("scene_type must be a string, got {other}"))),
    };
    let scene_type = match (abstain, declared) {
        (true, _) => SceneType::OtherOrUnknown,
        (false, Some(t)) => t,
        (false, None) => return Err(invalid("missing required key scene_type")),
    };
    let text_overlay = match obj.get("text_overlay") {
        Some(Value::Bool(b)) => *b,
        None | Some(Value::Null) => false,
        Some(other) => return Err(invalid(format!("text_overlay must be boolean, got {other}"))),
    };
    let mut evidence = Vec::new();
    match obj.get("evidence") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let s = item.as_str().ok_or_else(|| invalid(format!("evidence item {item} is not a string")))?;
                let words: Vec<&str> = s.split_whitespace().collect();
                if words.len() > MAX_EVIDENCE_WORDS {
                    evidence.push(words[..MAX_EVIDENCE_WORDS].join(" "));
                    status = ParseStatus::Repaired;
                } else {
                    evidence.push(s.trim().to_string());
                }
            }
        }
        Some(other) => return Err(invalid(format!("evidence must be a list, got {other}"))),
    }
    Ok(ValidatedScene {
        scene_type,
        abstain,
        text_overlay,
        evidence,
        parse_status: status,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneLabel {
    pub video_id: String,
    pub frame_id: u32,
    pub scene_type: SceneType,
    pub abstain: bool,
    pub text_overlay: bool,
    pub evidence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    pub parse_status: ParseStatus,
    pub prompt_hash: String,
    pub model_version: String,
}

impl SceneLabel {
    /// Provenance key: (prompt hash, model version, frame).
    pub fn provenance_key(&self) -> (String, String, String, u32) {
        (self.prompt_hash.clone(), self.model_version.clone(), self.video_id.clone(), self.frame_id)
    }

    pub fn without_raw(&self) -> SceneLabel {
        SceneLabel {
            raw_response: None,
            ..self.clone()
        }
    }
}

/// One frame image to label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRef {
    pub video_id: String,
    pub frame_id: u32,
    pub image_path: PathBuf,
}

/// A raw response kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub video_id: String,
    pub frame_id: u32,
    pub attempt: u32,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: SceneLabel,
    pub attempts: Vec<RawResponse>,
}

pub struct SceneClassifier<'a> {
    client: &'a BackendClient,
    prompt: ScenePrompt,
    prompt_hash: String,
    model_version: String,
    requested_version: Option<String>,
}

impl<'a> SceneClassifier<'a> {
    /// `model_version` pins a backend model; when absent the version is read
    /// from the backend's `/info`.
    pub fn new(client: &'a BackendClient, prompt: ScenePrompt, model_version: Option<String>) -> Result<Self> {
        let resolved = match &model_version {
            Some(v) => v.clone(),
            None => {
                let info = client.info()?;
                info.model_version("vlm").unwrap_or("unknown").to_string()
            }
        };
        Ok(SceneClassifier {
            client,
            prompt_hash: prompt.hash(),
            prompt,
            model_version: resolved,
            requested_version: model_version,
        })
    }

    pub fn prompt(&self) -> &ScenePrompt {
        &self.prompt
    }

    pub fn model_version(&self) -> &str {
        &self.model_version
    }

    fn send(&self, image: &[u8], prompt_text: String) -> Result<String, BackendError> {
        self.client.scene(&SceneRequest {
            image_b64: base64::engine::general_purpose::STANDARD.encode(image),
            prompt: prompt_text,
            model_version: self.requested_version.clone(),
        })
    }

    /// Send, shrinking the image once when the backend answers 413.
    fn send_sized(&self, image: &mut Vec<u8>, prompt_text: &str) -> Result<String> {
        match self.send(image, prompt_text.to_string()) {
            Err(e) if e.is_payload_too_large() => {
                let img = image::load_from_memory(image).map_err(|e| Error::Decode(e.to_string()))?;
                let long = img.width().max(img.height());
                log::warn!("scene backend rejected a {long}px image as too large; retrying at half size");
                *image = encode_jpeg(&img.resize(long / 2, long / 2, FilterType::Triangle))?;
                Ok(self.send(image, prompt_text.to_string())?)
            }
            other => Ok(other?),
        }
    }

    pub fn classify_frame(&self, frame: &FrameRef) -> Result<Classification> {
        let mut image = prepare_image(&frame.image_path)?;
        let mut attempts = Vec::new();
        let mut last_err = None;
        for attempt in 0..2u32 {
            let prompt_text = if attempt == 0 {
                self.prompt.rendered_text.clone()
            } else {
                format!("{}{RETRY_REMINDER}", self.prompt.rendered_text)
            };
            let raw = self.send_sized(&mut image, &prompt_text)?;
            attempts.push(RawResponse {
                video_id: frame.video_id.clone(),
                frame_id: frame.frame_id,
                attempt,
                raw_response: raw.clone(),
            });
            match validate_response(&raw) {
                Ok(v) => return Ok(self.finish(frame, v, raw, attempts)),
                Err(e) => {
                    log::debug!("{}#{} attempt {attempt}: {e}", frame.video_id, frame.frame_id);
                    last_err = Some(e);
                }
            }
        }
        log::warn!(
            "{}#{}: response failed validation twice ({}); labeled other_or_unknown",
            frame.video_id,
            frame.frame_id,
            last_err.map(|e| e.to_string()).unwrap_or_default()
        );
        let raw = attempts.last().map(|a| a.raw_response.clone()).unwrap_or_default();
        let failed = ValidatedScene {
            scene_type: SceneType::OtherOrUnknown,
            abstain: true,
            text_overlay: false,
            evidence: Vec::new(),
            parse_status: ParseStatus::Failed,
        };
        Ok(self.finish(frame, failed, raw, attempts))
    }

    fn finish(&self, frame: &FrameRef, v: ValidatedScene, raw: String, attempts: Vec<RawResponse>) -> Classification {
        Classification {
            label: SceneLabel {
                video_id: frame.video_id.clone(),
                frame_id: frame.frame_id,
                scene_type: v.scene_type,
                abstain: v.abstain,
                text_overlay: v.text_overlay,
                evidence: v.evidence,
                raw_response: Some(raw),
                parse_status: v.parse_status,
                prompt_hash: self.prompt_hash.clone(),
                model_version: self.model_version.clone(),
            },
            attempts,
        }
    }

    /// Label every frame; results keep input order. Validation failures
    /// become `failed` labels, so only transport and I/O errors are `Err`.
    pub fn classify_batch(&self, frames: &[FrameRef], exec: Execution) -> Vec<Result<Classification>> {
        exec.map(frames, |f| self.classify_frame(f))
    }
}

fn encode_jpeg(img: &image::DynamicImage) -> Result<Vec<u8>> {
    crate::frames::encode_image(&img.to_rgb8(), crate::frames::ImageFormat::Jpeg)
}

/// Original bytes, or a re-encoded copy when the long side exceeds the limit.
pub fn prepare_image(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h) = image::ImageReader::new(Cursor::new(&bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .into_dimensions()
        .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
    if w.max(h) <= MAX_LONG_SIDE {
        return Ok(bytes);
    }
    let img = image::load_from_memory(&bytes).map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
    encode_jpeg(&img.resize(MAX_LONG_SIDE, MAX_LONG_SIDE, FilterType::Triangle))
}

/// Re-runs under the same provenance key whose type changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Nondeterminism {
    pub video_id: String,
    pub frame_id: u32,
    pub previous: SceneType,
    pub current: SceneType,
}

pub fn find_nondeterminism(previous: &[SceneLabel], current: &[SceneLabel]) -> Vec<Nondeterminism> {
    let prev: BTreeMap<_, _> = previous.iter().map(|l| (l.provenance_key(), l)).collect();
    current
        .iter()
        .filter_map(|c| {
            let p = prev.get(&c.provenance_key())?;
            (p.scene_type != c.scene_type || p.abstain != c.abstain).then(|| Nondeterminism {
                video_id: c.video_id.clone(),
                frame_id: c.frame_id,
                previous: p.scene_type,
                current: c.scene_type,
            })
        })
        .collect()
}

/// Write labels (without raw responses) and the raw audit records.
pub fn write_labels(labels_path: &Path, raw_path: &Path, results: &[Classification]) -> Result<()> {
    write_atomic(labels_path, &to_jsonl(results.iter().map(|c| c.label.without_raw()))?)?;
    write_atomic(raw_path, &to_jsonl(results.iter().flat_map(|c| c.attempts.iter()))?)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<SceneLabel>> {
    read_jsonl(path)
}
