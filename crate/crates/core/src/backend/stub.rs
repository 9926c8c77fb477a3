//! Deterministic stand-in for the model server.
//!
//! The stub answers every route of the wire contract without any model:
//! transcripts and probe results come from a script keyed by video id,
//! dependency parses from a small rule-based chain parser (or scripted
//! CoNLL-U), aspect sentiment from cue-word counts, and scene labels from the
//! mean colour of the frame matched against [`SCENE_PALETTE`]. Identical
//! requests always produce identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::wire::*;
use super::{BackendError, Route, Transport};
use crate::error::{Error, Result};

pub const STUB_ASR_VERSION: &str = "stub-asr-1";
pub const STUB_PARSER_VERSION: &str = "stub-parser-1";
pub const STUB_ABSA_VERSION: &str = "stub-absa-1";
pub const STUB_VLM_VERSION: &str = "stub-vlm-1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubScript {
    #[serde(default)]
    pub videos: BTreeMap<String, StubVideo>,
    /// Sentence text → CoNLL-U block (without the trailing blank line).
    #[serde(default)]
    pub parses: BTreeMap<String, String>,
    #[serde(default)]
    pub absa: Vec<StubAbsa>,
    /// Routes answered with HTTP 404, e.g. `["/scene"]`.
    #[serde(default)]
    pub disabled_routes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubVideo {
    pub language: String,
    #[serde(default = "default_probe_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub segments: Vec<WireSegment>,
}

fn default_probe_confidence() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubAbsa {
    pub text: String,
    pub aspect: String,
    pub label: String,
    pub confidence: f64,
}

impl StubScript {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// What the stub VLM says for a frame whose mean colour is nearest `rgb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubSceneReply {
    Scene(&'static str),
    Abstain,
    /// A fenced object around a valid news label, exercising repair.
    Fenced,
    /// An out-of-taxonomy label, exercising retry and failure accounting.
    Malformed,
}

pub const SCENE_PALETTE: [([u8; 3], StubSceneReply); 10] = [
    ([200, 30, 30], StubSceneReply::Scene("combat_or_military_action")),
    ([120, 80, 40], StubSceneReply::Scene("destruction_or_humanitarian_crisis")),
    ([30, 30, 200], StubSceneReply::Scene("political_or_diplomatic_events")),
    ([30, 160, 30], StubSceneReply::Scene("news_media_or_interview_settings")),
    ([230, 200, 30], StubSceneReply::Scene("public_protest_or_demonstration")),
    ([240, 240, 240], StubSceneReply::Scene("symbolic_or_religious_ritual")),
    ([0, 0, 0], StubSceneReply::Scene("other_or_unknown")),
    ([128, 128, 128], StubSceneReply::Abstain),
    ([30, 200, 200], StubSceneReply::Fenced),
    ([230, 30, 230], StubSceneReply::Malformed),
];

/// Palette colour for a scene-type name, for building synthetic frames.
pub fn palette_colour(reply: StubSceneReply) -> [u8; 3] {
    SCENE_PALETTE
        .iter()
        .find(|(_, r)| *r == reply)
        .map(|(c, _)| *c)
        .expect("every reply kind has a palette entry")
}

const NEGATIVE_CUES: &[&str] = &[
    "attack", "attacks", "bomb", "bombed", "brutal", "brutality", "condemn", "condemned", "crisis", "dead", "death",
    "destroyed", "genocide", "kill", "killed", "killing", "strike", "strikes", "terror", "terrorist", "violence",
    "war",
];

const POSITIVE_CUES: &[&str] = &[
    "accepts", "agreement", "constructive", "free", "friends", "help", "hope", "peace", "praised", "protect",
    "support", "supports", "welcome",
];

const VERB_CUES: &[&str] = &[
    "accepts", "are", "attacked", "confirmed", "continue", "has", "have", "is", "praised", "said", "says",
    "support", "supports", "wants", "was", "were", "will",
];

#[derive(Debug, Clone, Default)]
pub struct StubBackend {
    script: StubScript,
}

impl StubBackend {
    pub fn new(script: StubScript) -> Self {
        StubBackend { script }
    }

    pub fn info() -> BackendInfo {
        let model = |name: &str, version: &str| ModelInfo {
            name: name.into(),
            version: version.into(),
        };
        BackendInfo {
            routes: Route::ALL.iter().map(|r| r.path().to_string()).collect(),
            models: BTreeMap::from([
                ("asr".to_string(), model("stub-asr", STUB_ASR_VERSION)),
                ("parser".to_string(), model("stub-chain-parser", STUB_PARSER_VERSION)),
                ("absa".to_string(), model("stub-cue-absa", STUB_ABSA_VERSION)),
                ("vlm".to_string(), model("stub-palette-vlm", STUB_VLM_VERSION)),
            ]),
            device: "cpu".into(),
        }
    }

    fn probe(&self, req: ProbeRequest) -> ProbeResponse {
        if let Some(v) = self.script.videos.get(&req.video_id) {
            return ProbeResponse {
                language: v.language.clone(),
                confidence: v.confidence,
            };
        }
        if req.audio_url_or_b64.is_empty() {
            ProbeResponse {
                language: "und".into(),
                confidence: 0.0,
            }
        } else {
            ProbeResponse {
                language: "en".into(),
                confidence: default_probe_confidence(),
            }
        }
    }

    fn transcribe(&self, req: TranscribeRequest) -> TranscribeResponse {
        let segments = self
            .script
            .videos
            .get(&req.video_id)
            .map(|v| v.segments.clone())
            .unwrap_or_default();
        TranscribeResponse {
            has_speech: !segments.is_empty(),
            segments,
        }
    }

    fn parse(&self, req: ParseRequest) -> String {
        let mut out = String::new();
        for (i, sentence) in req.sentences.iter().enumerate() {
            out.push_str(&format!("# sent_id = {}\n# text = {}\n", i + 1, sentence));
            match self.script.parses.get(sentence) {
                Some(block) => {
                    for line in block.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
                        out.push_str(line);
                        out.push('\n');
                    }
                }
                None => out.push_str(&chain_parse(sentence)),
            }
            out.push('\n');
        }
        out
    }

    fn absa(&self, req: AbsaRequest) -> AbsaResponse {
        if let Some(s) = self
            .script
            .absa
            .iter()
            .find(|s| s.text == req.text && s.aspect == req.aspect)
        {
            return AbsaResponse {
                label: s.label.clone(),
                confidence: s.confidence,
                model_version: STUB_ABSA_VERSION.into(),
            };
        }
        let (mut neg, mut pos) = (0i32, 0i32);
        for word in req.text.split_whitespace() {
            let w: String = word
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect();
            if NEGATIVE_CUES.contains(&w.as_str()) {
                neg += 1;
            }
            if POSITIVE_CUES.contains(&w.as_str()) {
                pos += 1;
            }
        }
        let score = pos - neg;
        let (label, confidence) = match score.signum() {
            0 => ("neutral", 0.8),
            1 => ("positive", (0.7 + 0.1 * score as f64).min(0.99)),
            _ => ("negative", (0.7 + 0.1 * (-score) as f64).min(0.99)),
        };
        AbsaResponse {
            label: label.into(),
            confidence,
            model_version: STUB_ABSA_VERSION.into(),
        }
    }

    fn scene(&self, req: SceneRequest) -> Result<String, BackendError> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(req.image_b64.as_bytes())
            .map_err(|e| BackendError::bad_request(Route::Scene, format!("image_b64: {e}")))?;
        let img = image::load_from_memory(&bytes)
            .map_err(|e| BackendError::bad_request(Route::Scene, format!("image: {e}")))?
            .to_rgb8();
        if img.width().max(img.height()) > 4096 {
            return Err(BackendError::Status {
                route: Route::Scene,
                status: 413,
                body: "image too large".into(),
            });
        }
        let reply = nearest_palette_reply(mean_rgb(&img));
        Ok(match reply {
            StubSceneReply::Scene(name) => format!(
                r#"{{"scene_type":"{name}","abstain":false,"text_overlay":false,"evidence":["dominant colour matches {name}"]}}"#
            ),
            StubSceneReply::Abstain => r#"{"abstain":true,"text_overlay":false,"evidence":[]}"#.to_string(),
            StubSceneReply::Fenced => "Here is the annotation:\n```json\n{\"scene_type\":\"news_media_or_interview_settings\",\"abstain\":false,\"text_overlay\":true,\"evidence\":[\"studio backdrop\"]}\n```".to_string(),
            StubSceneReply::Malformed => r#"{"scene_type":"celebration","abstain":false}"#.to_string(),
        })
    }
}

fn mean_rgb(img: &image::RgbImage) -> [f64; 3] {
    let n = (img.width() as f64 * img.height() as f64).max(1.0);
    let mut acc = [0f64; 3];
    for p in img.pixels() {
        for c in 0..3 {
            acc[c] += p[c] as f64;
        }
    }
    acc.map(|v| v / n)
}

pub fn nearest_palette_reply(rgb: [f64; 3]) -> StubSceneReply {
    let dist = |c: &[u8; 3]| (0..3).map(|i| (c[i] as f64 - rgb[i]).powi(2)).sum::<f64>();
    SCENE_PALETTE
        .iter()
        .min_by(|a, b| dist(&a.0).total_cmp(&dist(&b.0)))
        .map(|(_, r)| *r)
        .expect("palette is non-empty")
}

/// Whitespace tokenization with punctuation and possessive clitics split off.
pub fn stub_tokenize(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in sentence.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        let mut leading = Vec::new();
        while start < end && is_punct(chars[start]) {
            leading.push(chars[start].to_string());
            start += 1;
        }
        let mut trailing = Vec::new();
        while end > start && is_punct(chars[end - 1]) {
            trailing.push(chars[end - 1].to_string());
            end -= 1;
        }
        trailing.reverse();
        tokens.extend(leading);
        let core: String = chars[start..end].iter().collect();
        let lower = core.to_lowercase();
        if core.chars().count() > 2 && (lower.ends_with("'s") || lower.ends_with("’s")) {
            let cut = core.char_indices().rev().nth(1).map(|(i, _)| i).unwrap_or(0);
            tokens.push(core[..cut].to_string());
            tokens.push(core[cut..].to_string());
        } else if !core.is_empty() {
            tokens.push(core);
        }
        tokens.extend(trailing);
    }
    tokens
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && c != '-'
}

/// Chain parse: the first verb cue (else the first word) is the root; tokens
/// to its left chain rightward into it, tokens to its right chain leftward.
fn chain_parse(sentence: &str) -> String {
    let tokens = stub_tokenize(sentence);
    if tokens.is_empty() {
        return String::new();
    }
    let punct: Vec<bool> = tokens.iter().map(|t| t.chars().all(is_punct)).collect();
    let root = tokens
        .iter()
        .position(|t| VERB_CUES.contains(&t.to_lowercase().as_str()))
        .or_else(|| punct.iter().position(|p| !p))
        .unwrap_or(0);
    let mut out = String::new();
    for (i, form) in tokens.iter().enumerate() {
        let (head, deprel) = if i == root {
            (0, "root")
        } else if punct[i] {
            (root + 1, "punct")
        } else if i < root {
            let rel = if form.starts_with('\'') || form.starts_with('’') {
                "case"
            } else if i + 1 == root {
                "nsubj"
            } else {
                "dep"
            };
            (i + 2, rel)
        } else {
            (i, if i == root + 1 { "obj" } else { "dep" })
        };
        let upos = if punct[i] {
            "PUNCT"
        } else if i == root {
            "VERB"
        } else {
            "X"
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_\n",
            i + 1,
            form,
            form.to_lowercase(),
            upos,
            head,
            deprel
        ));
    }
    out
}

fn decode_request<T: serde::de::DeserializeOwned>(route: Route, body: &serde_json::Value) -> Result<T, BackendError> {
    T::deserialize(body).map_err(|e| BackendError::bad_request(route, format!("{e}; expected {}", schema_hint(route))))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("wire types serialize")
}

impl Transport for StubBackend {
    fn call(&self, route: Route, body: &serde_json::Value) -> Result<String, BackendError> {
        if self.script.disabled_routes.iter().any(|r| r == route.path()) {
            return Err(BackendError::Status {
                route,
                status: 404,
                body: format!("route {route} disabled"),
            });
        }
        match route {
            Route::Probe => Ok(to_json(&self.probe(decode_request(route, body)?))),
            Route::Transcribe => Ok(to_json(&self.transcribe(decode_request(route, body)?))),
            Route::Parse => Ok(self.parse(decode_request(route, body)?)),
            Route::Absa => Ok(to_json(&self.absa(decode_request(route, body)?))),
            Route::Scene => self.scene(decode_request(route, body)?),
            Route::Info => {
                let mut info = Self::info();
                info.routes.retain(|r| !self.script.disabled_routes.contains(r));
                Ok(to_json(&info))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_punctuation_and_possessives() {
        assert_eq!(
            stub_tokenize("Netanyahu's plan, Ben-Gvir’s too."),
            vec!["Netanyahu", "'s", "plan", ",", "Ben-Gvir", "’s", "too", "."]
        );
    }

    #[test]
    fn chain_parse_has_one_root_and_no_cycles() {
        let text = chain_parse("Netanyahu wants the Israeli regime to survive.");
        let heads: Vec<usize> = text
            .lines()
            .map(|l| l.split('\t').nth(6).unwrap().parse().unwrap())
            .collect();
        assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
        for start in 1..=heads.len() {
            let mut cur = start;
            for _ in 0..=heads.len() {
                if cur == 0 {
                    break;
                }
                cur = heads[cur - 1];
            }
            assert_eq!(cur, 0, "token {start} does not reach the root");
        }
    }

    #[test]
    fn absa_cues() {
        let stub = StubBackend::default();
        let r = stub.absa(AbsaRequest {
            text: "They support peace.".into(),
            aspect: "They".into(),
        });
        assert_eq!(r.label, "positive");
        let r = stub.absa(AbsaRequest {
            text: "The weather is nice".into(),
            aspect: "weather".into(),
        });
        assert_eq!((r.label.as_str(), r.confidence), ("neutral", 0.8));
    }

    #[test]
    fn palette_round_trips() {
        for (colour, reply) in SCENE_PALETTE {
            assert_eq!(nearest_palette_reply(colour.map(f64::from)), reply);
        }
    }

    #[test]
    fn bad_request_body_is_400_with_schema() {
        let stub = StubBackend::default();
        let err = stub
            .call(Route::Absa, &serde_json::json!({"text": "x"}))
            .unwrap_err();
        match err {
            BackendError::Status { status, body, .. } => {
                assert_eq!(status, 400);
                assert!(body.contains("/absa {text"));
            }
            other => panic!("{other:?}"),
        }
    }
}
