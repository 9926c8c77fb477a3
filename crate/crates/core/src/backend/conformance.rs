//! Route-by-route contract checks against a running model service. The same
//! suite runs against the in-process stub and against a real server.

use base64::Engine;
use serde::Serialize;

use super::wire::*;
use super::{BackendClient, BackendError, Route};
use crate::absa::SentimentLabel;
use crate::frames::{encode_image, ImageFormat};
use crate::linking::conllu::parse_conllu;
use crate::scenes::{build_prompt, validate_response, ParseStatus, DEFAULT_TEMPLATE_VERSION};

/// Sentence with a known UD analysis: "Netanyahu" is `nsubj` of "wants" and
/// "Israeli" is `amod` of "regime".
pub const REFERENCE_SENTENCE: &str = "Netanyahu wants the Israeli regime to survive.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceCheck {
    pub route: String,
    pub name: String,
    pub passed: bool,
    /// Present when the route is advertised absent and the check was skipped.
    pub skipped: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&ConformanceCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn record(&mut self, route: Route, name: &str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(ConformanceCheck {
            route: route.path().into(),
            name: name.into(),
            passed,
            skipped: false,
            detail,
        });
    }

    fn skip(&mut self, route: Route) {
        self.checks.push(ConformanceCheck {
            route: route.path().into(),
            name: "advertised absent".into(),
            passed: true,
            skipped: true,
            detail: "route not listed in /info".into(),
        });
    }
}

/// Run every check. Routes missing from `/info` are skipped, which the
/// contract allows; a served route must satisfy all its checks.
pub fn check_backend(client: &BackendClient) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    let info = match client.info() {
        Ok(info) => info,
        Err(e) => {
            report.record(Route::Info, "schema", Err(e.to_string()));
            return report;
        }
    };
    report.record(Route::Info, "schema", check_info(&info));
    let served = |r: Route| info.routes.iter().any(|p| p == r.path());

    for route in [Route::Probe, Route::Transcribe, Route::Parse, Route::Absa, Route::Scene] {
        if !served(route) {
            report.skip(route);
            continue;
        }
        match route {
            Route::Probe => report.record(route, "schema", check_probe(client)),
            Route::Transcribe => report.record(route, "schema", check_transcribe(client)),
            Route::Parse => {
                report.record(route, "round trip", check_parse_round_trip(client));
                report.record(route, "reference deprels", check_parse_reference(client));
            }
            Route::Absa => report.record(route, "schema", check_absa(client)),
            Route::Scene => report.record(route, "validator accepts", check_scene(client)),
            Route::Info => unreachable!(),
        }
        report.record(route, "malformed request is 400", check_bad_request(client, route));
    }
    report
}

fn check_info(info: &BackendInfo) -> Result<String, String> {
    for r in &info.routes {
        if Route::from_path(r).is_none() {
            return Err(format!("unknown route advertised: {r}"));
        }
    }
    if let Some((role, _)) = info.models.iter().find(|(_, m)| m.version.is_empty()) {
        return Err(format!("model {role} has an empty version"));
    }
    Ok(format!("{} routes, device {}", info.routes.len(), info.device))
}

fn check_probe(client: &BackendClient) -> Result<String, String> {
    let (resp, _) = client
        .probe(&ProbeRequest {
            video_id: "conformance".into(),
            audio_url_or_b64: String::new(),
            window_s: 30.0,
        })
        .map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&resp.confidence) {
        return Err(format!("confidence {} outside [0,1]", resp.confidence));
    }
    Ok(format!("language {}", resp.language))
}

fn check_transcribe(client: &BackendClient) -> Result<String, String> {
    let (resp, _) = client
        .transcribe(&TranscribeRequest {
            video_id: "conformance".into(),
            audio_url_or_b64: String::new(),
            language: "en".into(),
        })
        .map_err(|e| e.to_string())?;
    let mut prev_end = 0.0;
    for s in &resp.segments {
        if !(s.start >= prev_end - 1e-9 && s.end > s.start) {
            return Err(format!("segment [{}, {}) is out of order", s.start, s.end));
        }
        prev_end = s.end;
    }
    if resp.has_speech && resp.segments.is_empty() {
        return Err("has_speech=true with no segments".into());
    }
    Ok(format!("{} segments", resp.segments.len()))
}

fn parse_sentences(client: &BackendClient, sentences: &[String]) -> Result<Vec<crate::linking::conllu::ParsedSentence>, String> {
    let text = client.parse(sentences).map_err(|e| e.to_string())?;
    let parsed = parse_conllu(&text).map_err(|e| e.to_string())?;
    if parsed.len() != sentences.len() {
        return Err(format!("{} sentences sent, {} returned", sentences.len(), parsed.len()));
    }
    parsed
        .into_iter()
        .map(|p| p.map_err(|r| format!("rejected sentence at line {}: {}", r.line, r.reason)))
        .collect()
}

const ROUND_TRIP_SENTENCES: [&str; 20] = [
    "The army said the strikes will continue.",
    "Protesters in London support a ceasefire.",
    "Aid trucks waited at the border crossing for hours.",
    "The minister met foreign envoys on Monday.",
    "Hospitals in the north ran out of fuel.",
    "Thousands marched through the city centre.",
    "The spokesman declined to comment on the report.",
    "Rescue teams searched the rubble for survivors.",
    "Talks resumed in Cairo after a short pause.",
    "The council will vote on the resolution tomorrow.",
    "Families sheltered in schools run by the agency.",
    "Officials said dozens of people were injured.",
    "The prime minister addressed parliament late at night.",
    "Journalists could not enter the area independently.",
    "Schools remained closed for a third week.",
    "The president called for restraint on both sides.",
    "Prices of food and water rose sharply.",
    "A convoy of ambulances left the hospital at dawn.",
    "Students gathered outside the university library.",
    "The ceasefire held through the weekend.",
];

fn check_parse_round_trip(client: &BackendClient) -> Result<String, String> {
    let sentences: Vec<String> = ROUND_TRIP_SENTENCES.iter().map(|s| s.to_string()).collect();
    let parsed = parse_sentences(client, &sentences)?;
    Ok(format!("{} sentences, 0 rejected", parsed.len()))
}

fn check_parse_reference(client: &BackendClient) -> Result<String, String> {
    let parsed = parse_sentences(client, &[REFERENCE_SENTENCE.to_string()])?;
    let s = &parsed[0];
    let rel = |form: &str| {
        s.tokens.iter().find(|t| t.form == form).map(|t| {
            let head = s.tokens.get(t.head_index.wrapping_sub(1) as usize).map(|h| h.form.as_str()).unwrap_or("ROOT");
            (t.deprel.as_str(), head)
        })
    };
    let subj = rel("Netanyahu");
    let adj = rel("Israeli");
    if subj != Some(("nsubj", "wants")) || adj != Some(("amod", "regime")) {
        return Err(format!("Netanyahu -> {subj:?}, Israeli -> {adj:?}"));
    }
    Ok("nsubj and amod attach as expected".into())
}

fn check_absa(client: &BackendClient) -> Result<String, String> {
    let (resp, _) = client
        .absa(&AbsaRequest {
            text: "The IDF said the operation would continue.".into(),
            aspect: "IDF".into(),
        })
        .map_err(|e| e.to_string())?;
    resp.label.parse::<SentimentLabel>().map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&resp.confidence) {
        return Err(format!("confidence {} outside [0,1]", resp.confidence));
    }
    if resp.model_version.is_empty() {
        return Err("empty model_version".into());
    }
    Ok(format!("{} {:.3}", resp.label, resp.confidence))
}

fn check_scene(client: &BackendClient) -> Result<String, String> {
    let prompt = build_prompt(DEFAULT_TEMPLATE_VERSION).map_err(|e| e.to_string())?;
    let img = image::RgbImage::from_pixel(64, 48, image::Rgb([128, 128, 128]));
    let bytes = encode_image(&img, ImageFormat::Jpeg).map_err(|e| e.to_string())?;
    let raw = client
        .scene(&SceneRequest {
            image_b64: base64::engine::general_purpose::STANDARD.encode(bytes),
            prompt: prompt.rendered_text,
            model_version: None,
        })
        .map_err(|e| e.to_string())?;
    let v = validate_response(&raw).map_err(|e| format!("{e}; raw: {raw}"))?;
    if v.parse_status == ParseStatus::Failed {
        return Err(format!("validator failed on: {raw}"));
    }
    Ok(format!("{} ({:?})", v.scene_type.as_str(), v.parse_status))
}

fn check_bad_request(client: &BackendClient, route: Route) -> Result<String, String> {
    match client.call_raw(route, &serde_json::json!({ "unexpected": true })) {
        Err(BackendError::Status { status: 400, body, .. }) => {
            if body.contains(route.path()) {
                Ok("400 with schema pointer".into())
            } else {
                Err(format!("400 body lacks a schema pointer: {body}"))
            }
        }
        Err(e) => Err(format!("expected HTTP 400, got {e}")),
        Ok(raw) => Err(format!("expected HTTP 400, got a response: {raw}")),
    }
}
