//! Client side of transcription: a bounded-window language probe, full
//! transcription through the backend, and strict validation of what comes
//! back. No audio processing happens here; speech/no-speech is whatever the
//! backend's segments say.

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::backend::wire::{ProbeRequest, TranscribeRequest, TranscribeResponse};
use crate::backend::{BackendClient, BackendError, Route};
use crate::corpus::{LanguageStatus, VideoRecord};
use crate::error::{Error, Result};

pub const DEFAULT_PROBE_WINDOW_S: f64 = 30.0;

/// Segment end times may overrun the recorded duration by this much.
pub const DURATION_SLACK_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub seg_id: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub video_id: String,
    pub language: String,
    pub segments: Vec<TranscriptSegment>,
    pub has_speech: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProbe {
    pub video_id: String,
    pub probe_window_s: f64,
    pub detected_language: String,
    pub confidence: f64,
}

impl LanguageProbe {
    /// English iff the primary language subtag is `en`; `und` means no
    /// decodable audio.
    pub fn status(&self) -> LanguageStatus {
        let primary = self
            .detected_language
            .split(['-', '_'])
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        match primary.as_str() {
            "en" => LanguageStatus::English,
            "und" | "" => LanguageStatus::Undetermined,
            _ => LanguageStatus::NonEnglish,
        }
    }
}

/// Where the backend finds the audio: a URL/path it can open, or inline bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AudioRef {
    Locator(String),
    Inline(Vec<u8>),
}

impl AudioRef {
    pub fn to_wire(&self) -> String {
        match self {
            AudioRef::Locator(s) => s.clone(),
            AudioRef::Inline(bytes) => base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }
}

pub fn probe_language(client: &BackendClient, video_id: &str, audio: &AudioRef, window_s: f64) -> Result<LanguageProbe> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(Error::Precondition(format!("probe window must be positive, got {window_s}")));
    }
    let (resp, raw) = client.probe(&ProbeRequest {
        video_id: video_id.to_string(),
        audio_url_or_b64: audio.to_wire(),
        window_s,
    })?;
    if !(0.0..=1.0).contains(&resp.confidence) {
        return Err(BackendError::contract(Route::Probe, format!("confidence {} outside [0,1]", resp.confidence), raw).into());
    }
    let language = resp.language.trim();
    let probe = if language.is_empty() || language.eq_ignore_ascii_case("und") {
        LanguageProbe {
            video_id: video_id.to_string(),
            probe_window_s: window_s,
            detected_language: "und".into(),
            confidence: 0.0,
        }
    } else {
        LanguageProbe {
            video_id: video_id.to_string(),
            probe_window_s: window_s,
            detected_language: language.to_string(),
            confidence: resp.confidence,
        }
    };
    Ok(probe)
}

/// Probe result applied to a record. The only path that sets a language status.
pub fn apply_probe(record: &mut VideoRecord, probe: &LanguageProbe) {
    record.language_status = Some(probe.status());
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscribeOutcome {
    pub transcript: Transcript,
    /// The backend's response body, byte for byte.
    pub raw_response: String,
}

pub fn transcribe(client: &BackendClient, record: &VideoRecord, audio: &AudioRef) -> Result<TranscribeOutcome> {
    if record.language_status != Some(LanguageStatus::English) {
        return Err(Error::Precondition(format!(
            "{} has language status {:?}; only English videos are transcribed",
            record.video_id, record.language_status
        )));
    }
    let (resp, raw) = client.transcribe(&TranscribeRequest {
        video_id: record.video_id.clone(),
        audio_url_or_b64: audio.to_wire(),
        language: "en".into(),
    })?;
    let transcript = transcript_from_response(&record.video_id, "en", record.duration_s, &resp)
        .map_err(|message| {
            log::error!("transcribe contract violation for {}: {message}; raw payload: {raw}", record.video_id);
            Error::from(BackendError::contract(Route::Transcribe, message, raw.clone()))
        })?;
    Ok(TranscribeOutcome {
        transcript,
        raw_response: raw,
    })
}

/// Pure transform from a backend response to a validated transcript.
/// `duration_s <= 0` disables the duration bound.
pub fn transcript_from_response(
    video_id: &str,
    language: &str,
    duration_s: f64,
    resp: &TranscribeResponse,
) -> std::result::Result<Transcript, String> {
    if resp.has_speech == resp.segments.is_empty() {
        return Err(format!(
            "has_speech={} but {} segments returned",
            resp.has_speech,
            resp.segments.len()
        ));
    }
    let mut segments = Vec::with_capacity(resp.segments.len());
    let mut prev_end = 0.0f64;
    for (i, s) in resp.segments.iter().enumerate() {
        if !(s.start.is_finite() && s.end.is_finite()) || s.start < 0.0 || s.start >= s.end {
            return Err(format!("segment {i}: invalid interval [{}, {})", s.start, s.end));
        }
        if s.start < prev_end {
            return Err(format!("segment {i} starts at {} before previous end {prev_end}", s.start));
        }
        if duration_s > 0.0 && s.end > duration_s + DURATION_SLACK_S {
            return Err(format!("segment {i} ends at {} past duration {duration_s}", s.end));
        }
        let text = s.text.trim();
        if text.is_empty() {
            return Err(format!("segment {i} has empty text"));
        }
        prev_end = s.end;
        segments.push(TranscriptSegment {
            seg_id: i as u32,
            start_s: s.start,
            end_s: s.end,
            text: text.to_string(),
        });
    }
    Ok(Transcript {
        video_id: video_id.to_string(),
        language: language.to_string(),
        has_speech: !segments.is_empty(),
        segments,
    })
}
