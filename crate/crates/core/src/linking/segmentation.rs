//! Transcript segments → segment groups → sentences.
//!
//! Consecutive segments accumulate into a group until a segment ends with
//! terminal punctuation; the group's joined text is then split into
//! sentences at terminal punctuation. `seg_group_id` counts groups within a
//! video and `sent_ix` counts sentences within a group.

use serde::{Deserialize, Serialize};

use crate::transcripts::Transcript;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSentence {
    pub video_id: String,
    pub seg_group_id: u32,
    pub sent_ix: u32,
    pub text: String,
    pub seg_ids: Vec<u32>,
    pub start_s: f64,
    pub end_s: f64,
}

const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "st", "prof", "gen", "sen", "rep", "vs", "etc", "jr", "sr"];

/// Whether a whitespace-delimited word closes a sentence.
pub fn ends_sentence(word: &str) -> bool {
    let core = word.trim_end_matches(['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '}']);
    let Some(last) = core.chars().last() else {
        return false;
    };
    match last {
        '!' | '?' => true,
        '.' => {
            let stem = core.trim_end_matches('.');
            // acronyms like "U.S." and common titles do not close a sentence
            !(stem.contains('.') || ABBREVIATIONS.contains(&stem.to_lowercase().as_str()))
        }
        _ => false,
    }
}

pub fn segment_sentences(transcript: &Transcript) -> Vec<TranscriptSentence> {
    let mut out = Vec::new();
    let mut group: Vec<usize> = Vec::new();
    let mut group_id = 0u32;
    let segs = &transcript.segments;
    for (i, seg) in segs.iter().enumerate() {
        group.push(i);
        let closes = seg.text.split_whitespace().last().is_some_and(ends_sentence);
        if closes || i + 1 == segs.len() {
            split_group(transcript, &group, group_id, &mut out);
            group.clear();
            group_id += 1;
        }
    }
    out
}

fn split_group(transcript: &Transcript, members: &[usize], group_id: u32, out: &mut Vec<TranscriptSentence>) {
    // joined text plus the byte range each segment occupies in it
    let mut joined = String::new();
    let mut ranges = Vec::with_capacity(members.len());
    for &m in members {
        if !joined.is_empty() {
            joined.push(' ');
        }
        let start = joined.len();
        joined.push_str(transcript.segments[m].text.trim());
        ranges.push((m, start, joined.len()));
    }
    let mut words = Vec::new();
    let mut offset = 0;
    for word in joined.split_whitespace() {
        let start = offset + joined[offset..].find(word).expect("word comes from this text");
        words.push((start, start + word.len(), word));
        offset = start + word.len();
    }
    let mut sent_ix = 0u32;
    let mut first = 0usize;
    for (w, &(_, end, word)) in words.iter().enumerate() {
        if ends_sentence(word) || w + 1 == words.len() {
            let start = words[first].0;
            let text = joined[start..end].to_string();
            let contributing: Vec<usize> = ranges
                .iter()
                .filter(|(_, s, e)| *s < end && start < *e)
                .map(|(m, _, _)| *m)
                .collect();
            let segs = &transcript.segments;
            out.push(TranscriptSentence {
                video_id: transcript.video_id.clone(),
                seg_group_id: group_id,
                sent_ix,
                text,
                seg_ids: contributing.iter().map(|&m| segs[m].seg_id).collect(),
                start_s: contributing.iter().map(|&m| segs[m].start_s).fold(f64::INFINITY, f64::min),
                end_s: contributing.iter().map(|&m| segs[m].end_s).fold(f64::NEG_INFINITY, f64::max),
            });
            sent_ix += 1;
            first = w + 1;
        }
    }
}
