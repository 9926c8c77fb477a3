//! Aspect linking: lexicon matching over transcript sentences, dependency
//! parses of the matched sentences, and extraction of dependency-anchored
//! aspect rows.

pub mod conllu;
pub mod lexicon;
mod normalize;
pub mod rows;
pub mod segmentation;

use serde::{Deserialize, Serialize};

pub use conllu::{parse_conllu, serialize_conllu, ParsedSentence, ParsedToken, RejectedSentence};
pub use lexicon::{load_lexicon, AspectGroup, Lexicon, LexiconSource};
pub use normalize::normalize_form;
pub use rows::{extract_rows, match_sentence, AspectMatch, AspectRow, DependencyTriple, RowMeta, ROOT_HEAD};
pub use segmentation::{segment_sentences, TranscriptSentence};

use crate::backend::{BackendClient, BackendError, Route};
use crate::error::Result;
use crate::exec::Execution;
use crate::transcripts::Transcript;

/// Sentences of a transcript with at least one lexicon hit on a plain
/// whitespace tokenization. Only these are sent to the parser.
pub fn candidate_sentences(transcript: &Transcript, lexicon: &Lexicon) -> Vec<TranscriptSentence> {
    segment_sentences(transcript)
        .into_iter()
        .filter(|s| s.text.split_whitespace().any(|w| lexicon.lookup(w).is_some()))
        .collect()
}

/// [`candidate_sentences`] over many transcripts, flattened in input order.
pub fn candidate_sentences_batch(
    transcripts: &[Transcript],
    lexicon: &Lexicon,
    exec: Execution,
) -> Vec<TranscriptSentence> {
    exec.map(transcripts, |t| candidate_sentences(t, lexicon))
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedParse {
    pub video_id: String,
    pub seg_group_id: u32,
    pub sent_ix: u32,
    pub sentence: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub candidates: usize,
    pub rows: Vec<AspectRow>,
    pub rejected: Vec<RejectedParse>,
}

/// Rows for every candidate sentence whose parse is a valid tree.
/// Non-tree parses are reported in `rejected`, never dropped silently.
pub fn rows_from_parses(candidates: &[TranscriptSentence], conllu_text: &str, lexicon: &Lexicon) -> Result<LinkOutcome> {
    let parses = parse_conllu(conllu_text)?;
    if parses.len() != candidates.len() {
        return Err(BackendError::contract(
            Route::Parse,
            format!("sent {} sentences, parser returned {}", candidates.len(), parses.len()),
            conllu_text,
        )
        .into());
    }
    let mut outcome = LinkOutcome {
        candidates: candidates.len(),
        ..Default::default()
    };
    for (sentence, parse) in candidates.iter().zip(parses) {
        match parse {
            Ok(parsed) => {
                let matches = match_sentence(&parsed.forms(), lexicon);
                let meta = RowMeta {
                    video_id: sentence.video_id.clone(),
                    seg_group_id: sentence.seg_group_id,
                    seg_ids: sentence.seg_ids.clone(),
                    start_s: sentence.start_s,
                    end_s: sentence.end_s,
                    sent_ix: sentence.sent_ix,
                    sentence: sentence.text.clone(),
                };
                outcome.rows.extend(extract_rows(&parsed, &matches, &meta)?);
            }
            Err(rejected) => {
                log::warn!(
                    "{}: parse of group {} sentence {} rejected: {}",
                    sentence.video_id,
                    sentence.seg_group_id,
                    sentence.sent_ix,
                    rejected.reason
                );
                outcome.rejected.push(RejectedParse {
                    video_id: sentence.video_id.clone(),
                    seg_group_id: sentence.seg_group_id,
                    sent_ix: sentence.sent_ix,
                    sentence: sentence.text.clone(),
                    reason: rejected.reason,
                });
            }
        }
    }
    Ok(outcome)
}

/// Segment, filter, parse through the backend, and extract rows for one
/// transcript.
pub fn link_transcript(client: &BackendClient, transcript: &Transcript, lexicon: &Lexicon) -> Result<LinkOutcome> {
    let candidates = candidate_sentences(transcript, lexicon);
    if candidates.is_empty() {
        return Ok(LinkOutcome::default());
    }
    let texts: Vec<String> = candidates.iter().map(|s| s.text.clone()).collect();
    let conllu_text = client.parse(&texts)?;
    rows_from_parses(&candidates, &conllu_text, lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::StubScript;
    use crate::transcripts::TranscriptSegment;

    fn transcript(texts: &[&str]) -> Transcript {
        Transcript {
            video_id: "vid".into(),
            language: "en".into(),
            has_speech: true,
            segments: texts
                .iter()
                .enumerate()
                .map(|(i, t)| TranscriptSegment {
                    seg_id: i as u32,
                    start_s: i as f64,
                    end_s: i as f64 + 1.0,
                    text: t.to_string(),
                })
                .collect(),
        }
    }

    #[test]
    fn only_matching_sentences_are_candidates() {
        let lex = Lexicon::builtin().unwrap();
        let t = transcript(&["The weather is nice.", "Netanyahu's cabinet met.", "Nothing here."]);
        let c = candidate_sentences(&t, &lex);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].seg_group_id, 1);
    }

    #[test]
    fn batch_candidates_agree_across_modes() {
        let lex = Lexicon::builtin().unwrap();
        let ts: Vec<Transcript> = (0..20)
            .map(|_| transcript(&["Hamas and Israel.", "Rain.", "Gaza and Arabs."]))
            .collect();
        let seq = candidate_sentences_batch(&ts, &lex, Execution::Sequential);
        let par = candidate_sentences_batch(&ts, &lex, Execution::parallel());
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 40);
    }

    #[test]
    fn link_through_stub_parser() {
        let lex = Lexicon::builtin().unwrap();
        let client = BackendClient::stub(StubScript::default());
        let t = transcript(&["Netanyahu wants the Israeli regime to survive."]);
        let out = link_transcript(&client, &t, &lex).unwrap();
        assert_eq!(out.candidates, 1);
        assert_eq!(out.rows.len(), 2);
        assert!(out.rejected.is_empty());
        assert_eq!(out.rows[0].triple.aspect_form, "netanyahu");
        assert_eq!(out.rows[0].triple.head_form, "wants");
        assert_eq!(out.rows[0].triple.deprel, "nsubj");
    }

    #[test]
    fn sentence_count_mismatch_is_a_contract_violation() {
        let lex = Lexicon::builtin().unwrap();
        let t = transcript(&["Israel.", "Hamas."]);
        let c = candidate_sentences(&t, &lex);
        let one = "1\tIsrael\tisrael\tX\t_\t_\t0\troot\t_\t_\n\n";
        assert!(rows_from_parses(&c, one, &lex).is_err());
    }
}
