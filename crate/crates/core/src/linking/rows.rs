use serde::{Deserialize, Serialize};

use super::conllu::ParsedSentence;
use super::lexicon::{AspectGroup, Lexicon};
use super::normalize::normalize_form;
use crate::error::{Error, Result};

/// Head form used when the aspect token is the root of its sentence.
pub const ROOT_HEAD: &str = "<root>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMatch {
    /// 0-based position in the token list that was matched.
    pub token_index: usize,
    pub surface: String,
    pub group: AspectGroup,
}

/// One match per token whose normalized form is a lexicon key. No fuzzy or
/// lemma-based matching.
pub fn match_sentence<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<AspectMatch> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(i, tok)| {
            let surface = tok.as_ref();
            lexicon.lookup(surface).map(|group| AspectMatch {
                token_index: i,
                surface: surface.to_string(),
                group,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyTriple {
    pub aspect_form: String,
    pub head_form: String,
    pub deprel: String,
}

/// Transcript coordinates of the sentence the rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub video_id: String,
    pub seg_group_id: u32,
    pub seg_ids: Vec<u32>,
    pub start_s: f64,
    pub end_s: f64,
    pub sent_ix: u32,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectRow {
    pub triple: DependencyTriple,
    pub group: AspectGroup,
    pub video_id: String,
    pub seg_group_id: u32,
    pub seg_ids: Vec<u32>,
    pub start_s: f64,
    pub end_s: f64,
    pub sent_ix: u32,
    /// 0-based token position of the aspect in the parsed sentence.
    pub token_index: usize,
    pub aspect_surface: String,
    pub sentence: String,
}

impl AspectRow {
    /// Stable identity of the row within the corpus.
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.video_id, self.seg_group_id, self.sent_ix, self.token_index
        )
    }
}

pub fn extract_rows(parsed: &ParsedSentence, matches: &[AspectMatch], meta: &RowMeta) -> Result<Vec<AspectRow>> {
    if meta.seg_ids.is_empty() || meta.seg_ids.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Integrity(format!(
            "{}: seg_ids must be non-empty and contiguous, got {:?}",
            meta.video_id, meta.seg_ids
        )));
    }
    matches
        .iter()
        .map(|m| {
            let token = parsed.tokens.get(m.token_index).ok_or_else(|| {
                Error::Integrity(format!(
                    "{}: match index {} outside a {}-token sentence",
                    meta.video_id,
                    m.token_index,
                    parsed.tokens.len()
                ))
            })?;
            let head_form = match token.head_index {
                0 => ROOT_HEAD.to_string(),
                h => {
                    let head = parsed.tokens.get(h as usize - 1).ok_or_else(|| {
                        Error::Integrity(format!("{}: head {h} outside the sentence", meta.video_id))
                    })?;
                    normalize_form(&head.form)
                }
            };
            Ok(AspectRow {
                triple: DependencyTriple {
                    aspect_form: normalize_form(&token.form),
                    head_form,
                    deprel: token.deprel.clone(),
                },
                group: m.group,
                video_id: meta.video_id.clone(),
                seg_group_id: meta.seg_group_id,
                seg_ids: meta.seg_ids.clone(),
                start_s: meta.start_s,
                end_s: meta.end_s,
                sent_ix: meta.sent_ix,
                token_index: m.token_index,
                aspect_surface: m.surface.clone(),
                sentence: meta.sentence.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linking::conllu::parse_conllu;

    fn lex() -> Lexicon {
        Lexicon::builtin().unwrap()
    }

    fn meta() -> RowMeta {
        RowMeta {
            video_id: "v".into(),
            seg_group_id: 0,
            seg_ids: vec![3, 4],
            start_s: 1.0,
            end_s: 5.0,
            sent_ix: 0,
            sentence: "s".into(),
        }
    }

    #[test]
    fn matches() {
        let toks: Vec<&str> = "Netanyahu wants the Israeli regime to survive".split(' ').collect();
        let m = match_sentence(&toks, &lex());
        assert_eq!(
            m.iter().map(|m| (m.token_index, m.group)).collect::<Vec<_>>(),
            vec![(0, AspectGroup::IsraeliP), (3, AspectGroup::Israel)]
        );
        assert!(match_sentence(&["The", "weather", "is", "nice"], &lex()).is_empty());
        let m = match_sentence(&["Hamas", "praised", "Hezbollah"], &lex());
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|m| m.group == AspectGroup::Islamism));
        // no fuzzy matching
        assert!(match_sentence(&["Israelites", "Hamass"], &lex()).is_empty());
    }

    #[test]
    fn root_aspect_gets_root_head() {
        let parsed = parse_conllu("1\tIsrael\tIsrael\tPROPN\t_\t_\t0\troot\t_\t_\n2\t!\t!\tPUNCT\t_\t_\t1\tpunct\t_\t_\n")
            .unwrap()
            .remove(0)
            .unwrap();
        let m = match_sentence(&parsed.forms(), &lex());
        let rows = extract_rows(&parsed, &m, &meta()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].triple.head_form, ROOT_HEAD);
        assert_eq!(rows[0].triple.deprel, "root");
    }

    #[test]
    fn out_of_range_match_is_an_integrity_error() {
        let parsed = parse_conllu("1\tIsrael\tIsrael\tPROPN\t_\t_\t0\troot\t_\t_\n")
            .unwrap()
            .remove(0)
            .unwrap();
        let bogus = AspectMatch {
            token_index: 5,
            surface: "Israel".into(),
            group: AspectGroup::Israel,
        };
        assert!(matches!(extract_rows(&parsed, &[bogus], &meta()), Err(Error::Integrity(_))));
        let mut gap = meta();
        gap.seg_ids = vec![1, 3];
        assert!(extract_rows(&parsed, &[], &gap).is_err());
    }
}
