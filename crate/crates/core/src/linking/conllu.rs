//! CoNLL-U reading and writing.
//!
//! Format violations (wrong column count, unparseable IDs) abort the whole
//! parse with the offending line number. Structural problems inside one
//! sentence (no root, several roots, a cycle, a head out of range) reject
//! only that sentence; the caller gets it back as a [`RejectedSentence`] at
//! its original position so that sentence order is never lost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    /// 1-based position in the sentence.
    pub index: u32,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 0 for the root.
    pub head_index: u32,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
    pub tokens: Vec<ParsedToken>,
}

impl ParsedSentence {
    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Value of a `key = value` comment, e.g. `sent_id`.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    /// Tree check: contiguous ids, heads in range, one root, no cycles.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".into());
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index as usize != i + 1 {
                return Err(format!("token ids not contiguous: expected {}, found {}", i + 1, t.index));
            }
            if t.head_index as usize > n {
                return Err(format!("token {} has head {} outside 0..={n}", t.index, t.head_index));
            }
            if t.head_index == t.index {
                return Err(format!("token {} is its own head", t.index));
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head_index == 0).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        for t in &self.tokens {
            let mut cur = t.head_index as usize;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {}", t.index));
                }
                cur = self.tokens[cur - 1].head_index as usize;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedSentence {
    /// Line where the sentence block starts (1-based).
    pub line: usize,
    pub comments: Vec<String>,
    pub reason: String,
}

pub type SentenceParse = std::result::Result<ParsedSentence, RejectedSentence>;

pub fn parse_conllu(text: &str) -> Result<Vec<SentenceParse>> {
    let mut out = Vec::new();
    let mut block = Block::default();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            block.finish(&mut out);
            continue;
        }
        if block.start == 0 {
            block.start = lineno;
        }
        if let Some(comment) = line.strip_prefix('#') {
            block
                .comments
                .push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                path: "<conllu>".into(),
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            // multiword token range or empty node
            continue;
        }
        let index: u32 = id.parse().map_err(|_| Error::Parse {
            path: "<conllu>".into(),
            line: lineno,
            message: format!("invalid token id {id:?}"),
        })?;
        let head_index = match cols[6].parse::<u32>() {
            Ok(h) => h,
            Err(_) => {
                block.defect.get_or_insert(format!("line {lineno}: invalid head {:?}", cols[6]));
                0
            }
        };
        block.tokens.push(ParsedToken {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            head_index,
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        });
    }
    block.finish(&mut out);
    Ok(out)
}

#[derive(Default)]
struct Block {
    start: usize,
    comments: Vec<String>,
    tokens: Vec<ParsedToken>,
    defect: Option<String>,
}

impl Block {
    fn finish(&mut self, out: &mut Vec<SentenceParse>) {
        let block = std::mem::take(self);
        if block.tokens.is_empty() {
            // comment-only blocks carry no sentence
            return;
        }
        let sentence = ParsedSentence {
            comments: block.comments,
            tokens: block.tokens,
        };
        let verdict = match block.defect {
            Some(d) => Err(d),
            None => sentence.validate(),
        };
        out.push(match verdict {
            Ok(()) => Ok(sentence),
            Err(reason) => Err(RejectedSentence {
                line: block.start,
                comments: sentence.comments,
                reason,
            }),
        });
    }
}

pub fn serialize_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for c in &s.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        for t in &s.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                t.index, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head_index, t.deprel, t.deps, t.misc
            ));
        }
        out.push('\n');
    }
    out
}
