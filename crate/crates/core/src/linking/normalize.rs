use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

const POSSESSIVES: [&str; 3] = ["'s", "\u{2019}s", "\u{02bc}s"];

/// Canonical form for lexicon lookup: NFC, lower-cased, with leading and
/// trailing punctuation and possessive suffixes removed. Plurals are left
/// alone; the lexicon lists them explicitly.
pub fn normalize_form(raw: &str) -> String {
    let mut s: String = raw.nfc().flat_map(char::to_lowercase).collect::<String>().nfc().collect();
    loop {
        let before = s.len();
        s = trim_punct(&s).to_string();
        for suffix in POSSESSIVES {
            if let Some(stem) = s.strip_suffix(suffix) {
                if !stem.is_empty() {
                    s = stem.to_string();
                    break;
                }
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn trim_punct(s: &str) -> &str {
    s.trim_matches(|c: char| !is_word_char(c))
}
