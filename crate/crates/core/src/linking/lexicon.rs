//! The aspect lexicon: surface forms grouped into canonical aspect groups.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::normalize::normalize_form;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AspectGroup {
    Arab,
    Gaza,
    Islam,
    Islamism,
    Israel,
    #[serde(rename = "Israeli_P")]
    IsraeliP,
    Jews,
    #[serde(rename = "Oppose_P")]
    OpposeP,
    Palestine,
    Zion,
}

impl AspectGroup {
    /// All ten groups in report order.
    pub const ALL: [AspectGroup; 10] = [
        AspectGroup::Arab,
        AspectGroup::Gaza,
        AspectGroup::Islam,
        AspectGroup::Islamism,
        AspectGroup::Israel,
        AspectGroup::IsraeliP,
        AspectGroup::Jews,
        AspectGroup::OpposeP,
        AspectGroup::Palestine,
        AspectGroup::Zion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AspectGroup::Arab => "Arab",
            AspectGroup::Gaza => "Gaza",
            AspectGroup::Islam => "Islam",
            AspectGroup::Islamism => "Islamism",
            AspectGroup::Israel => "Israel",
            AspectGroup::IsraeliP => "Israeli_P",
            AspectGroup::Jews => "Jews",
            AspectGroup::OpposeP => "Oppose_P",
            AspectGroup::Palestine => "Palestine",
            AspectGroup::Zion => "Zion",
        }
    }

    /// Row label used in report tables.
    pub fn display_label(self) -> &'static str {
        match self {
            AspectGroup::IsraeliP => "Israeli politicians",
            AspectGroup::OpposeP => "Opp. non-Israeli polit.",
            other => other.name(),
        }
    }
}

impl fmt::Display for AspectGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AspectGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        AspectGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown aspect group {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub normalized: String,
    pub group: AspectGroup,
}

/// Surface forms and the normalized index used for matching. Several
/// surface variants (`Netanyahu`, `Netanyahu's`) may share one normalized
/// key, but a key never belongs to two groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    index: HashMap<String, AspectGroup>,
    version: String,
}

const BUILTIN_TSV: &str = include_str!("../../data/lexicon.tsv");
pub const BUILTIN_VERSION: &str = "builtin-56";
pub const BUILTIN_FORM_COUNT: usize = 56;

/// Where to load a lexicon from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconSource<'a> {
    Builtin,
    File(&'a Path),
    /// The builtin lexicon with a file merged over it.
    BuiltinWith(&'a Path),
}

pub fn load_lexicon(source: LexiconSource<'_>) -> Result<Lexicon> {
    match source {
        LexiconSource::Builtin => Lexicon::builtin(),
        LexiconSource::File(p) => Lexicon::from_path(p),
        LexiconSource::BuiltinWith(p) => Lexicon::builtin()?.merge(&Lexicon::from_path(p)?),
    }
}

impl Lexicon {
    pub fn builtin() -> Result<Self> {
        let lex = Self::parse(BUILTIN_TSV, BUILTIN_VERSION)?;
        if lex.len() != BUILTIN_FORM_COUNT {
            return Err(Error::Validation(format!(
                "builtin lexicon has {} forms, expected {BUILTIN_FORM_COUNT}",
                lex.len()
            )));
        }
        Ok(lex)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let version = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("file")
            .to_string();
        Self::parse(&text, &version)
    }

    /// Accepts either the columnar layout (tab-separated, header row of group
    /// names, one surface form per cell) or `surface => Group` lines.
    /// Lines starting with `#` are comments.
    pub fn parse(text: &str, version: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        let pairs = match lines.first() {
            None => Vec::new(),
            Some(first) if first.contains("=>") => parse_pairs(&lines)?,
            Some(_) => parse_columns(&lines)?,
        };
        Self::from_pairs(pairs, version)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, AspectGroup)>, version: &str) -> Result<Self> {
        let mut lex = Lexicon {
            entries: Vec::new(),
            index: HashMap::new(),
            version: version.to_string(),
        };
        for (surface, group) in pairs {
            lex.insert(surface, group)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, surface: String, group: AspectGroup) -> Result<()> {
        let surface = surface.trim().to_string();
        if surface.is_empty() {
            return Ok(());
        }
        if let Some(existing) = self.entries.iter().find(|e| e.surface == surface) {
            if existing.group != group {
                return Err(Error::Validation(format!(
                    "surface form {surface:?} listed under both {} and {group}",
                    existing.group
                )));
            }
            return Ok(());
        }
        let normalized = normalize_form(&surface);
        if normalized.is_empty() {
            return Err(Error::Validation(format!("surface form {surface:?} normalizes to nothing")));
        }
        if let Some(&other) = self.index.get(&normalized) {
            if other != group {
                return Err(Error::Validation(format!(
                    "surface form {surface:?} (normalized {normalized:?}) maps to both {other} and {group}"
                )));
            }
        }
        self.index.insert(normalized.clone(), group);
        self.entries.push(LexiconEntry {
            surface,
            normalized,
            group,
        });
        Ok(())
    }

    /// Union of both lexicons; fails on any cross-group collision.
    pub fn merge(&self, other: &Lexicon) -> Result<Lexicon> {
        let mut merged = self.clone();
        merged.version = format!("{}+{}", self.version, other.version);
        for e in &other.entries {
            merged.insert(e.surface.clone(), e.group)?;
        }
        Ok(merged)
    }

    /// Number of surface forms.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    /// Group of an already-normalized form.
    pub fn lookup_normalized(&self, normalized: &str) -> Option<AspectGroup> {
        self.index.get(normalized).copied()
    }

    pub fn lookup(&self, raw: &str) -> Option<AspectGroup> {
        self.lookup_normalized(&normalize_form(raw))
    }

    /// Surface-form count for every group, including empty ones.
    pub fn group_counts(&self) -> BTreeMap<AspectGroup, usize> {
        let mut counts: BTreeMap<AspectGroup, usize> = AspectGroup::ALL.iter().map(|g| (*g, 0)).collect();
        for e in &self.entries {
            *counts.entry(e.group).or_default() += 1;
        }
        counts
    }

    pub fn populated_groups(&self) -> usize {
        self.group_counts().values().filter(|&&n| n > 0).count()
    }
}

fn parse_pairs(lines: &[&str]) -> Result<Vec<(String, AspectGroup)>> {
    lines
        .iter()
        .map(|line| {
            let (surface, group) = line
                .split_once("=>")
                .ok_or_else(|| Error::Validation(format!("expected `surface => Group`, got {line:?}")))?;
            Ok((surface.trim().to_string(), group.parse()?))
        })
        .collect()
}

fn parse_columns(lines: &[&str]) -> Result<Vec<(String, AspectGroup)>> {
    let header: Vec<AspectGroup> = lines[0]
        .split('\t')
        .map(str::parse)
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() > header.len() {
            return Err(Error::Validation(format!(
                "row has {} cells but the header names {} groups: {line:?}",
                cells.len(),
                header.len()
            )));
        }
        for (cell, group) in cells.iter().zip(&header) {
            if !cell.trim().is_empty() {
                pairs.push((cell.trim().to_string(), *group));
            }
        }
    }
    Ok(pairs)
}
