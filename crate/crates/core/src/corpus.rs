//! Corpus manifest, per-video metadata, the on-disk store and descriptive
//! corpus statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::percent::Percent1;

/// A publishing outlet. Identity is the short code; the display name is
/// presentation only.
#[derive(Debug, Clone)]
pub struct OutletId {
    code: String,
    display_name: String,
}

const KNOWN_OUTLETS: [(&str, &str); 4] = [
    ("AJ", "Al Jazeera"),
    ("BBC", "BBC"),
    ("DW", "Deutsche Welle"),
    ("TRT", "TRT World"),
];

impl OutletId {
    pub fn new(code: &str) -> Result<Self> {
        let code = code.trim();
        if code.is_empty() {
            return Err(Error::Validation("outlet code must be non-empty".into()));
        }
        let display_name = KNOWN_OUTLETS
            .iter()
            .find(|(c, _)| *c == code)
            .map(|(_, n)| n.to_string())
            .unwrap_or_else(|| code.to_string());
        Ok(OutletId {
            code: code.to_string(),
            display_name,
        })
    }

    pub fn with_display_name(code: &str, display_name: &str) -> Result<Self> {
        let mut id = Self::new(code)?;
        id.display_name = display_name.to_string();
        Ok(id)
    }

    pub fn known() -> Vec<OutletId> {
        KNOWN_OUTLETS
            .iter()
            .map(|(c, _)| OutletId::new(c).expect("known codes are non-empty"))
            .collect()
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }
}

impl PartialEq for OutletId {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}
impl Eq for OutletId {}
impl std::hash::Hash for OutletId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.code.hash(state)
    }
}
impl PartialOrd for OutletId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OutletId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.code.cmp(&other.code)
    }
}

impl fmt::Display for OutletId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

impl Serialize for OutletId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.code)
    }
}

impl<'de> Deserialize<'de> for OutletId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        OutletId::new(&code).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageStatus {
    English,
    NonEnglish,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub outlet: OutletId,
    pub title: String,
    /// Calendar day of upload, UTC.
    pub upload_date: NaiveDate,
    pub view_count: u64,
    /// When `view_count` was read from the platform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub views_snapshot_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub duration_s: f64,
    #[serde(default)]
    pub source_url: String,
    /// `None` until the language probe has run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_status: Option<LanguageStatus>,
    /// `None` until transcription has run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_speech: Option<bool>,
}

impl VideoRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.video_id.trim().is_empty() {
            return Err("video_id must be non-empty".into());
        }
        if !self.duration_s.is_finite() || self.duration_s < 0.0 {
            return Err(format!("duration_s must be a non-negative number, got {}", self.duration_s));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ManifestLine {
    video_id: String,
    #[serde(default)]
    outlet: Option<String>,
    title: String,
    #[serde(deserialize_with = "de_upload_date")]
    upload_date: NaiveDate,
    view_count: u64,
    #[serde(default)]
    views_snapshot_at: Option<DateTime<Utc>>,
    #[serde(default)]
    duration_s: f64,
    #[serde(default)]
    source_url: String,
    #[serde(default)]
    language_status: Option<LanguageStatus>,
    #[serde(default)]
    has_speech: Option<bool>,
}

/// Accepts a bare ISO date or a full RFC 3339 timestamp (reduced to its UTC day).
fn de_upload_date<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    let s = String::deserialize(d)?;
    if let Ok(date) = NaiveDate::parse_from_str(&s, "%Y-%m-%d") {
        return Ok(date);
    }
    DateTime::parse_from_rfc3339(&s)
        .map(|dt| dt.with_timezone(&Utc).date_naive())
        .map_err(|_| serde::de::Error::custom(format!("upload_date is not an ISO-8601 date: {s:?}")))
}

/// Parse and validate a line-delimited manifest for one outlet. Blank lines
/// are ignored. Duplicate ids within the file are a conflict.
pub fn read_manifest(path: &Path, outlet: &OutletId) -> Result<Vec<VideoRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashMap::new();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            message,
        };
        let raw: ManifestLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if let Some(code) = raw.outlet.as_deref() {
            if code != outlet.code() {
                return Err(parse_err(format!("outlet {code:?} does not match import outlet {outlet}")));
            }
        }
        let record = VideoRecord {
            video_id: raw.video_id,
            outlet: outlet.clone(),
            title: raw.title,
            upload_date: raw.upload_date,
            view_count: raw.view_count,
            views_snapshot_at: raw.views_snapshot_at,
            duration_s: raw.duration_s,
            source_url: raw.source_url,
            language_status: raw.language_status,
            has_speech: raw.has_speech,
        };
        record.validate().map_err(parse_err)?;
        if let Some(first) = seen.insert(record.video_id.clone(), lineno) {
            return Err(Error::Conflict(format!(
                "{}:{lineno}: video_id {:?} already appears on line {first}",
                path.display(),
                record.video_id
            )));
        }
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStatsRow {
    pub video_count: u64,
    pub spoken_count: u64,
    pub spoken_pct: Percent1,
    pub no_speech_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub rows: BTreeMap<OutletId, CorpusStatsRow>,
}

impl CorpusStats {
    pub fn total_videos(&self) -> u64 {
        self.rows.values().map(|r| r.video_count).sum()
    }
}

/// Per-outlet video, spoken and no-speech counts. Every record must have
/// `has_speech` resolved.
pub fn compute_corpus_stats(records: &[VideoRecord]) -> Result<CorpusStats> {
    let unresolved: Vec<String> = records
        .iter()
        .filter(|r| r.has_speech.is_none())
        .map(|r| r.video_id.clone())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::IncompleteInput {
            what: "has_speech unresolved".into(),
            ids: unresolved,
        });
    }
    let mut counts: BTreeMap<OutletId, (u64, u64)> = BTreeMap::new();
    for r in records {
        let entry = counts.entry(r.outlet.clone()).or_default();
        entry.0 += 1;
        if r.has_speech == Some(true) {
            entry.1 += 1;
        }
    }
    let rows = counts
        .into_iter()
        .map(|(outlet, (videos, spoken))| {
            (
                outlet,
                CorpusStatsRow {
                    video_count: videos,
                    spoken_count: spoken,
                    spoken_pct: Percent1::of(spoken, videos),
                    no_speech_count: videos - spoken,
                },
            )
        })
        .collect();
    Ok(CorpusStats { rows })
}

/// Keep the English records for text-side processing. Every record must have a
/// definite language status.
pub fn filter_text_corpus(records: &[VideoRecord]) -> Result<Vec<VideoRecord>> {
    let unresolved: Vec<String> = records
        .iter()
        .filter(|r| matches!(r.language_status, None | Some(LanguageStatus::Undetermined)))
        .map(|r| r.video_id.clone())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::IncompleteInput {
            what: "language status undetermined".into(),
            ids: unresolved,
        });
    }
    let kept: Vec<VideoRecord> = records
        .iter()
        .filter(|r| r.language_status == Some(LanguageStatus::English))
        .cloned()
        .collect();
    log::info!("text corpus: kept {} of {} records", kept.len(), records.len());
    Ok(kept)
}

/// A store directory: `manifest.<outlet>.jsonl` files plus whatever the
/// pipeline stages write under it.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

pub const LOCK_FILE: &str = "store.lock";

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest_path(&self, outlet: &OutletId) -> PathBuf {
        self.root.join(format!("manifest.{}.jsonl", outlet.code()))
    }

    /// Take the single-writer lock. Fails if another writer holds it.
    pub fn writer(&self) -> Result<StoreWriter<'_>> {
        let lock = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(StoreWriter { store: self, lock })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(self.root.clone())),
            Err(e) => Err(Error::io(&lock, e)),
        }
    }

    /// All persisted records, ordered by outlet code then manifest order.
    pub fn load_manifest(&self) -> Result<Vec<VideoRecord>> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.root)
            .map_err(|e| Error::io(&self.root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("manifest.") && n.ends_with(".jsonl"))
            })
            .collect();
        files.sort();
        let mut out = Vec::new();
        for path in files {
            out.extend(read_jsonl::<VideoRecord>(&path)?);
        }
        Ok(out)
    }
}

/// Holds `store.lock` for its lifetime.
#[derive(Debug)]
pub struct StoreWriter<'a> {
    store: &'a Store,
    lock: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ImportReport {
    pub read: usize,
    pub added: usize,
    pub already_present: usize,
}

impl StoreWriter<'_> {
    pub fn store(&self) -> &Store {
        self.store
    }

    /// Read a manifest and append its new records to the store. Records
    /// already present with identical content are skipped; the same id with
    /// different content is a conflict.
    pub fn import_manifest(&self, path: &Path, outlet: &OutletId) -> Result<(Vec<VideoRecord>, ImportReport)> {
        let records = read_manifest(path, outlet)?;
        let existing: HashMap<String, VideoRecord> = self
            .store
            .load_manifest()?
            .into_iter()
            .map(|r| (r.video_id.clone(), r))
            .collect();
        let mut fresh = Vec::new();
        let mut report = ImportReport {
            read: records.len(),
            ..Default::default()
        };
        for r in &records {
            match existing.get(&r.video_id) {
                Some(old) if old == r => report.already_present += 1,
                Some(old) => {
                    return Err(Error::Conflict(format!(
                        "video_id {:?} already stored (outlet {}) with different content",
                        r.video_id, old.outlet
                    )))
                }
                None => fresh.push(r),
            }
        }
        report.added = fresh.len();
        if !fresh.is_empty() {
            let target = self.store.manifest_path(outlet);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&target)
                .map_err(|e| Error::io(&target, e))?;
            let mut buf = Vec::new();
            for r in fresh {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            f.write_all(&buf).map_err(|e| Error::io(&target, e))?;
            f.sync_all().map_err(|e| Error::io(&target, e))?;
        }
        Ok((records, report))
    }

    /// Write a file atomically (temp file + rename) relative to the store root.
    pub fn write_atomic(&self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        write_atomic(&self.store.path(rel), bytes)
    }
}

impl Drop for StoreWriter<'_> {
    fn drop(&mut self) {
        if let Err(e) = fs::remove_file(&self.lock) {
            log::warn!("could not remove {}: {e}", self.lock.display());
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str) -> String {
        format!(
            r#"{{"video_id":"{id}","outlet":"AJ","title":"t","upload_date":"2023-11-02","view_count":10,"duration_s":12.5,"source_url":"https://example.org/{id}"}}"#
        )
    }

    fn write(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, lines.join("\n")).unwrap();
        p
    }

    fn aj() -> OutletId {
        OutletId::new("AJ").unwrap()
    }

    #[test]
    fn empty_manifest_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.jsonl", &[]);
        assert!(read_manifest(&p, &aj()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_conflicts_on_second_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.jsonl", &[line("abc"), line("abc")]);
        match read_manifest(&p, &aj()) {
            Err(Error::Conflict(msg)) => assert!(msg.contains(":2:"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_line_names_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.jsonl", &[line("a"), r#"{"video_id":"b"}"#.into()]);
        match read_manifest(&p, &aj()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let p = write(
            dir.path(),
            "neg.jsonl",
            &[r#"{"video_id":"b","title":"t","upload_date":"2024-01-01","view_count":-3}"#.into()],
        );
        assert!(matches!(read_manifest(&p, &aj()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn outlet_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.jsonl", &[line("a")]);
        assert!(read_manifest(&p, &OutletId::new("BBC").unwrap()).is_err());
    }

    #[test]
    fn timestamps_reduce_to_utc_day() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.jsonl",
            &[r#"{"video_id":"b","title":"t","upload_date":"2024-01-31T23:30:00-02:00","view_count":3}"#.into()],
        );
        let r = read_manifest(&p, &aj()).unwrap();
        assert_eq!(r[0].upload_date, NaiveDate::from_ymd_opt(2024, 2, 1).unwrap());
    }

    #[test]
    fn reimport_is_idempotent_and_changes_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path().join("store")).unwrap();
        let p = write(dir.path(), "m.jsonl", &[line("a"), line("b")]);
        {
            let w = store.writer().unwrap();
            let (_, rep) = w.import_manifest(&p, &aj()).unwrap();
            assert_eq!(rep.added, 2);
            let (_, rep) = w.import_manifest(&p, &aj()).unwrap();
            assert_eq!((rep.added, rep.already_present), (0, 2));
        }
        assert_eq!(store.load_manifest().unwrap().len(), 2);
        let changed = write(dir.path(), "m2.jsonl", &[line("a").replace("\"t\"", "\"other\"")]);
        let w = store.writer().unwrap();
        assert!(matches!(w.import_manifest(&changed, &aj()), Err(Error::Conflict(_))));
    }

    #[test]
    fn single_writer_lock() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let w = store.writer().unwrap();
        assert!(matches!(store.writer(), Err(Error::Locked(_))));
        drop(w);
        assert!(store.writer().is_ok());
    }

    #[test]
    fn stats_require_resolved_speech_flags() {
        let mut r: VideoRecord = serde_json::from_str(&line("x")).unwrap();
        r.has_speech = None;
        match compute_corpus_stats(&[r]) {
            Err(Error::IncompleteInput { ids, .. }) => assert_eq!(ids, vec!["x".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn filter_rejects_undetermined() {
        let mut r: VideoRecord = serde_json::from_str(&line("x")).unwrap();
        r.language_status = Some(LanguageStatus::Undetermined);
        assert!(matches!(filter_text_corpus(&[r]), Err(Error::IncompleteInput { .. })));
    }

    #[test]
    fn record_roundtrips_through_manifest_format() {
        let r: VideoRecord = serde_json::from_str(&line("x")).unwrap();
        let back: VideoRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
        assert_eq!(r.outlet.display_name(), "Al Jazeera");
    }
}
