//! Held-out manual evaluation of scene labels.
//!
//! A seeded sample of labeled frames is written to an annotation sheet (CSV
//! with locked prediction columns and one free `verdict` column) plus a lock
//! file recording the seed, the population hash and a digest of the locked
//! columns. Scoring refuses sheets whose locked columns were edited.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::write_atomic;
use crate::error::{Error, Result};
use crate::percent::Percent1;
use crate::sampling::{SeededRng, PRNG_NAME};
use crate::scenes::{SceneLabel, SceneType};

pub const SHEET_HEADER: [&str; 5] = ["video_id", "frame_id", "predicted_type", "image_path", "verdict"];

/// One labeled frame eligible for evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub video_id: String,
    pub frame_id: u32,
    pub predicted_type: SceneType,
    pub image_path: String,
}

impl LabeledFrame {
    pub fn from_label(label: &SceneLabel, image_path: impl Into<String>) -> Self {
        LabeledFrame {
            video_id: label.video_id.clone(),
            frame_id: label.frame_id,
            predicted_type: label.scene_type,
            image_path: image_path.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSample {
    pub seed: u64,
    pub n: usize,
    pub population_size: usize,
    pub population_hash: String,
    pub items: Vec<LabeledFrame>,
}

/// Hash of the population in canonical (video_id, frame_id) order.
pub fn population_hash(sorted: &[LabeledFrame]) -> String {
    let mut h = Sha256::new();
    for f in sorted {
        h.update(format!("{}\t{}\t{}\n", f.video_id, f.frame_id, f.predicted_type).as_bytes());
    }
    hex::encode(h.finalize())
}

/// Uniform sample of `n` frames without replacement. The population is put
/// in canonical order first, so the sample depends only on its contents and
/// the seed.
pub fn sample_heldout(population: &[LabeledFrame], n: usize, seed: u64) -> Result<EvalSample> {
    if n > population.len() {
        return Err(Error::Precondition(format!(
            "cannot sample {n} frames from a population of {}",
            population.len()
        )));
    }
    let mut sorted = population.to_vec();
    sorted.sort();
    sorted.dedup_by(|a, b| a.video_id == b.video_id && a.frame_id == b.frame_id);
    if sorted.len() != population.len() {
        return Err(Error::Validation("population contains duplicate frames".into()));
    }
    let picks = SeededRng::new(seed).sample_indices(sorted.len(), n);
    Ok(EvalSample {
        seed,
        n,
        population_size: sorted.len(),
        population_hash: population_hash(&sorted),
        items: picks.into_iter().map(|i| sorted[i].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetLock {
    pub prng: String,
    pub seed: u64,
    pub n: usize,
    pub population_size: usize,
    pub population_hash: String,
    /// sha256 over the locked columns of every row, in sheet order.
    pub locked_digest: String,
}

fn locked_digest<'a>(rows: impl Iterator<Item = &'a LabeledFrame>) -> String {
    let mut h = Sha256::new();
    for f in rows {
        h.update(format!("{}\t{}\t{}\t{}\n", f.video_id, f.frame_id, f.predicted_type, f.image_path).as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn lock_path(sheet: &Path) -> PathBuf {
    let mut name = sheet.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".lock.json");
    sheet.with_file_name(name)
}

/// Write the annotation sheet with empty verdicts, and its lock file.
pub fn write_sheet(path: &Path, sample: &EvalSample) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SHEET_HEADER)?;
    for f in &sample.items {
        w.write_record([f.video_id.as_str(), &f.frame_id.to_string(), f.predicted_type.as_str(), &f.image_path, ""])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)?;
    let lock = SheetLock {
        prng: PRNG_NAME.into(),
        seed: sample.seed,
        n: sample.n,
        population_size: sample.population_size,
        population_hash: sample.population_hash.clone(),
        locked_digest: locked_digest(sample.items.iter()),
    };
    write_atomic(&lock_path(path), &serde_json::to_vec_pretty(&lock)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedItem {
    pub frame: LabeledFrame,
    pub verdict: Option<Verdict>,
}

/// Read an annotation sheet. Verdicts are `y`/`n` (any case) or empty.
pub fn read_sheet(path: &Path) -> Result<Vec<AnnotatedItem>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Validation(format!("{}: {other:?}", path.display())),
        })?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != SHEET_HEADER {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("expected header {}", SHEET_HEADER.join(",")),
        });
    }
    let mut items = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        };
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", rec.len())));
        }
        let frame_id = rec[1].trim().parse().map_err(|e| bad(format!("frame_id: {e}")))?;
        let predicted_type = rec[2].trim().parse().map_err(|e: Error| bad(e.to_string()))?;
        let verdict = match rec[4].trim().to_ascii_lowercase().as_str() {
            "" => None,
            "y" => Some(Verdict::Correct),
            "n" => Some(Verdict::Incorrect),
            other => return Err(bad(format!("verdict must be y or n, got {other:?}"))),
        };
        items.push(AnnotatedItem {
            frame: LabeledFrame {
                video_id: rec[0].trim().to_string(),
                frame_id,
                predicted_type,
                image_path: rec[3].to_string(),
            },
            verdict,
        });
    }
    Ok(items)
}

/// Check the sheet's locked columns against its lock file.
pub fn verify_locked(path: &Path, items: &[AnnotatedItem]) -> Result<SheetLock> {
    let lp = lock_path(path);
    let lock: SheetLock = serde_json::from_slice(&std::fs::read(&lp).map_err(|e| Error::io(&lp, e))?)?;
    if lock.n != items.len() || lock.locked_digest != locked_digest(items.iter().map(|i| &i.frame)) {
        return Err(Error::Integrity(format!(
            "{}: locked columns were modified (rows, order or predictions differ from the sample)",
            path.display()
        )));
    }
    Ok(lock)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalRow {
    pub true_count: u64,
    pub false_count: u64,
    pub total: u64,
    pub false_pct: Percent1,
}

impl EvalRow {
    fn from_counts(t: u64, f: u64) -> Self {
        EvalRow {
            true_count: t,
            false_count: f,
            total: t + f,
            false_pct: Percent1::of(f, t + f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    /// Every scene type, zero rows included.
    pub rows: BTreeMap<SceneType, EvalRow>,
    pub total: EvalRow,
    pub accuracy: f64,
    pub accuracy_pct: Percent1,
}

pub fn score_eval(items: &[AnnotatedItem]) -> Result<EvalResult> {
    let missing: Vec<String> = items
        .iter()
        .filter(|i| i.verdict.is_none())
        .map(|i| format!("{}#{}", i.frame.video_id, i.frame.frame_id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteInput {
            what: "annotation sheet has items without a verdict".into(),
            ids: missing,
        });
    }
    let mut counts: BTreeMap<SceneType, (u64, u64)> = SceneType::ALL.iter().map(|t| (*t, (0, 0))).collect();
    for i in items {
        let c = counts.get_mut(&i.frame.predicted_type).expect("all types present");
        match i.verdict {
            Some(Verdict::Correct) => c.0 += 1,
            _ => c.1 += 1,
        }
    }
    let rows: BTreeMap<SceneType, EvalRow> = counts.into_iter().map(|(k, (t, f))| (k, EvalRow::from_counts(t, f))).collect();
    let (t, f) = rows.values().fold((0, 0), |a, r| (a.0 + r.true_count, a.1 + r.false_count));
    Ok(EvalResult {
        rows,
        total: EvalRow::from_counts(t, f),
        accuracy: if t + f == 0 { 0.0 } else { t as f64 / (t + f) as f64 },
        accuracy_pct: Percent1::of(t, t + f),
    })
}
