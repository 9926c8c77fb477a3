//! Stage orchestration over a store directory.
//!
//! Text side: ingest → probe → transcribe → link → absa → aggregate.
//! Visual side: ingest → sample → scenes → aggregate (and evaluate).
//! A stage refuses to run until its upstream stages have completed once.
//! Work is tracked per video: after a video's outputs are written, a marker
//! with the hash of its inputs is stored, and a rerun skips every video whose
//! marker still matches.

mod config;
pub mod smoke;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{EvalConfig, ManifestSource, PipelineConfig, RetryConfig, SceneConfig, Workers, MAX_WORKERS};

use crate::absa::{bootstrap_silver, write_silver, AbsaClassifier, SentimentLabel, SentimentPrediction, SilverSource};
use crate::analytics::{
    aspect_sentiment_table, engagement_stats, join_predictions, monthly_trend, polarity_summary, scene_distribution,
    scene_share_over_time, video_polarities, write_report, ReportBundle, ReportTable, VideoIndex,
};
use crate::backend::BackendClient;
use crate::corpus::{read_jsonl, read_manifest, to_jsonl, write_atomic, LanguageStatus, OutletId, Store, StoreWriter, VideoRecord};
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{read_sheet, sample_heldout, score_eval, verify_locked, write_sheet, LabeledFrame};
use crate::exec::Execution;
use crate::frames::{self, FfmpegTools, FrameRecord, SampleJob, SUPPORTED_FORMATS};
use crate::linking::{link_transcript, load_lexicon, AspectGroup, AspectRow, Lexicon, LexiconSource, LinkOutcome};
use crate::scenes::{self, build_prompt, find_nondeterminism, FrameRef, ParseStatus, SceneClassifier, SceneLabel};
use crate::transcripts::{self, apply_probe, probe_language, AudioRef, LanguageProbe, Transcript};

pub const PROBES_DIR: &str = "probes";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const LINKS_DIR: &str = "links";
pub const ABSA_DIR: &str = "absa";
pub const FRAMES_DIR: &str = "frames";
pub const SCENES_DIR: &str = "scenes";
pub const AGGREGATE_DIR: &str = "aggregate";
pub const EVAL_DIR: &str = "eval";
pub const STAGES_DIR: &str = "stages";
pub const MARKERS_DIR: &str = "markers";
pub const SILVER_FILE: &str = "silver_candidates.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Probe,
    Transcribe,
    Link,
    Absa,
    Sample,
    Scenes,
    Aggregate,
    Evaluate,
    Report,
}

impl Stage {
    /// In a valid execution order.
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Probe,
        Stage::Transcribe,
        Stage::Link,
        Stage::Absa,
        Stage::Sample,
        Stage::Scenes,
        Stage::Aggregate,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Probe => "probe",
            Stage::Transcribe => "transcribe",
            Stage::Link => "link",
            Stage::Absa => "absa",
            Stage::Sample => "sample",
            Stage::Scenes => "scenes",
            Stage::Aggregate => "aggregate",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Probe | Stage::Sample => &[Stage::Ingest],
            Stage::Transcribe => &[Stage::Probe],
            Stage::Link => &[Stage::Transcribe],
            Stage::Absa => &[Stage::Link],
            Stage::Scenes => &[Stage::Sample],
            Stage::Aggregate => &[Stage::Absa, Stage::Scenes],
            Stage::Evaluate => &[Stage::Scenes],
            Stage::Report => &[Stage::Aggregate],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedVideo {
    pub video_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedVideo {
    pub video_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub dry_run: bool,
    pub processed: Vec<String>,
    /// Already done with identical inputs.
    pub skipped: Vec<String>,
    /// Not eligible for this stage (e.g. non-English for transcription).
    pub excluded: Vec<ExcludedVideo>,
    pub failed: Vec<FailedVideo>,
    pub notes: Vec<String>,
}

impl StageReport {
    fn new(stage: Stage, dry_run: bool) -> Self {
        StageReport {
            stage,
            dry_run,
            processed: Vec::new(),
            skipped: Vec::new(),
            excluded: Vec::new(),
            failed: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn exclude(&mut self, video_id: &str, reason: impl Into<String>) {
        self.excluded.push(ExcludedVideo {
            video_id: video_id.into(),
            reason: reason.into(),
        });
    }
}

/// One row of the ABSA stage output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsaRecord {
    pub key: String,
    pub video_id: String,
    pub group: AspectGroup,
    pub aspect: String,
    pub sentence: String,
    pub label: SentimentLabel,
    pub confidence: f64,
    pub model_version: String,
}

/// sha256 over length-prefixed parts.
pub fn fingerprint(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn file_digest(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(h.finalize()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read_bytes(path)?).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn pretty(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

struct WorkItem<T> {
    video_id: String,
    hash: String,
    input: T,
}

pub struct Pipeline {
    config: PipelineConfig,
    store: Store,
    client: BackendClient,
    tools: FfmpegTools,
    dry_run: bool,
    report_out: Option<PathBuf>,
    report_tables: Vec<ReportTable>,
}

impl Pipeline {
    /// Talk to the backend named in the config.
    pub fn new(config: PipelineConfig) -> Result<Self> {
        let client = BackendClient::http(&config.backend_url)?.with_retry(config.retry_policy());
        Self::with_client(config, client)
    }

    pub fn with_client(config: PipelineConfig, client: BackendClient) -> Result<Self> {
        config.validate()?;
        let store = Store::open(&config.store_root)?;
        Ok(Pipeline {
            config,
            store,
            client,
            tools: FfmpegTools::default(),
            dry_run: false,
            report_out: None,
            report_tables: Vec::new(),
        })
    }

    /// Plan only: report what would run, write nothing, call nothing.
    pub fn dry_run(mut self, on: bool) -> Self {
        self.dry_run = on;
        self
    }

    /// Where `report` writes, and which tables (all when empty).
    pub fn report_to(mut self, out: impl Into<PathBuf>, tables: Vec<ReportTable>) -> Self {
        self.report_out = Some(out.into());
        self.report_tables = tables;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn stage_record(&self, stage: Stage) -> PathBuf {
        self.store.path(STAGES_DIR).join(format!("{}.json", stage.name()))
    }

    pub fn completed(&self, stage: Stage) -> bool {
        self.stage_record(stage).is_file()
    }

    fn check_upstream(&self, stage: Stage) -> Result<()> {
        let missing: Vec<String> = stage
            .upstream()
            .iter()
            .filter(|s| !self.completed(**s))
            .map(|s| s.name().to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Dependency {
                stage: stage.name().into(),
                requires: missing,
            })
        }
    }

    pub fn run(&self, stage: Stage) -> Result<StageReport> {
        self.check_upstream(stage)?;
        let writer = if self.dry_run || stage == Stage::Report {
            None
        } else {
            Some(self.store.writer()?)
        };
        let mut report = StageReport::new(stage, self.dry_run);
        match stage {
            Stage::Ingest => self.ingest(&mut report, writer.as_ref())?,
            Stage::Probe => self.probe(&mut report)?,
            Stage::Transcribe => self.transcribe(&mut report)?,
            Stage::Link => self.link(&mut report)?,
            Stage::Absa => self.absa(&mut report)?,
            Stage::Sample => self.sample(&mut report)?,
            Stage::Scenes => self.scenes(&mut report)?,
            Stage::Aggregate => self.aggregate(&mut report)?,
            Stage::Evaluate => self.evaluate(&mut report)?,
            Stage::Report => self.report(&mut report)?,
        }
        if !self.dry_run {
            write_atomic(&self.stage_record(stage), &pretty(&report)?)?;
        }
        log::info!(
            "{stage}: {} processed, {} skipped, {} excluded, {} failed",
            report.processed.len(),
            report.skipped.len(),
            report.excluded.len(),
            report.failed.len()
        );
        Ok(report)
    }

    /// Every stage except `evaluate` and `report`, in order.
    pub fn run_all(&self) -> Result<Vec<StageReport>> {
        let mut out = Vec::new();
        for stage in Stage::ALL {
            if matches!(stage, Stage::Evaluate | Stage::Report) {
                continue;
            }
            if self.dry_run && !self.completed(stage) {
                // later stages cannot be planned before this one exists
                out.push(StageReport::new(stage, true));
                continue;
            }
            out.push(self.run(stage)?);
        }
        Ok(out)
    }

    fn marker(&self, stage: Stage, video_id: &str) -> PathBuf {
        self.store
            .path(MARKERS_DIR)
            .join(stage.name())
            .join(format!("{video_id}.sha256"))
    }

    fn is_done(&self, stage: Stage, video_id: &str, hash: &str) -> bool {
        std::fs::read_to_string(self.marker(stage, video_id)).is_ok_and(|m| m.trim() == hash)
    }

    /// Skip items whose marker matches, run the rest, mark successes.
    /// Backend failures abort the stage once the batch has drained; the
    /// videos finished before that keep their markers.
    fn run_items<T: Sync>(
        &self,
        stage: Stage,
        items: Vec<WorkItem<T>>,
        exec: Execution,
        report: &mut StageReport,
        f: impl Fn(&str, &T) -> Result<Vec<String>> + Sync + Send,
    ) -> Result<()> {
        let (done, pending): (Vec<_>, Vec<_>) = items
            .into_iter()
            .partition(|it| self.is_done(stage, &it.video_id, &it.hash));
        report.skipped.extend(done.into_iter().map(|it| it.video_id));
        if self.dry_run {
            report.processed.extend(pending.into_iter().map(|it| it.video_id));
            return Ok(());
        }
        let results = exec.map(&pending, |it| {
            let notes = f(&it.video_id, &it.input)?;
            write_atomic(&self.marker(stage, &it.video_id), it.hash.as_bytes())?;
            Ok::<_, Error>(notes)
        });
        let mut backend_err = None;
        for (it, r) in pending.iter().zip(results) {
            match r {
                Ok(notes) => {
                    report.processed.push(it.video_id.clone());
                    report.notes.extend(notes);
                }
                Err(e) if e.class() == ErrorClass::Backend => {
                    log::error!("{stage} {}: {e}", it.video_id);
                    backend_err.get_or_insert(e);
                }
                Err(e) => {
                    log::error!("{stage} {}: {e}", it.video_id);
                    report.failed.push(FailedVideo {
                        video_id: it.video_id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
        match backend_err {
            Some(e) => {
                log::error!(
                    "{stage} aborted: {} videos finished and are kept; rerun to resume",
                    report.processed.len()
                );
                Err(e)
            }
            None => Ok(()),
        }
    }

    fn out_path(&self, dir: &str, video_id: &str, ext: &str) -> PathBuf {
        self.store.path(dir).join(format!("{video_id}.{ext}"))
    }

    fn media_path(&self, video_id: &str) -> Option<PathBuf> {
        SUPPORTED_FORMATS
            .iter()
            .map(|ext| self.config.media_dir.join(format!("{video_id}.{ext}")))
            .find(|p| p.is_file())
    }

    fn audio_locator(&self, record: &VideoRecord) -> String {
        self.media_path(&record.video_id)
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| record.source_url.clone())
    }

    fn load_probe(&self, video_id: &str) -> Result<Option<LanguageProbe>> {
        let p = self.out_path(PROBES_DIR, video_id, "json");
        if p.is_file() {
            read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    fn load_transcript(&self, video_id: &str) -> Result<Option<Transcript>> {
        let p = self.out_path(TRANSCRIPTS_DIR, video_id, "json");
        if p.is_file() {
            read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Manifest records with the probe and transcription results applied.
    /// Videos without decodable audio count as having no speech.
    pub fn records(&self) -> Result<Vec<VideoRecord>> {
        let mut records = self.store.load_manifest()?;
        for r in &mut records {
            if let Some(probe) = self.load_probe(&r.video_id)? {
                apply_probe(r, &probe);
                if probe.status() == LanguageStatus::Undetermined {
                    r.has_speech = Some(false);
                }
            }
            if let Some(t) = self.load_transcript(&r.video_id)? {
                r.has_speech = Some(t.has_speech);
            }
        }
        Ok(records)
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        match (&self.config.lexicon_path, self.config.lexicon_merge) {
            (None, _) => load_lexicon(LexiconSource::Builtin),
            (Some(p), false) => load_lexicon(LexiconSource::File(p)),
            (Some(p), true) => load_lexicon(LexiconSource::BuiltinWith(p)),
        }
    }

    fn ingest(&self, report: &mut StageReport, writer: Option<&StoreWriter<'_>>) -> Result<()> {
        if self.config.manifests.is_empty() {
            report.notes.push("no manifests configured".into());
        }
        let mut known: BTreeSet<String> = self.store.load_manifest()?.into_iter().map(|r| r.video_id).collect();
        for m in &self.config.manifests {
            let outlet = match &m.display_name {
                Some(d) => OutletId::with_display_name(&m.outlet, d)?,
                None => OutletId::new(&m.outlet)?,
            };
            let records = match writer {
                None => read_manifest(&m.path, &outlet)?,
                Some(writer) => {
                let (records, summary) = writer.import_manifest(&m.path, &outlet)?;
                report
                    .notes
                    .push(format!("{}: {} read, {} added", m.path.display(), summary.read, summary.added));
                records
                }
            };
            for r in records {
                if known.insert(r.video_id.clone()) {
                    report.processed.push(r.video_id);
                } else {
                    report.skipped.push(r.video_id);
                }
            }
        }
        Ok(())
    }

    fn probe(&self, report: &mut StageReport) -> Result<()> {
        let window = self.config.probe_window_s;
        let items = self
            .store
            .load_manifest()?
            .into_iter()
            .map(|r| {
                let loc = self.audio_locator(&r);
                WorkItem {
                    video_id: r.video_id.clone(),
                    hash: fingerprint(&[b"probe", r.video_id.as_bytes(), loc.as_bytes(), &window.to_le_bytes()]),
                    input: loc,
                }
            })
            .collect();
        self.run_items(
            Stage::Probe,
            items,
            Execution::bounded(self.config.workers.asr),
            report,
            |vid, loc| {
                let probe = probe_language(&self.client, vid, &AudioRef::Locator(loc.clone()), window)?;
                write_atomic(&self.out_path(PROBES_DIR, vid, "json"), &pretty(&probe)?)?;
                Ok(Vec::new())
            },
        )
    }

    fn transcribe(&self, report: &mut StageReport) -> Result<()> {
        let mut items = Vec::new();
        for mut r in self.store.load_manifest()? {
            let probe_path = self.out_path(PROBES_DIR, &r.video_id, "json");
            let Some(probe) = self.load_probe(&r.video_id)? else {
                report.exclude(&r.video_id, "not probed");
                continue;
            };
            apply_probe(&mut r, &probe);
            match probe.status() {
                LanguageStatus::English => {}
                LanguageStatus::NonEnglish => {
                    report.exclude(&r.video_id, format!("language {}", probe.detected_language));
                    continue;
                }
                LanguageStatus::Undetermined => {
                    report.exclude(&r.video_id, "no decodable audio");
                    continue;
                }
            }
            let loc = self.audio_locator(&r);
            items.push(WorkItem {
                video_id: r.video_id.clone(),
                hash: fingerprint(&[
                    b"transcribe",
                    &read_bytes(&probe_path)?,
                    loc.as_bytes(),
                    &r.duration_s.to_le_bytes(),
                ]),
                input: (r, loc),
            });
        }
        self.run_items(
            Stage::Transcribe,
            items,
            Execution::bounded(self.config.workers.asr),
            report,
            |vid, (record, loc)| {
                let out = transcripts::transcribe(&self.client, record, &AudioRef::Locator(loc.clone()))?;
                write_atomic(&self.out_path(TRANSCRIPTS_DIR, vid, "raw.json"), out.raw_response.as_bytes())?;
                write_atomic(&self.out_path(TRANSCRIPTS_DIR, vid, "json"), &pretty(&out.transcript)?)?;
                Ok(Vec::new())
            },
        )
    }

    fn lexicon_fingerprint(lexicon: &Lexicon) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec(lexicon.entries())?;
        v.extend_from_slice(lexicon.version().as_bytes());
        Ok(v)
    }

    /// English videos in manifest order.
    fn text_videos(&self, report: &mut StageReport) -> Result<Vec<VideoRecord>> {
        let mut out = Vec::new();
        for r in self.records()? {
            if r.language_status == Some(LanguageStatus::English) {
                out.push(r);
            } else {
                report.exclude(&r.video_id, "not in the English text corpus");
            }
        }
        Ok(out)
    }

    fn link(&self, report: &mut StageReport) -> Result<()> {
        let lexicon = self.lexicon()?;
        let lex_fp = Self::lexicon_fingerprint(&lexicon)?;
        let mut items = Vec::new();
        for r in self.text_videos(report)? {
            let path = self.out_path(TRANSCRIPTS_DIR, &r.video_id, "json");
            let Some(t) = self.load_transcript(&r.video_id)? else {
                report.exclude(&r.video_id, "no transcript");
                continue;
            };
            if !t.has_speech {
                report.exclude(&r.video_id, "no speech");
                continue;
            }
            items.push(WorkItem {
                video_id: r.video_id.clone(),
                hash: fingerprint(&[b"link", &read_bytes(&path)?, &lex_fp]),
                input: t,
            });
        }
        self.run_items(
            Stage::Link,
            items,
            Execution::bounded(self.config.workers.absa),
            report,
            |vid, t| {
                let outcome = link_transcript(&self.client, t, &lexicon)?;
                write_atomic(&self.out_path(LINKS_DIR, vid, "json"), &pretty(&outcome)?)?;
                let mut notes = Vec::new();
                if !outcome.rejected.is_empty() {
                    notes.push(format!("{vid}: {} parses rejected", outcome.rejected.len()));
                }
                Ok(notes)
            },
        )
    }

    fn load_links(&self, video_id: &str) -> Result<Option<LinkOutcome>> {
        let p = self.out_path(LINKS_DIR, video_id, "json");
        if p.is_file() {
            read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    fn load_absa(&self, video_id: &str) -> Result<Option<Vec<AbsaRecord>>> {
        let p = self.out_path(ABSA_DIR, video_id, "jsonl");
        if p.is_file() {
            read_jsonl(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    fn absa(&self, report: &mut StageReport) -> Result<()> {
        let mut items = Vec::new();
        let videos = self.text_videos(report)?;
        for r in &videos {
            let path = self.out_path(LINKS_DIR, &r.video_id, "json");
            let Some(links) = self.load_links(&r.video_id)? else {
                report.exclude(&r.video_id, "no aspect rows");
                continue;
            };
            items.push(WorkItem {
                video_id: r.video_id.clone(),
                hash: fingerprint(&[b"absa", &read_bytes(&path)?]),
                input: links.rows,
            });
        }
        let classifier = AbsaClassifier::new(&self.client);
        let exec = Execution::bounded(self.config.workers.absa);
        self.run_items(Stage::Absa, items, Execution::Sequential, report, |vid, rows: &Vec<AspectRow>| {
            let pairs: Vec<(String, String)> = rows
                .iter()
                .map(|r| (r.sentence.clone(), r.aspect_surface.clone()))
                .collect();
            let mut out = Vec::with_capacity(rows.len());
            for (row, res) in rows.iter().zip(classifier.classify_batch(&pairs, exec)) {
                let c = res?;
                out.push(AbsaRecord {
                    key: row.key(),
                    video_id: row.video_id.clone(),
                    group: row.group,
                    aspect: row.aspect_surface.clone(),
                    sentence: row.sentence.clone(),
                    label: c.prediction.label,
                    confidence: c.prediction.confidence,
                    model_version: c.model_version,
                });
            }
            write_atomic(&self.out_path(ABSA_DIR, vid, "jsonl"), &to_jsonl(&out)?)?;
            Ok(Vec::new())
        })?;
        if !self.dry_run {
            let n = self.write_silver_candidates(&videos)?;
            report.notes.push(format!(
                "{n} silver candidates at confidence >= {}",
                self.config.absa_threshold
            ));
        }
        Ok(())
    }

    /// Rebuild the silver pool from every stored prediction. One candidate
    /// per (sentence, aspect), first by row key.
    fn write_silver_candidates(&self, videos: &[VideoRecord]) -> Result<usize> {
        let mut seen = BTreeMap::new();
        for r in videos {
            for rec in self.load_absa(&r.video_id)?.unwrap_or_default() {
                seen.entry((rec.sentence.clone(), rec.aspect.clone())).or_insert(rec);
            }
        }
        let preds: Vec<(SilverSource, SentimentPrediction)> = seen
            .into_values()
            .map(|rec| {
                Ok((
                    SilverSource {
                        text: rec.sentence,
                        aspect: rec.aspect,
                        group: rec.group,
                    },
                    SentimentPrediction::new(rec.label, rec.confidence)?,
                ))
            })
            .collect::<Result<_>>()?;
        let silver = bootstrap_silver(&preds, self.config.absa_threshold)?;
        write_silver(&self.store.path(ABSA_DIR).join(SILVER_FILE), &silver)?;
        Ok(silver.len())
    }

    fn frames_root(&self) -> PathBuf {
        self.store.path(FRAMES_DIR)
    }

    fn sample(&self, report: &mut StageReport) -> Result<()> {
        let cfg_bytes = serde_json::to_vec(&self.config.sampling)?;
        let mut items = Vec::new();
        for r in self.store.load_manifest()? {
            let Some(path) = self.media_path(&r.video_id) else {
                report.exclude(&r.video_id, "no media file");
                continue;
            };
            items.push(WorkItem {
                video_id: r.video_id.clone(),
                hash: fingerprint(&[b"sample", file_digest(&path)?.as_bytes(), &cfg_bytes]),
                input: SampleJob {
                    video_id: r.video_id,
                    video_title: r.title,
                    path,
                },
            });
        }
        let root = self.frames_root();
        self.run_items(Stage::Sample, items, Execution::default(), report, |vid, job| {
            let dir = root.join(vid);
            if dir.exists() {
                std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
            let outcome = frames::sample_frames(job, &root, &self.config.sampling, &self.tools)?;
            Ok(outcome
                .partial
                .map(|p| format!("{vid}: partial decode after frame {:?}: {}", p.last_good_frame_id, p.message))
                .into_iter()
                .collect())
        })
    }

    fn frame_index(&self, video_id: &str) -> Result<Option<Vec<FrameRecord>>> {
        let p = self.frames_root().join(video_id).join(frames::INDEX_FILE);
        if p.is_file() {
            frames::read_frame_index(&self.frames_root(), video_id).map(Some)
        } else {
            Ok(None)
        }
    }

    fn load_labels(&self, video_id: &str) -> Result<Option<Vec<SceneLabel>>> {
        let p = self.out_path(SCENES_DIR, video_id, "jsonl");
        if p.is_file() {
            scenes::read_labels(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    fn scenes(&self, report: &mut StageReport) -> Result<()> {
        let prompt = build_prompt(&self.config.scenes.template)?;
        let prompt_hash = prompt.hash();
        let pin = self.config.scenes.model_version.clone().unwrap_or_default();
        let mut items = Vec::new();
        for r in self.store.load_manifest()? {
            let Some(index) = self.frame_index(&r.video_id)? else {
                report.exclude(&r.video_id, "no sampled frames");
                continue;
            };
            let index_path = self.frames_root().join(&r.video_id).join(frames::INDEX_FILE);
            let refs: Vec<FrameRef> = index
                .iter()
                .map(|f| FrameRef {
                    video_id: f.video_id.clone(),
                    frame_id: f.frame_id,
                    image_path: self.frames_root().join(&f.image_ref),
                })
                .collect();
            items.push(WorkItem {
                video_id: r.video_id.clone(),
                hash: fingerprint(&[b"scenes", &read_bytes(&index_path)?, prompt_hash.as_bytes(), pin.as_bytes()]),
                input: refs,
            });
        }
        if self.dry_run {
            return self.run_items(Stage::Scenes, items, Execution::Sequential, report, |_, _| Ok(Vec::new()));
        }
        let classifier = SceneClassifier::new(&self.client, prompt, self.config.scenes.model_version.clone())?;
        let exec = Execution::bounded(self.config.workers.vlm);
        self.run_items(Stage::Scenes, items, Execution::Sequential, report, |vid, refs: &Vec<FrameRef>| {
            let results: Vec<_> = classifier
                .classify_batch(refs, exec)
                .into_iter()
                .collect::<Result<_>>()?;
            let mut notes = Vec::new();
            let failed = results
                .iter()
                .filter(|c: &&scenes::Classification| c.label.parse_status == ParseStatus::Failed)
                .count();
            if failed > 0 {
                notes.push(format!("{vid}: {failed} frames failed validation"));
            }
            if let Some(previous) = self.load_labels(vid)? {
                let current: Vec<SceneLabel> = results.iter().map(|c| c.label.clone()).collect();
                for d in find_nondeterminism(&previous, &current) {
                    log::warn!("{vid}#{}: label changed from {} to {} under the same provenance", d.frame_id, d.previous, d.current);
                    notes.push(format!("{vid}#{}: nondeterministic label", d.frame_id));
                }
            }
            scenes::write_labels(
                &self.out_path(SCENES_DIR, vid, "jsonl"),
                &self.out_path(SCENES_DIR, vid, "raw.jsonl"),
                &results,
            )?;
            Ok(notes)
        })
    }

    fn all_labels(&self, records: &[VideoRecord]) -> Result<Vec<SceneLabel>> {
        let mut out = Vec::new();
        for r in records {
            out.extend(self.load_labels(&r.video_id)?.unwrap_or_default());
        }
        Ok(out)
    }

    fn evaluate(&self, report: &mut StageReport) -> Result<()> {
        let sheet = self.config.sheet_path();
        if !sheet.is_file() {
            let records = self.store.load_manifest()?;
            let image_refs: HashMap<(String, u32), String> = records
                .iter()
                .filter_map(|r| self.frame_index(&r.video_id).transpose())
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .map(|f| ((f.video_id, f.frame_id), f.image_ref))
                .collect();
            let population: Vec<LabeledFrame> = self
                .all_labels(&records)?
                .iter()
                .map(|l| {
                    let path = image_refs.get(&(l.video_id.clone(), l.frame_id)).cloned().unwrap_or_default();
                    LabeledFrame::from_label(l, format!("{FRAMES_DIR}/{path}"))
                })
                .collect();
            let sample = sample_heldout(&population, self.config.eval.n, self.config.seed)?;
            report.processed = sample.items.iter().map(|f| format!("{}#{}", f.video_id, f.frame_id)).collect();
            if !self.dry_run {
                write_sheet(&sheet, &sample)?;
            }
            report.notes.push(format!(
                "sheet {} with {} of {} frames (seed {}); fill the verdict column with y/n and rerun",
                sheet.display(),
                sample.n,
                sample.population_size,
                sample.seed
            ));
            return Ok(());
        }
        let items = read_sheet(&sheet)?;
        verify_locked(&sheet, &items)?;
        let result = score_eval(&items)?;
        if !self.dry_run {
            write_atomic(&self.store.path(EVAL_DIR).join("result.json"), &pretty(&result)?)?;
        }
        report.notes.push(format!(
            "accuracy {}% ({}/{})",
            result.accuracy_pct, result.total.true_count, result.total.total
        ));
        Ok(())
    }

    /// Assemble every aggregate from the store.
    pub fn build_bundle(&self) -> Result<ReportBundle> {
        let records = self.records()?;
        let exec = Execution::default();
        let index = VideoIndex::new(&records);

        let counted: Vec<VideoRecord> = records
            .iter()
            .filter(|r| r.language_status != Some(LanguageStatus::NonEnglish))
            .cloned()
            .collect();
        let corpus = crate::corpus::compute_corpus_stats(&counted)?;

        let mut rows = Vec::new();
        let mut predictions = HashMap::new();
        for r in records.iter().filter(|r| r.language_status == Some(LanguageStatus::English)) {
            if let Some(links) = self.load_links(&r.video_id)? {
                rows.extend(links.rows);
            }
            for rec in self.load_absa(&r.video_id)?.unwrap_or_default() {
                predictions.insert(rec.key, SentimentPrediction::new(rec.label, rec.confidence)?);
            }
        }
        let sentiment = join_predictions(&rows, &predictions)?;
        let aspects = aspect_sentiment_table(&sentiment, &index, exec)?;
        let polarities = video_polarities(&sentiment);
        let summary = polarity_summary(&polarities);
        let trend = monthly_trend(&sentiment, &index, exec);
        let engagement = engagement_stats(&index, &polarities);

        let labels = self.all_labels(&records)?;
        let mut frame_totals: BTreeMap<OutletId, u64> = BTreeMap::new();
        for r in &records {
            if let Some(ix) = self.frame_index(&r.video_id)? {
                *frame_totals.entry(r.outlet.clone()).or_default() += ix.len() as u64;
            }
        }
        let scenes = scene_distribution(&labels, &index, Some(&frame_totals), exec)?;
        let scene_time = scene_share_over_time(&labels, &index, exec);

        let sheet = self.config.sheet_path();
        let eval = if sheet.is_file() {
            let items = read_sheet(&sheet)?;
            verify_locked(&sheet, &items)?;
            match score_eval(&items) {
                Ok(r) => Some(r),
                Err(Error::IncompleteInput { ids, .. }) => {
                    log::info!("evaluation sheet has {} unannotated rows; left out", ids.len());
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };

        Ok(ReportBundle {
            corpus: Some(corpus),
            aspects: Some(aspects),
            polarities: Some(polarities),
            polarity_summary: Some(summary),
            trend: Some(trend),
            engagement: Some(engagement),
            scenes: Some(scenes),
            scene_time: Some(scene_time),
            eval,
        })
    }

    fn aggregate(&self, report: &mut StageReport) -> Result<()> {
        let bundle = self.build_bundle()?;
        if self.dry_run {
            return Ok(());
        }
        let written = write_report(&self.store.path(AGGREGATE_DIR), &bundle, &[])?;
        report.notes.push(format!("{} files in {}", written.len(), self.store.path(AGGREGATE_DIR).display()));
        Ok(())
    }

    fn report(&self, report: &mut StageReport) -> Result<()> {
        let out = self
            .report_out
            .clone()
            .unwrap_or_else(|| self.store.path("report"));
        let bundle = self.build_bundle()?;
        if self.dry_run {
            return Ok(());
        }
        let written = write_report(&out, &bundle, &self.report_tables)?;
        report.notes.extend(written.iter().map(|p| p.display().to_string()));
        Ok(())
    }
}
