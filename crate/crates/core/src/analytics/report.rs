//! Report bundle: one CSV per table, `summary.json`, and a long-format
//! `plot_long.csv` with (month, key, value) rows for external plotting.
//! Output bytes depend only on the inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::{
    AspectSentimentTable, DistributionFlag, EngagementStats, MonthlyTrend, PolaritySummary, SceneDistribution,
    SceneShareOverTime,
};
use crate::absa::SentimentLabel;
use crate::corpus::{write_atomic, CorpusStats};
use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::percent::Percent1;
use crate::scenes::SceneType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportTable {
    CorpusStats,
    AspectSentiment,
    VideoPolarity,
    MonthlyTrend,
    Engagement,
    SceneDistribution,
    SceneShareOverTime,
    Eval,
}

pub const REPORT_TABLES: [ReportTable; 8] = [
    ReportTable::CorpusStats,
    ReportTable::AspectSentiment,
    ReportTable::VideoPolarity,
    ReportTable::MonthlyTrend,
    ReportTable::Engagement,
    ReportTable::SceneDistribution,
    ReportTable::SceneShareOverTime,
    ReportTable::Eval,
];

impl ReportTable {
    pub fn name(self) -> &'static str {
        match self {
            ReportTable::CorpusStats => "corpus_stats",
            ReportTable::AspectSentiment => "aspect_sentiment",
            ReportTable::VideoPolarity => "video_polarity",
            ReportTable::MonthlyTrend => "monthly_trend",
            ReportTable::Engagement => "engagement",
            ReportTable::SceneDistribution => "scene_distribution",
            ReportTable::SceneShareOverTime => "scene_share_over_time",
            ReportTable::Eval => "scene_eval",
        }
    }
}

impl FromStr for ReportTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        REPORT_TABLES.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown table {s:?} (known: {})",
                REPORT_TABLES.map(|t| t.name()).join(", ")
            ))
        })
    }
}

/// Everything a report can contain; absent parts are skipped.
#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub corpus: Option<CorpusStats>,
    pub aspects: Option<AspectSentimentTable>,
    pub polarities: Option<BTreeMap<String, SentimentLabel>>,
    pub polarity_summary: Option<PolaritySummary>,
    pub trend: Option<MonthlyTrend>,
    pub engagement: Option<EngagementStats>,
    pub scenes: Option<SceneDistribution>,
    pub scene_time: Option<SceneShareOverTime>,
    pub eval: Option<EvalResult>,
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
    }
}

fn counts_row(prefix: Vec<String>, c: crate::absa::LabelCounts) -> Vec<String> {
    let mut row = prefix;
    row.extend([c.neg, c.neut, c.pos, c.total()].map(|v| v.to_string()));
    row
}

impl ReportBundle {
    fn table(&self, t: ReportTable) -> Option<Table> {
        match t {
            ReportTable::CorpusStats => self.corpus.as_ref().map(|c| {
                let mut tb = Table::new(&["outlet", "videos", "spoken", "spoken_pct", "no_speech"]);
                for (o, r) in &c.rows {
                    tb.push(vec![
                        o.code().into(),
                        r.video_count.to_string(),
                        r.spoken_count.to_string(),
                        r.spoken_pct.to_string(),
                        r.no_speech_count.to_string(),
                    ]);
                }
                tb
            }),
            ReportTable::AspectSentiment => self.aspects.as_ref().map(|a| {
                let mut tb = Table::new(&["outlet", "aspect", "neg", "neut", "pos", "total"]);
                for (o, groups) in &a.outlets {
                    for (g, c) in groups {
                        tb.push(counts_row(vec![o.code().into(), g.display_label().into()], *c));
                    }
                    tb.push(counts_row(vec![o.code().into(), "Overall".into()], a.outlet_overall(o)));
                }
                tb
            }),
            ReportTable::VideoPolarity => self.polarities.as_ref().map(|p| {
                let mut tb = Table::new(&["video_id", "polarity"]);
                for (v, l) in p {
                    tb.push(vec![v.clone(), l.to_string()]);
                }
                tb
            }),
            ReportTable::MonthlyTrend => self.trend.as_ref().map(|t| {
                let mut tb = Table::new(&["month", "aspect", "neg", "neut", "pos", "total", "neg_share", "neut_share", "pos_share"]);
                for ((m, g), c) in &t.buckets {
                    let mut row = counts_row(vec![m.to_string(), g.name().into()], *c);
                    row.extend(c.shares().unwrap_or([0.0; 3]).map(f6));
                    tb.push(row);
                }
                tb
            }),
            ReportTable::Engagement => self.engagement.as_ref().map(|e| {
                let mut tb = Table::new(&["outlet", "polarity", "n", "median_log_views", "q1_log_views", "q3_log_views"]);
                for ((o, l), c) in &e.cells {
                    tb.push(vec![
                        o.code().into(),
                        l.to_string(),
                        c.n.to_string(),
                        f6(c.median_log_views),
                        f6(c.q1_log_views),
                        f6(c.q3_log_views),
                    ]);
                }
                tb
            }),
            ReportTable::SceneDistribution => self.scenes.as_ref().map(|s| {
                let outlets: Vec<_> = s.counts.keys().collect();
                let mut header = vec!["scene_type"];
                header.extend(outlets.iter().map(|o| o.code()));
                header.extend(["total", "global_pct"]);
                let mut tb = Table::new(&header);
                for t in SceneType::ALL {
                    let mut row = vec![t.as_str().to_string()];
                    row.extend(outlets.iter().map(|o| s.counts[*o].get(&t).copied().unwrap_or(0).to_string()));
                    row.push(s.category_total(t).to_string());
                    row.push(s.global_pct(t).to_string());
                    tb.push(row);
                }
                let mut frames = vec!["sampled_frames".to_string()];
                frames.extend(outlets.iter().map(|o| s.frame_totals.get(*o).copied().unwrap_or(0).to_string()));
                frames.push(s.grand_total().to_string());
                frames.push(String::new());
                tb.push(frames);
                tb
            }),
            ReportTable::SceneShareOverTime => self.scene_time.as_ref().map(|s| {
                let mut tb = Table::new(&["month", "scene_type", "count", "pct"]);
                for (m, types) in &s.months {
                    for t in SceneType::ALL {
                        if let Some(n) = types.get(&t) {
                            tb.push(vec![m.to_string(), t.as_str().into(), n.to_string(), s.pct(*m, t).unwrap_or_default_pct()]);
                        }
                    }
                }
                tb
            }),
            ReportTable::Eval => self.eval.as_ref().map(|e| {
                let mut tb = Table::new(&["category", "true", "false", "total", "false_pct"]);
                let row = |name: String, r: &crate::eval::EvalRow| {
                    vec![name, r.true_count.to_string(), r.false_count.to_string(), r.total.to_string(), r.false_pct.to_string()]
                };
                for (t, r) in &e.rows {
                    tb.push(row(t.as_str().into(), r));
                }
                tb.push(row("Total".into(), &e.total));
                tb
            }),
        }
    }

    fn long_rows(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        if let Some(t) = &self.trend {
            for ((m, g), c) in &t.buckets {
                if let Some(sh) = c.shares() {
                    for (l, v) in SentimentLabel::ALL.iter().zip(sh) {
                        out.push((m.to_string(), format!("sentiment/{}/{l}", g.name()), f6(v)));
                    }
                }
            }
        }
        if let Some(s) = &self.scene_time {
            for (m, types) in &s.months {
                for t in SceneType::ALL {
                    if types.contains_key(&t) {
                        out.push((m.to_string(), format!("scene/{}", t.as_str()), s.pct(*m, t).unwrap_or_default_pct()));
                    }
                }
            }
        }
        out
    }

    fn summary(&self) -> Summary {
        Summary {
            corpus: self.corpus.clone(),
            aspect_overall: self.aspects.as_ref().map(|a| {
                a.outlets
                    .keys()
                    .map(|o| (o.code().to_string(), a.outlet_overall(o)))
                    .collect()
            }),
            polarity: self.polarity_summary,
            scene_global_pct: self
                .scenes
                .as_ref()
                .map(|s| SceneType::ALL.iter().map(|t| (t.as_str().to_string(), s.global_pct(*t))).collect()),
            scene_flags: self.scenes.as_ref().map(|s| s.flags.clone()).unwrap_or_default(),
            eval_accuracy_pct: self.eval.as_ref().map(|e| e.accuracy_pct),
        }
    }
}

trait PctText {
    fn unwrap_or_default_pct(self) -> String;
}

impl PctText for Option<Percent1> {
    fn unwrap_or_default_pct(self) -> String {
        self.map(|p| p.to_string()).unwrap_or_default()
    }
}

#[derive(Serialize)]
struct Summary {
    corpus: Option<CorpusStats>,
    aspect_overall: Option<BTreeMap<String, crate::absa::LabelCounts>>,
    polarity: Option<PolaritySummary>,
    scene_global_pct: Option<BTreeMap<String, Percent1>>,
    scene_flags: Vec<DistributionFlag>,
    eval_accuracy_pct: Option<Percent1>,
}

/// Write the selected tables (all when `tables` is empty) plus the summary
/// and long-format files. Returns the written paths.
pub fn write_report(dir: &Path, bundle: &ReportBundle, tables: &[ReportTable]) -> Result<Vec<PathBuf>> {
    let selected: Vec<ReportTable> = if tables.is_empty() { REPORT_TABLES.to_vec() } else { tables.to_vec() };
    let mut written = Vec::new();
    for t in selected {
        match bundle.table(t) {
            Some(tb) => written.push(write_atomic(&dir.join(format!("{}.csv", t.name())), &tb.to_csv()?)?),
            None => log::info!("report: no data for {}", t.name()),
        }
    }
    let mut summary = serde_json::to_vec_pretty(&bundle.summary())?;
    summary.push(b'\n');
    written.push(write_atomic(&dir.join("summary.json"), &summary)?);
    let mut long = Table::new(&["month", "key", "value"]);
    for (m, k, v) in bundle.long_rows() {
        long.push(vec![m, k, v]);
    }
    written.push(write_atomic(&dir.join("plot_long.csv"), &long.to_csv()?)?);
    Ok(written)
}
