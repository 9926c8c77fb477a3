//! Outlet-level aggregates: aspect sentiment tables, video polarity, monthly
//! trends, engagement statistics and scene distributions.
//!
//! Every function here is a pure fold over its inputs; the `Execution`
//! argument only changes how the fold is scheduled.

mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize, Serializer};

pub use report::{write_report, ReportBundle, ReportTable, REPORT_TABLES};

use crate::absa::{LabelCounts, SentimentLabel, SentimentPrediction};
use crate::corpus::{OutletId, VideoRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linking::{AspectGroup, AspectRow};
use crate::percent::Percent1;
use crate::scenes::{SceneLabel, SceneType};

/// Lookup from video id to its manifest record.
pub struct VideoIndex<'a> {
    by_id: HashMap<&'a str, &'a VideoRecord>,
    outlets: BTreeSet<OutletId>,
}

impl<'a> VideoIndex<'a> {
    pub fn new(records: &'a [VideoRecord]) -> Self {
        VideoIndex {
            by_id: records.iter().map(|r| (r.video_id.as_str(), r)).collect(),
            outlets: records.iter().map(|r| r.outlet.clone()).collect(),
        }
    }

    pub fn get(&self, video_id: &str) -> Option<&'a VideoRecord> {
        self.by_id.get(video_id).copied()
    }

    pub fn outlets(&self) -> &BTreeSet<OutletId> {
        &self.outlets
    }
}

/// Calendar month, serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One aspect occurrence with its predicted label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentRow {
    pub video_id: String,
    pub group: AspectGroup,
    pub label: SentimentLabel,
}

/// Join rows to predictions keyed by [`AspectRow::key`]. Rows without a
/// prediction are an error.
pub fn join_predictions(rows: &[AspectRow], predictions: &HashMap<String, SentimentPrediction>) -> Result<Vec<SentimentRow>> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let key = r.key();
        match predictions.get(&key) {
            Some(p) => out.push(SentimentRow {
                video_id: r.video_id.clone(),
                group: r.group,
                label: p.label,
            }),
            None => missing.push(key),
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteInput {
            what: "aspect rows without a prediction".into(),
            ids: missing,
        });
    }
    Ok(out)
}

fn unknown_videos(ids: BTreeSet<String>) -> Result<()> {
    if ids.is_empty() {
        Ok(())
    } else {
        Err(Error::Integrity(format!(
            "video ids not in the manifest: {}",
            ids.into_iter().collect::<Vec<_>>().join(", ")
        )))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AspectSentimentTable {
    pub outlets: BTreeMap<OutletId, BTreeMap<AspectGroup, LabelCounts>>,
}

impl AspectSentimentTable {
    pub fn cell(&self, outlet: &OutletId, group: AspectGroup) -> LabelCounts {
        self.outlets.get(outlet).and_then(|g| g.get(&group)).copied().unwrap_or_default()
    }

    /// The outlet's Overall row: column sums over groups.
    pub fn outlet_overall(&self, outlet: &OutletId) -> LabelCounts {
        self.outlets
            .get(outlet)
            .map(|g| g.values().fold(LabelCounts::default(), |a, b| a.merge(*b)))
            .unwrap_or_default()
    }

    pub fn grand_total(&self) -> LabelCounts {
        self.outlets.keys().fold(LabelCounts::default(), |a, o| a.merge(self.outlet_overall(o)))
    }
}

struct CellAcc<K: Ord> {
    cells: BTreeMap<K, LabelCounts>,
    unknown: BTreeSet<String>,
}

impl<K: Ord> Default for CellAcc<K> {
    fn default() -> Self {
        CellAcc {
            cells: BTreeMap::new(),
            unknown: BTreeSet::new(),
        }
    }
}

impl<K: Ord> CellAcc<K> {
    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.cells {
            let e = self.cells.entry(k).or_default();
            *e = e.merge(v);
        }
        self.unknown.extend(other.unknown);
        self
    }
}

/// Counts per (outlet, group, label). Every manifest outlet gets all ten
/// groups, zero-filled.
pub fn aspect_sentiment_table(rows: &[SentimentRow], index: &VideoIndex, exec: Execution) -> Result<AspectSentimentTable> {
    let acc = exec.fold(
        rows,
        CellAcc::<(OutletId, AspectGroup)>::default,
        |acc, r| match index.get(&r.video_id) {
            Some(v) => acc.cells.entry((v.outlet.clone(), r.group)).or_default().add(r.label),
            None => {
                acc.unknown.insert(r.video_id.clone());
            }
        },
        CellAcc::merge,
    );
    unknown_videos(acc.unknown)?;
    let mut table = AspectSentimentTable::default();
    for outlet in index.outlets() {
        table
            .outlets
            .insert(outlet.clone(), AspectGroup::ALL.iter().map(|g| (*g, LabelCounts::default())).collect());
    }
    for ((outlet, group), counts) in acc.cells {
        table.outlets.entry(outlet).or_default().insert(group, counts);
    }
    Ok(table)
}

/// Plurality label; any tie resolves to neutral.
pub fn video_polarity(labels: &[SentimentLabel]) -> Result<SentimentLabel> {
    if labels.is_empty() {
        return Err(Error::Precondition("video polarity needs at least one prediction".into()));
    }
    let mut c = LabelCounts::default();
    for l in labels {
        c.add(*l);
    }
    Ok(if c.neg > c.neut && c.neg > c.pos {
        SentimentLabel::Negative
    } else if c.pos > c.neut && c.pos > c.neg {
        SentimentLabel::Positive
    } else {
        SentimentLabel::Neutral
    })
}

/// Polarity of every video that has at least one aspect row.
pub fn video_polarities(rows: &[SentimentRow]) -> BTreeMap<String, SentimentLabel> {
    let mut by_video: BTreeMap<&str, Vec<SentimentLabel>> = BTreeMap::new();
    for r in rows {
        by_video.entry(&r.video_id).or_default().push(r.label);
    }
    by_video
        .into_iter()
        .map(|(v, labels)| (v.to_string(), video_polarity(&labels).expect("non-empty by construction")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritySummary {
    pub videos: u64,
    pub counts: LabelCounts,
    /// (negative + positive) / videos, in [0, 1].
    pub non_neutral_share: f64,
    pub non_neutral_pct: Percent1,
}

pub fn polarity_summary(polarities: &BTreeMap<String, SentimentLabel>) -> PolaritySummary {
    let mut counts = LabelCounts::default();
    for l in polarities.values() {
        counts.add(*l);
    }
    let videos = counts.total();
    let non_neutral = counts.neg + counts.pos;
    PolaritySummary {
        videos,
        counts,
        non_neutral_share: if videos == 0 { 0.0 } else { non_neutral as f64 / videos as f64 },
        non_neutral_pct: Percent1::of(non_neutral, videos),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonthlyTrend {
    /// Sparse: only (month, group) pairs with at least one row.
    pub buckets: BTreeMap<(YearMonth, AspectGroup), LabelCounts>,
    /// Videos that could not be placed in a month.
    pub excluded: Vec<String>,
}

impl MonthlyTrend {
    pub fn shares(&self, month: YearMonth, group: AspectGroup) -> Option<[f64; 3]> {
        self.buckets.get(&(month, group)).and_then(|c| c.shares())
    }
}

pub fn monthly_trend(rows: &[SentimentRow], index: &VideoIndex, exec: Execution) -> MonthlyTrend {
    let acc = exec.fold(
        rows,
        CellAcc::<(YearMonth, AspectGroup)>::default,
        |acc, r| match index.get(&r.video_id) {
            Some(v) => acc.cells.entry((YearMonth::of(v.upload_date), r.group)).or_default().add(r.label),
            None => {
                acc.unknown.insert(r.video_id.clone());
            }
        },
        CellAcc::merge,
    );
    if !acc.unknown.is_empty() {
        log::warn!("{} videos without upload date excluded from the monthly trend", acc.unknown.len());
    }
    MonthlyTrend {
        buckets: acc.cells,
        excluded: acc.unknown.into_iter().collect(),
    }
}

/// Published or expected share to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceShare {
    pub scene_type: SceneType,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionFlag {
    /// Labels for an outlet do not add up to its sampled-frame total.
    LabelFrameMismatch { outlet: OutletId, labels: u64, frames: u64 },
    /// A computed global share differs from a reference figure.
    ReferenceMismatch {
        scene_type: SceneType,
        computed_pct: f64,
        reference_pct: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SceneDistribution {
    pub counts: BTreeMap<OutletId, BTreeMap<SceneType, u64>>,
    /// Sampled frames per outlet, the denominator of global shares.
    pub frame_totals: BTreeMap<OutletId, u64>,
    pub flags: Vec<DistributionFlag>,
}

impl SceneDistribution {
    pub fn category_total(&self, t: SceneType) -> u64 {
        self.counts.values().map(|m| m.get(&t).copied().unwrap_or(0)).sum()
    }

    pub fn label_total(&self) -> u64 {
        self.counts.values().flat_map(|m| m.values()).sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.frame_totals.values().sum()
    }

    /// Category total over grand total, as a fraction.
    pub fn global_share(&self, t: SceneType) -> f64 {
        let g = self.grand_total();
        if g == 0 {
            0.0
        } else {
            self.category_total(t) as f64 / g as f64
        }
    }

    pub fn global_pct(&self, t: SceneType) -> Percent1 {
        Percent1::of(self.category_total(t), self.grand_total())
    }

    /// Flag every category whose rounded share is farther than `tol_pp`
    /// from the reference; the computed value is never replaced.
    pub fn check_reference(&mut self, reference: &[ReferenceShare], tol_pp: f64) {
        for r in reference {
            let computed = self.global_pct(r.scene_type).value();
            if (computed - r.pct).abs() > tol_pp + 1e-9 {
                self.flags.push(DistributionFlag::ReferenceMismatch {
                    scene_type: r.scene_type,
                    computed_pct: computed,
                    reference_pct: r.pct,
                });
            }
        }
    }
}

fn scene_counts_from_labels(
    labels: &[SceneLabel],
    index: &VideoIndex,
    exec: Execution,
) -> Result<BTreeMap<OutletId, BTreeMap<SceneType, u64>>> {
    #[derive(Default)]
    struct Acc {
        cells: BTreeMap<(OutletId, SceneType), u64>,
        unknown: BTreeSet<String>,
    }
    let acc = exec.fold(
        labels,
        Acc::default,
        |acc, l| match index.get(&l.video_id) {
            Some(v) => *acc.cells.entry((v.outlet.clone(), effective_type(l))).or_default() += 1,
            None => {
                acc.unknown.insert(l.video_id.clone());
            }
        },
        |mut a, b| {
            for (k, v) in b.cells {
                *a.cells.entry(k).or_default() += v;
            }
            a.unknown.extend(b.unknown);
            a
        },
    );
    unknown_videos(acc.unknown)?;
    let mut counts: BTreeMap<OutletId, BTreeMap<SceneType, u64>> = index
        .outlets()
        .iter()
        .map(|o| (o.clone(), SceneType::ALL.iter().map(|t| (*t, 0)).collect()))
        .collect();
    for ((o, t), n) in acc.cells {
        *counts.entry(o).or_default().entry(t).or_default() += n;
    }
    Ok(counts)
}

fn effective_type(l: &SceneLabel) -> SceneType {
    if l.abstain {
        SceneType::OtherOrUnknown
    } else {
        l.scene_type
    }
}

/// Counts per (outlet, scene type) from labels.
///
/// `frame_totals` gives the number of sampled frames per outlet; shares are
/// taken over its sum. Without it the label counts are used. Outlets whose
/// label count differs from their frame total are flagged.
pub fn scene_distribution(
    labels: &[SceneLabel],
    index: &VideoIndex,
    frame_totals: Option<&BTreeMap<OutletId, u64>>,
    exec: Execution,
) -> Result<SceneDistribution> {
    let counts = scene_counts_from_labels(labels, index, exec)?;
    Ok(distribution_from_counts(counts, frame_totals))
}

/// Build a distribution from already-aggregated counts.
pub fn distribution_from_counts(
    counts: BTreeMap<OutletId, BTreeMap<SceneType, u64>>,
    frame_totals: Option<&BTreeMap<OutletId, u64>>,
) -> SceneDistribution {
    let label_sums: BTreeMap<OutletId, u64> = counts.iter().map(|(o, m)| (o.clone(), m.values().sum())).collect();
    let frame_totals = frame_totals.cloned().unwrap_or_else(|| label_sums.clone());
    let mut flags = Vec::new();
    let outlets: BTreeSet<&OutletId> = label_sums.keys().chain(frame_totals.keys()).collect();
    for o in outlets {
        let labels = label_sums.get(o).copied().unwrap_or(0);
        let frames = frame_totals.get(o).copied().unwrap_or(0);
        if labels != frames {
            log::warn!("{o}: {labels} scene labels for {frames} sampled frames");
            flags.push(DistributionFlag::LabelFrameMismatch {
                outlet: o.clone(),
                labels,
                frames,
            });
        }
    }
    SceneDistribution {
        counts,
        frame_totals,
        flags,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SceneShareOverTime {
    /// Sparse: months with at least one label.
    pub months: BTreeMap<YearMonth, BTreeMap<SceneType, u64>>,
    pub excluded: Vec<String>,
}

impl SceneShareOverTime {
    pub fn pct(&self, month: YearMonth, t: SceneType) -> Option<Percent1> {
        let m = self.months.get(&month)?;
        Some(Percent1::of(m.get(&t).copied().unwrap_or(0), m.values().sum()))
    }
}

pub fn scene_share_over_time(labels: &[SceneLabel], index: &VideoIndex, exec: Execution) -> SceneShareOverTime {
    #[derive(Default)]
    struct Acc {
        cells: BTreeMap<(YearMonth, SceneType), u64>,
        unknown: BTreeSet<String>,
    }
    let acc = exec.fold(
        labels,
        Acc::default,
        |acc, l| match index.get(&l.video_id) {
            Some(v) => *acc.cells.entry((YearMonth::of(v.upload_date), effective_type(l))).or_default() += 1,
            None => {
                acc.unknown.insert(l.video_id.clone());
            }
        },
        |mut a, b| {
            for (k, v) in b.cells {
                *a.cells.entry(k).or_default() += v;
            }
            a.unknown.extend(b.unknown);
            a
        },
    );
    if !acc.unknown.is_empty() {
        log::warn!("{} videos without upload date excluded from scene shares", acc.unknown.len());
    }
    let mut months: BTreeMap<YearMonth, BTreeMap<SceneType, u64>> = BTreeMap::new();
    for ((m, t), n) in acc.cells {
        months.entry(m).or_default().insert(t, n);
    }
    SceneShareOverTime {
        months,
        excluded: acc.unknown.into_iter().collect(),
    }
}

pub fn log_views(views: u64) -> f64 {
    (views as f64).ln_1p()
}

/// Linear-interpolation quantile (R type 7) of sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngagementCell {
    pub n: u64,
    pub median_log_views: f64,
    pub q1_log_views: f64,
    pub q3_log_views: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngagementStats {
    pub cells: BTreeMap<(OutletId, SentimentLabel), EngagementCell>,
    pub missing: Vec<String>,
}

/// ln(1+views) order statistics per (outlet, video polarity).
pub fn engagement_stats(index: &VideoIndex, polarities: &BTreeMap<String, SentimentLabel>) -> EngagementStats {
    let mut groups: BTreeMap<(OutletId, SentimentLabel), Vec<f64>> = BTreeMap::new();
    let mut missing = Vec::new();
    for (video_id, label) in polarities {
        match index.get(video_id) {
            Some(v) => groups.entry((v.outlet.clone(), *label)).or_default().push(log_views(v.view_count)),
            None => missing.push(video_id.clone()),
        }
    }
    if !missing.is_empty() {
        log::warn!("{} videos with a polarity but no manifest record", missing.len());
    }
    let cells = groups
        .into_iter()
        .map(|(k, mut xs)| {
            xs.sort_by(f64::total_cmp);
            let q = |p| quantile_sorted(&xs, p).expect("non-empty group");
            (
                k,
                EngagementCell {
                    n: xs.len() as u64,
                    median_log_views: q(0.5),
                    q1_log_views: q(0.25),
                    q3_log_views: q(0.75),
                },
            )
        })
        .collect();
    EngagementStats { cells, missing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    #[test]
    fn polarity_rule() {
        assert_eq!(video_polarity(&[Negative, Negative, Positive]).unwrap(), Negative);
        assert_eq!(video_polarity(&[Negative, Positive]).unwrap(), Neutral);
        assert_eq!(video_polarity(&[Negative, Neutral]).unwrap(), Neutral);
        assert_eq!(video_polarity(&[Positive, Positive, Neutral, Neutral]).unwrap(), Neutral);
        assert_eq!(video_polarity(&[Positive]).unwrap(), Positive);
        assert!(video_polarity(&[]).is_err());
    }

    #[test]
    fn log_transform() {
        assert_eq!(log_views(0), 0.0);
        // views = e - 1 is not an integer; check the transform analytically instead
        assert!(((std::f64::consts::E - 1.0).ln_1p() - 1.0).abs() < 1e-12);
        assert!(log_views(10) < log_views(11));
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), Some(2.5));
        assert_eq!(quantile_sorted(&xs, 0.25), Some(1.75));
        assert_eq!(quantile_sorted(&[7.0], 0.75), Some(7.0));
        assert_eq!(quantile_sorted(&[], 0.5), None);
    }

    #[test]
    fn year_month_format() {
        let m = YearMonth::of(NaiveDate::from_ymd_opt(2023, 12, 5).unwrap());
        assert_eq!(m.to_string(), "2023-12");
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"2023-12\"");
    }
}
