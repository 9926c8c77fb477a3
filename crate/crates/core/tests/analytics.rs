mod common;

use std::collections::{BTreeMap, HashMap};

use common::*;
use proptest::prelude::*;
use shortlens::absa::{LabelCounts, SentimentLabel, SentimentPrediction};
use shortlens::analytics::*;
use shortlens::linking::AspectGroup;
use shortlens::sampling::SeededRng;
use shortlens::scenes::SceneType;
use shortlens::{Error, Execution};

#[test]
fn outlet_tables_reproduce() {
    let (records, rows) = outlet_fixture(7);
    let index = VideoIndex::new(&records);
    let table = aspect_sentiment_table(&rows, &index, Execution::parallel()).unwrap();
    for (code, expected, overall) in OUTLET_TABLES {
        let o = outlet(code);
        for (g, neg, neut, pos, total) in expected {
            let c = table.cell(&o, g);
            assert_eq!((c.neg, c.neut, c.pos, c.total()), (neg, neut, pos, total), "{code} {g:?}");
        }
        // independent column sums over the printed rows
        let sums = expected.iter().fold((0, 0, 0, 0), |a, r| (a.0 + r.1, a.1 + r.2, a.2 + r.3, a.3 + r.4));
        assert_eq!(sums, overall, "{code} printed Overall");
        let got = table.outlet_overall(&o);
        assert_eq!((got.neg, got.neut, got.pos, got.total()), overall);
    }
    assert_eq!(table.cell(&outlet("AJ"), AspectGroup::Israel), LabelCounts::new(302, 371, 19));
}

#[test]
fn empty_and_unjoined() {
    let (records, _) = outlet_fixture(2);
    let index = VideoIndex::new(&records);
    let t = aspect_sentiment_table(&[], &index, Execution::Sequential).unwrap();
    assert_eq!(t.grand_total().total(), 0);
    assert_eq!(t.outlets.len(), 4);
    assert!(t.outlets.values().all(|g| g.len() == 10));

    let stray = vec![SentimentRow {
        video_id: "nope".into(),
        group: AspectGroup::Gaza,
        label: SentimentLabel::Neutral,
    }];
    assert!(matches!(aspect_sentiment_table(&stray, &index, Execution::Sequential), Err(Error::Integrity(_))));
    assert!(join_predictions(&[], &HashMap::<String, SentimentPrediction>::new()).unwrap().is_empty());
}

#[test]
fn polarity_share() {
    let (neut, pos, neg) = POLARITY;
    let mut polarities = BTreeMap::new();
    let mut i = 0;
    for (label, n) in [(SentimentLabel::Neutral, neut), (SentimentLabel::Positive, pos), (SentimentLabel::Negative, neg)] {
        for _ in 0..n {
            polarities.insert(format!("v{i}"), label);
            i += 1;
        }
    }
    let s = polarity_summary(&polarities);
    assert_eq!(s.videos, 782);
    assert!((s.non_neutral_share * 100.0 - 43.7).abs() <= 0.05);
    assert_eq!(s.non_neutral_pct.to_string(), "43.7");
}

#[test]
fn two_month_trend() {
    let records = vec![record("a", "AJ", day(2023, 11, 3), 1), record("b", "AJ", day(2023, 12, 9), 1)];
    let index = VideoIndex::new(&records);
    let row = |v: &str, label| SentimentRow {
        video_id: v.into(),
        group: AspectGroup::Israel,
        label,
    };
    let mut rows = vec![row("a", SentimentLabel::Negative); 3];
    rows.extend(vec![row("b", SentimentLabel::Positive); 3]);
    rows.push(SentimentRow {
        video_id: "ghost".into(),
        group: AspectGroup::Israel,
        label: SentimentLabel::Neutral,
    });
    let t = monthly_trend(&rows, &index, Execution::Sequential);
    let nov = YearMonth { year: 2023, month: 11 };
    let dec = YearMonth { year: 2023, month: 12 };
    assert_eq!(t.shares(nov, AspectGroup::Israel), Some([1.0, 0.0, 0.0]));
    assert_eq!(t.shares(dec, AspectGroup::Israel), Some([0.0, 0.0, 1.0]));
    assert_eq!(t.shares(nov, AspectGroup::Gaza), None, "sparse");
    assert_eq!(t.buckets.len(), 2);
    assert_eq!(t.excluded, vec!["ghost".to_string()]);
}

#[test]
fn scene_shares_and_flags() {
    let (records, labels) = scene_fixture();
    let index = VideoIndex::new(&records);
    let totals = frame_totals();
    let mut d = scene_distribution(&labels, &index, Some(&totals), Execution::parallel()).unwrap();
    // independent oracle: category sums and the frame-total denominator
    let grand: u64 = FRAME_TOTALS.iter().sum();
    assert_eq!(grand, 94_042);
    for (t, counts) in SCENE_COUNTS {
        let cat: u64 = counts.iter().sum();
        assert_eq!(d.category_total(t), cat);
        assert!((d.global_share(t) - cat as f64 / grand as f64).abs() < 1e-15);
    }
    assert_eq!(d.label_total(), 96_703);
    let mismatched: Vec<_> = d
        .flags
        .iter()
        .filter_map(|f| match f {
            DistributionFlag::LabelFrameMismatch { outlet, labels, frames } => Some((outlet.code().to_string(), *labels, *frames)),
            _ => None,
        })
        .collect();
    assert_eq!(mismatched, vec![("DW".to_string(), 3852, 3957), ("TRT".to_string(), 47018, 44252)]);
    let reference: Vec<_> = REFERENCE_SHARES.iter().map(|(t, p)| ReferenceShare { scene_type: *t, pct: *p }).collect();
    d.check_reference(&reference, 0.1);
    let flagged: Vec<_> = d
        .flags
        .iter()
        .filter_map(|f| match f {
            DistributionFlag::ReferenceMismatch { scene_type, computed_pct, .. } => Some((*scene_type, *computed_pct)),
            _ => None,
        })
        .collect();
    assert_eq!(flagged, vec![(SceneType::PoliticalOrDiplomaticEvents, 14.6)]);
}

#[test]
fn scene_share_single_month() {
    let records = vec![record("a", "BBC", day(2024, 3, 1), 1), record("b", "BBC", day(2024, 4, 1), 1)];
    let index = VideoIndex::new(&records);
    let mut labels: Vec<_> = (0..3).map(|i| label("a", i, SceneType::PublicProtestOrDemonstration)).collect();
    labels.push(label("a", 3, SceneType::CombatOrMilitaryAction));
    let mut abstained = label("b", 0, SceneType::CombatOrMilitaryAction);
    abstained.abstain = true;
    labels.push(abstained);
    let s = scene_share_over_time(&labels, &index, Execution::Sequential);
    let mar = YearMonth { year: 2024, month: 3 };
    let apr = YearMonth { year: 2024, month: 4 };
    assert_eq!(s.pct(mar, SceneType::PublicProtestOrDemonstration).unwrap().to_string(), "75.0");
    assert_eq!(s.pct(apr, SceneType::OtherOrUnknown).unwrap().to_string(), "100.0");
    assert!(s.pct(YearMonth { year: 2024, month: 5 }, SceneType::OtherOrUnknown).is_none());
}

#[test]
fn engagement_ordering() {
    let mut records = Vec::new();
    let mut pol = BTreeMap::new();
    for (i, views) in [10u64, 200, 3000].iter().enumerate() {
        records.push(record(&format!("n{i}"), "BBC", day(2024, 1, 1), *views));
        pol.insert(format!("n{i}"), SentimentLabel::Negative);
    }
    for (i, views) in [50_000u64, 90_000, 1_000_000, 0].iter().enumerate() {
        records.push(record(&format!("p{i}"), "BBC", day(2024, 1, 1), *views));
        pol.insert(format!("p{i}"), SentimentLabel::Positive);
    }
    let index = VideoIndex::new(&records);
    let e = engagement_stats(&index, &pol);
    let neg = e.cells[&(outlet("BBC"), SentimentLabel::Negative)];
    let pos = e.cells[&(outlet("BBC"), SentimentLabel::Positive)];
    assert_eq!(neg.n, 3);
    assert!((neg.median_log_views - 201f64.ln()).abs() < 1e-12);
    // order statistics oracle: raw medians 200 < 70000 keep their order after ln(1+v)
    assert!(pos.median_log_views > neg.median_log_views);
    assert!((pos.median_log_views - (50_001f64.ln() + 90_001f64.ln()) / 2.0).abs() < 1e-12);
}

#[test]
fn report_bundle_is_deterministic() {
    let (records, rows) = outlet_fixture(5);
    let index = VideoIndex::new(&records);
    let bundle = |exec| {
        let pol = video_polarities(&rows);
        ReportBundle {
            aspects: Some(aspect_sentiment_table(&rows, &index, exec).unwrap()),
            polarity_summary: Some(polarity_summary(&pol)),
            trend: Some(monthly_trend(&rows, &index, exec)),
            engagement: Some(engagement_stats(&index, &pol)),
            polarities: Some(pol),
            ..Default::default()
        }
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let wa = write_report(a.path(), &bundle(Execution::Sequential), &[]).unwrap();
    let wb = write_report(b.path(), &bundle(Execution::parallel()), &[]).unwrap();
    assert_eq!(wa.len(), wb.len());
    for (pa, pb) in wa.iter().zip(&wb) {
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap(), "{}", pa.display());
    }
    let csv = std::fs::read_to_string(a.path().join("aspect_sentiment.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "AJ,Overall,386,1062,166,1614"));
    assert!(csv.lines().any(|l| l == "AJ,Israel,302,371,19,692"));
    let only = tempfile::tempdir().unwrap();
    let w = write_report(only.path(), &bundle(Execution::Sequential), &["aspect_sentiment".parse().unwrap()]).unwrap();
    assert_eq!(w.len(), 3);
    assert!("bogus".parse::<ReportTable>().is_err());
}

fn arb_rows() -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
    proptest::collection::vec((0usize..6, 0usize..10, 0usize..3), 0..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tables_are_permutation_invariant(items in arb_rows(), seed in any::<u64>()) {
        let records: Vec<_> = (0..6).map(|i| record(&format!("v{i}"), OUTLETS[i % 4], day(2024, 1 + i as u32, 2), i as u64 * 10)).collect();
        let index = VideoIndex::new(&records);
        let rows: Vec<_> = items.iter().map(|&(v, g, l)| SentimentRow {
            video_id: format!("v{v}"),
            group: AspectGroup::ALL[g],
            label: SentimentLabel::ALL[l],
        }).collect();
        let mut shuffled = rows.clone();
        SeededRng::new(seed).shuffle(&mut shuffled);
        let a = aspect_sentiment_table(&rows, &index, Execution::Sequential).unwrap();
        let b = aspect_sentiment_table(&shuffled, &index, Execution::parallel()).unwrap();
        prop_assert_eq!(&a, &b);
        for (o, groups) in &a.outlets {
            let overall = a.outlet_overall(o);
            prop_assert_eq!(overall.total(), groups.values().map(|c| c.total()).sum::<u64>());
        }
        prop_assert_eq!(monthly_trend(&rows, &index, Execution::Sequential), monthly_trend(&shuffled, &index, Execution::parallel()));
        for c in monthly_trend(&rows, &index, Execution::Sequential).buckets.values() {
            let s = c.shares().unwrap();
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert_eq!(video_polarities(&rows), video_polarities(&shuffled));
    }

    #[test]
    fn log_views_monotone(a in any::<u32>(), b in any::<u32>()) {
        let (a, b) = (a as u64, b as u64);
        prop_assert_eq!(a.cmp(&b), log_views(a).partial_cmp(&log_views(b)).unwrap());
    }
}
