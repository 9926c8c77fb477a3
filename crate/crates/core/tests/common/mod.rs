//! Published counts and builders that expand them into synthetic inputs.
#![allow(dead_code)]

use chrono::NaiveDate;
use shortlens::absa::{GoldExample, Provenance, SentimentLabel};
use shortlens::analytics::SentimentRow;
use shortlens::corpus::{LanguageStatus, OutletId, VideoRecord};
use shortlens::linking::AspectGroup;
use shortlens::scenes::{ParseStatus, SceneLabel, SceneType};

pub const OUTLETS: [&str; 4] = ["AJ", "BBC", "DW", "TRT"];

/// (outlet, videos, spoken)
pub const CORPUS_COUNTS: [(&str, u64, u64); 4] = [("AJ", 924, 838), ("BBC", 68, 68), ("DW", 85, 83), ("TRT", 1258, 1249)];
pub const CORPUS_SPOKEN_PCT: [(&str, &str); 4] = [("AJ", "90.7"), ("BBC", "100.0"), ("DW", "97.6"), ("TRT", "99.2")];

/// (group, neg, neut, pos, total)
pub const GOLD_DISTRIBUTION: [(AspectGroup, u64, u64, u64, u64); 10] = [
    (AspectGroup::Arab, 0, 26, 2, 28),
    (AspectGroup::Gaza, 141, 243, 183, 567),
    (AspectGroup::Islam, 112, 279, 234, 625),
    (AspectGroup::Islamism, 612, 570, 244, 1426),
    (AspectGroup::Israel, 551, 671, 398, 1620),
    (AspectGroup::IsraeliP, 34, 38, 1, 73),
    (AspectGroup::Jews, 199, 272, 110, 581),
    (AspectGroup::OpposeP, 0, 11, 2, 13),
    (AspectGroup::Palestine, 452, 623, 442, 1517),
    (AspectGroup::Zion, 232, 274, 25, 531),
];

pub type OutletRows = [(AspectGroup, u64, u64, u64, u64); 10];

const G: [AspectGroup; 10] = [
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

const fn rows(v: [(u64, u64, u64, u64); 10]) -> OutletRows {
    let mut out = [(AspectGroup::Arab, 0, 0, 0, 0); 10];
    let mut i = 0;
    while i < 10 {
        out[i] = (G[i], v[i].0, v[i].1, v[i].2, v[i].3);
        i += 1;
    }
    out
}

/// (outlet, rows, printed Overall)
pub type Overall = (u64, u64, u64, u64);

pub const OUTLET_TABLES: [(&str, OutletRows, Overall); 4] = [
    (
        "AJ",
        rows([
            (0, 23, 2, 25),
            (17, 251, 41, 309),
            (0, 8, 0, 8),
            (19, 112, 3, 134),
            (302, 371, 19, 692),
            (27, 66, 3, 96),
            (8, 34, 1, 43),
            (2, 9, 0, 11),
            (7, 184, 97, 288),
            (4, 4, 0, 8),
        ]),
        (386, 1062, 166, 1614),
    ),
    (
        "BBC",
        rows([
            (0, 1, 0, 1),
            (2, 51, 0, 53),
            (0, 0, 0, 0),
            (10, 36, 0, 46),
            (32, 80, 4, 116),
            (0, 1, 0, 1),
            (0, 1, 0, 1),
            (0, 0, 0, 0),
            (0, 17, 1, 18),
            (0, 0, 0, 0),
        ]),
        (44, 187, 5, 236),
    ),
    (
        "DW",
        rows([
            (0, 2, 0, 2),
            (0, 14, 2, 16),
            (0, 0, 0, 0),
            (3, 23, 0, 26),
            (13, 50, 0, 63),
            (0, 3, 0, 3),
            (0, 0, 0, 0),
            (1, 4, 0, 5),
            (0, 9, 4, 13),
            (0, 0, 0, 0),
        ]),
        (17, 105, 6, 128),
    ),
    (
        "TRT",
        rows([
            (0, 10, 3, 13),
            (12, 136, 44, 192),
            (2, 18, 8, 28),
            (11, 53, 2, 66),
            (205, 154, 48, 407),
            (15, 19, 2, 36),
            (4, 56, 4, 64),
            (0, 8, 0, 8),
            (20, 205, 200, 425),
            (18, 12, 5, 35),
        ]),
        (287, 671, 316, 1274),
    ),
];

/// (type, true, false, total, printed F.%)
pub const EVAL_COUNTS: [(SceneType, u64, u64, u64, &str); 7] = [
    (SceneType::CombatOrMilitaryAction, 65, 4, 69, "5.8"),
    (SceneType::DestructionOrHumanitarianCrisis, 69, 12, 81, "14.8"),
    (SceneType::NewsMediaOrInterviewSettings, 89, 2, 91, "2.3"),
    (SceneType::OtherOrUnknown, 165, 63, 228, "27.6"),
    (SceneType::PoliticalOrDiplomaticEvents, 119, 13, 132, "9.8"),
    (SceneType::PublicProtestOrDemonstration, 54, 2, 56, "3.6"),
    (SceneType::SymbolicOrReligiousRitual, 133, 9, 142, "6.3"),
];

/// (type, [AJ, BBC, DW, TRT])
pub const SCENE_COUNTS: [(SceneType, [u64; 4]); 7] = [
    (SceneType::CombatOrMilitaryAction, [2071, 208, 295, 1920]),
    (SceneType::DestructionOrHumanitarianCrisis, [6116, 445, 580, 8255]),
    (SceneType::PoliticalOrDiplomaticEvents, [5315, 137, 713, 7585]),
    (SceneType::NewsMediaOrInterviewSettings, [17468, 1223, 906, 13070]),
    (SceneType::PublicProtestOrDemonstration, [4345, 184, 531, 6702]),
    (SceneType::SymbolicOrReligiousRitual, [1382, 48, 114, 1901]),
    (SceneType::OtherOrUnknown, [6275, 616, 713, 7585]),
];

/// Sampled frames per outlet, [AJ, BBC, DW, TRT].
pub const FRAME_TOTALS: [u64; 4] = [42972, 2861, 3957, 44252];
/// Video IDs row of the scene table.
pub const SCENE_VIDEOS: [u64; 4] = [924, 68, 85, 1258];

/// Global scene shares quoted alongside the counts.
pub const REFERENCE_SHARES: [(SceneType, f64); 7] = [
    (SceneType::CombatOrMilitaryAction, 4.8),
    (SceneType::DestructionOrHumanitarianCrisis, 16.4),
    (SceneType::PoliticalOrDiplomaticEvents, 11.8),
    (SceneType::NewsMediaOrInterviewSettings, 34.7),
    (SceneType::PublicProtestOrDemonstration, 12.5),
    (SceneType::SymbolicOrReligiousRitual, 3.7),
    (SceneType::OtherOrUnknown, 16.2),
];

/// Video-level polarity counts (neutral, positive, negative).
pub const POLARITY: (u64, u64, u64) = (440, 136, 206);

pub fn outlet(code: &str) -> OutletId {
    OutletId::new(code).unwrap()
}

pub fn record(id: &str, outlet_code: &str, date: NaiveDate, views: u64) -> VideoRecord {
    VideoRecord {
        video_id: id.into(),
        outlet: outlet(outlet_code),
        title: format!("title {id}"),
        upload_date: date,
        view_count: views,
        views_snapshot_at: None,
        duration_s: 30.0,
        source_url: String::new(),
        language_status: Some(LanguageStatus::English),
        has_speech: Some(true),
    }
}

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Corpus fixture: per outlet, `spoken` videos with speech and the rest without.
pub fn corpus_records() -> Vec<VideoRecord> {
    let mut out = Vec::new();
    for (code, videos, spoken) in CORPUS_COUNTS {
        for i in 0..videos {
            let mut r = record(&format!("{code}-{i:04}"), code, day(2024, 1, 1), 100);
            r.has_speech = Some(i < spoken);
            out.push(r);
        }
    }
    out
}

/// Corpus fixture plus 36 non-English records spread over outlets.
pub fn collected_records() -> Vec<VideoRecord> {
    let mut out = corpus_records();
    for i in 0..36 {
        let mut r = record(&format!("ne-{i:02}"), OUTLETS[i % 4], day(2024, 2, 1), 10);
        r.language_status = Some(LanguageStatus::NonEnglish);
        r.has_speech = None;
        out.push(r);
    }
    out
}

pub fn gold_fixture() -> Vec<GoldExample> {
    let mut out = Vec::new();
    for (group, neg, neut, pos, _) in GOLD_DISTRIBUTION {
        for (label, n) in [(SentimentLabel::Negative, neg), (SentimentLabel::Neutral, neut), (SentimentLabel::Positive, pos)] {
            for i in 0..n {
                out.push(GoldExample {
                    text: format!("sentence {i} about {} ({label})", group.name()),
                    aspect: group.name().to_string(),
                    group,
                    label,
                    provenance: Provenance::BaseGold,
                });
            }
        }
    }
    out
}

/// Rows and manifest for the outlet table fixture. Each outlet gets `videos`
/// videos; rows are dealt to them round-robin.
pub fn outlet_fixture(videos_per_outlet: usize) -> (Vec<VideoRecord>, Vec<SentimentRow>) {
    let mut records = Vec::new();
    let mut rows_out = Vec::new();
    for (code, rows, _) in OUTLET_TABLES {
        for v in 0..videos_per_outlet {
            records.push(record(&format!("{code}-v{v}"), code, day(2024, 1 + (v % 12) as u32, 1), 1000 + v as u64));
        }
        let mut k = 0usize;
        for (group, neg, neut, pos, _) in rows {
            for (label, n) in [(SentimentLabel::Negative, neg), (SentimentLabel::Neutral, neut), (SentimentLabel::Positive, pos)] {
                for _ in 0..n {
                    rows_out.push(SentimentRow {
                        video_id: format!("{code}-v{}", k % videos_per_outlet),
                        group,
                        label,
                    });
                    k += 1;
                }
            }
        }
    }
    (records, rows_out)
}

pub fn label(video_id: &str, frame_id: u32, t: SceneType) -> SceneLabel {
    SceneLabel {
        video_id: video_id.into(),
        frame_id,
        scene_type: t,
        abstain: false,
        text_overlay: false,
        evidence: vec![],
        raw_response: None,
        parse_status: ParseStatus::Ok,
        prompt_hash: "fixture".into(),
        model_version: "fixture".into(),
    }
}

/// Labels and manifest reproducing the reference scene counts, dealt over each
/// outlet's Video IDs count.
pub fn scene_fixture() -> (Vec<VideoRecord>, Vec<SceneLabel>) {
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for (o, code) in OUTLETS.iter().enumerate() {
        let videos = SCENE_VIDEOS[o] as usize;
        for v in 0..videos {
            records.push(record(&format!("{code}-{v}"), code, day(2024, 1 + (v % 12) as u32, 1), 10));
        }
        let mut frame_of = vec![0u32; videos];
        let mut k = 0usize;
        for (t, counts) in SCENE_COUNTS {
            for _ in 0..counts[o] {
                let v = k % videos;
                labels.push(label(&format!("{code}-{v}"), frame_of[v], t));
                frame_of[v] += 1;
                k += 1;
            }
        }
    }
    (records, labels)
}

pub fn frame_totals() -> std::collections::BTreeMap<OutletId, u64> {
    OUTLETS.iter().zip(FRAME_TOTALS).map(|(c, n)| (outlet(c), n)).collect()
}
