//! A small self-contained run directory: three synthetic MJPEG videos, two
//! outlet manifests, a stub backend script and a config. Frames are painted
//! with stub palette colours, so scene labels are known in advance.

use std::path::{Path, PathBuf};

use crate::backend::stub::{palette_colour, StubSceneReply, StubVideo};
use crate::backend::wire::WireSegment;
use crate::backend::StubScript;
use crate::corpus::write_atomic;
use crate::error::{Error, Result};
use crate::eval::SHEET_HEADER;
use crate::frames::{encode_image, write_mjpeg_avi, ImageFormat};

pub const SMOKE_FPS: u32 = 5;
pub const SMOKE_SECONDS: u32 = 4;
const WIDTH: u32 = 32;
const HEIGHT: u32 = 24;

const REFERENCE_PARSE: &str = "\
1\tNetanyahu\tNetanyahu\tPROPN\tNNP\t_\t2\tnsubj\t_\t_
2\twants\twant\tVERB\tVBZ\t_\t0\troot\t_\t_
3\tthe\tthe\tDET\tDT\t_\t5\tdet\t_\t_
4\tIsraeli\tIsraeli\tADJ\tJJ\t_\t5\tamod\t_\t_
5\tregime\tregime\tNOUN\tNN\t_\t2\tobj\t_\t_
6\tto\tto\tPART\tTO\t_\t7\tmark\t_\t_
7\tsurvive\tsurvive\tVERB\tVB\t_\t2\txcomp\t_\tSpaceAfter=No
8\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_";

pub struct SmokeVideo {
    pub video_id: &'static str,
    pub outlet: &'static str,
    pub upload_date: &'static str,
    pub view_count: u64,
    /// One palette reply per second of video.
    pub seconds: [StubSceneReply; SMOKE_SECONDS as usize],
    pub segments: &'static [(f64, f64, &'static str)],
}

use StubSceneReply::*;

pub const SMOKE_VIDEOS: [SmokeVideo; 3] = [
    SmokeVideo {
        video_id: "aj-001",
        outlet: "AJ",
        upload_date: "2023-11-05",
        view_count: 12_000,
        seconds: [
            Scene("combat_or_military_action"),
            Scene("combat_or_military_action"),
            Scene("destruction_or_humanitarian_crisis"),
            Fenced,
        ],
        segments: &[
            (0.0, 1.5, "Israeli strikes killed dozens of Palestinians."),
            (1.5, 3.0, "Netanyahu wants the Israeli regime to survive."),
            (3.0, 4.0, "Hamas fighters killed soldiers."),
        ],
    },
    SmokeVideo {
        video_id: "aj-002",
        outlet: "AJ",
        upload_date: "2023-12-12",
        view_count: 450,
        seconds: [
            Scene("public_protest_or_demonstration"),
            Scene("political_or_diplomatic_events"),
            Abstain,
            Malformed,
        ],
        segments: &[],
    },
    SmokeVideo {
        video_id: "bbc-001",
        outlet: "BBC",
        upload_date: "2024-01-08",
        view_count: 98_000,
        seconds: [
            Scene("news_media_or_interview_settings"),
            Scene("symbolic_or_religious_ritual"),
            Scene("other_or_unknown"),
            Scene("combat_or_military_action"),
        ],
        segments: &[
            (0.0, 1.2, "Protesters support the Palestinians."),
            (1.2, 2.8, "The IDF praised the peace agreement."),
            (2.8, 3.9, "Netanyahu supports Israel."),
        ],
    },
];

#[derive(Debug, Clone)]
pub struct SmokeFixture {
    pub dir: PathBuf,
    pub config_path: PathBuf,
    pub script_path: PathBuf,
}

pub fn smoke_script() -> StubScript {
    let mut script = StubScript::default();
    for v in &SMOKE_VIDEOS {
        script.videos.insert(
            v.video_id.into(),
            StubVideo {
                language: "en".into(),
                confidence: 0.97,
                segments: v
                    .segments
                    .iter()
                    .map(|&(start, end, text)| WireSegment {
                        start,
                        end,
                        text: text.into(),
                    })
                    .collect(),
            },
        );
    }
    script.parses.insert(
        "Netanyahu wants the Israeli regime to survive.".into(),
        REFERENCE_PARSE.into(),
    );
    script
}

fn smoke_config(backend_url: &str) -> String {
    format!(
        r#"store_root = "store"
backend_url = "{backend_url}"
media_dir = "media"
seed = 7

[sampling]
fps_out = 1.0
image_format = "jpeg"

[workers]
asr = 2
absa = 2
vlm = 2

[retry]
max_retries = 1
base_s = 0.0

[eval]
n = 6

[[manifests]]
path = "manifest.AJ.jsonl"
outlet = "AJ"
display_name = "Al Jazeera"

[[manifests]]
path = "manifest.BBC.jsonl"
outlet = "BBC"
"#
    )
}

/// Write the fixture into `dir`. The same call always writes the same bytes.
pub fn write_smoke_fixture(dir: &Path, backend_url: &str) -> Result<SmokeFixture> {
    for v in &SMOKE_VIDEOS {
        let mut frames = Vec::new();
        for reply in v.seconds {
            let img = image::RgbImage::from_pixel(WIDTH, HEIGHT, image::Rgb(palette_colour(reply)));
            let jpeg = encode_image(&img, ImageFormat::Jpeg)?;
            frames.extend(std::iter::repeat_n(jpeg, SMOKE_FPS as usize));
        }
        let path = dir.join("media").join(format!("{}.avi", v.video_id));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_mjpeg_avi(&path, WIDTH, HEIGHT, SMOKE_FPS, 1, &frames)?;
    }
    for outlet in ["AJ", "BBC"] {
        let mut lines = String::new();
        for v in SMOKE_VIDEOS.iter().filter(|v| v.outlet == outlet) {
            lines.push_str(&serde_json::to_string(&serde_json::json!({
                "video_id": v.video_id,
                "outlet": v.outlet,
                "title": format!("Smoke clip {}", v.video_id),
                "upload_date": v.upload_date,
                "view_count": v.view_count,
                "views_snapshot_at": "2024-02-01T00:00:00Z",
                "duration_s": SMOKE_SECONDS as f64,
                "source_url": format!("https://example.org/shorts/{}", v.video_id),
            }))?);
            lines.push('\n');
        }
        write_atomic(&dir.join(format!("manifest.{outlet}.jsonl")), lines.as_bytes())?;
    }
    let script_path = write_atomic(&dir.join("stub_script.json"), &serde_json::to_vec_pretty(&smoke_script())?)?;
    let config_path = write_atomic(&dir.join("config.toml"), smoke_config(backend_url).as_bytes())?;
    Ok(SmokeFixture {
        dir: dir.to_path_buf(),
        config_path,
        script_path,
    })
}

/// Fill every verdict of an annotation sheet, leaving the locked columns
/// untouched. `correct(row)` decides each row.
pub fn fill_sheet(sheet: &Path, correct: impl Fn(usize, &csv::StringRecord) -> bool) -> Result<()> {
    let mut rd = csv::Reader::from_path(sheet)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SHEET_HEADER)?;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let verdict = if correct(i, &rec) { "y" } else { "n" };
        let mut row: Vec<&str> = rec.iter().take(4).collect();
        row.push(verdict);
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(sheet, e.into_error()))?;
    write_atomic(sheet, &bytes)?;
    Ok(())
}
