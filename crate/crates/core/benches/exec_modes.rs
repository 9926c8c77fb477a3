use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use shortlens::absa::SentimentLabel;
use shortlens::analytics::{aspect_sentiment_table, SentimentRow, VideoIndex};
use shortlens::corpus::{OutletId, VideoRecord};
use shortlens::frames::{encode_image, sample_batch, write_mjpeg_avi, FfmpegTools, ImageFormat, SampleJob, SamplingConfig};
use shortlens::linking::{candidate_sentences_batch, AspectGroup, Lexicon};
use shortlens::sampling::SeededRng;
use shortlens::scenes::validate_response;
use shortlens::transcripts::{Transcript, TranscriptSegment};
use shortlens::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel { workers: None })];

fn records(n: usize) -> Vec<VideoRecord> {
    let outlets = ["AJ", "BBC", "DW", "TRT"];
    (0..n)
        .map(|i| VideoRecord {
            video_id: format!("v{i}"),
            outlet: OutletId::new(outlets[i % 4]).unwrap(),
            title: String::new(),
            upload_date: chrono::NaiveDate::from_ymd_opt(2023, 10 + (i % 3) as u32, 1).unwrap(),
            view_count: i as u64 * 37,
            views_snapshot_at: None,
            duration_s: 30.0,
            source_url: String::new(),
            language_status: None,
            has_speech: None,
        })
        .collect()
}

fn aggregation(c: &mut Criterion) {
    let recs = records(2000);
    let index = VideoIndex::new(&recs);
    let mut rng = SeededRng::new(1);
    let labels = [SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive];
    let rows: Vec<SentimentRow> = (0..200_000)
        .map(|_| SentimentRow {
            video_id: format!("v{}", rng.below(2000)),
            group: AspectGroup::ALL[rng.below(10) as usize],
            label: labels[rng.below(3) as usize],
        })
        .collect();
    let mut g = c.benchmark_group("aspect_sentiment_table");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| aspect_sentiment_table(&rows, &index, exec).unwrap())
        });
    }
    g.finish();
}

fn scene_validation(c: &mut Criterion) {
    let replies = [
        r#"{"scene_type":"combat_or_military_action","abstain":false,"text_overlay":true,"evidence":["tank","smoke"]}"#,
        "```json\n{\"scene_type\":\"news_media_or_interview_settings\",\"abstain\":false}\n```",
        r#"{"scene_type":"other_or_unknown","abstain":true}"#,
        "I cannot tell what this is.",
    ];
    let raw: Vec<&str> = (0..20_000).map(|i| replies[i % replies.len()]).collect();
    let mut g = c.benchmark_group("validate_response");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| exec.map(&raw, |r| validate_response(r).is_ok()))
        });
    }
    g.finish();
}

fn sentence_matching(c: &mut Criterion) {
    let lexicon = Lexicon::builtin().unwrap();
    let lines = [
        "Israeli strikes hit the north of the strip.",
        "Officials met in Cairo on Tuesday",
        "and Hamas said talks would resume.",
        "Protesters marched through the city centre.",
    ];
    let transcripts: Vec<Transcript> = (0..2000)
        .map(|v| Transcript {
            video_id: format!("v{v}"),
            language: "en".into(),
            has_speech: true,
            segments: (0..12)
                .map(|i| TranscriptSegment {
                    seg_id: i,
                    start_s: i as f64 * 2.0,
                    end_s: i as f64 * 2.0 + 2.0,
                    text: lines[(v + i as usize) % lines.len()].into(),
                })
                .collect(),
        })
        .collect();
    let mut g = c.benchmark_group("candidate_sentences_batch");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| candidate_sentences_batch(&transcripts, &lexicon, exec))
        });
    }
    g.finish();
}

fn frame_sampling(c: &mut Criterion) {
    let media = tempfile::tempdir().unwrap();
    let jobs: Vec<SampleJob> = (0..8)
        .map(|v| {
            let frames: Vec<Vec<u8>> = (0..60)
                .map(|k| {
                    let img = image::RgbImage::from_pixel(96, 54, image::Rgb([k as u8 * 4, v as u8 * 30, 90]));
                    encode_image(&img, ImageFormat::Jpeg).unwrap()
                })
                .collect();
            let path = media.path().join(format!("v{v}.avi"));
            write_mjpeg_avi(&path, 96, 54, 10, 1, &frames).unwrap();
            SampleJob {
                video_id: format!("v{v}"),
                video_title: format!("video {v}"),
                path,
            }
        })
        .collect();
    let tools = FfmpegTools::default();
    let config = SamplingConfig::default();
    let mut g = c.benchmark_group("sample_batch");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter_with_large_drop(|| {
                let out = tempfile::tempdir().unwrap();
                for r in sample_batch(&jobs, out.path(), &config, &tools, exec) {
                    r.unwrap();
                }
                out
            })
        });
    }
    g.finish();
}

criterion_group!(benches, aggregation, scene_validation, sentence_matching, frame_sampling);
criterion_main!(benches);
