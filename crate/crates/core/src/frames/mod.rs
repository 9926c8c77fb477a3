//! Uniform-rate frame sampling with stable frame identifiers.
//!
//! Sample `k` sits at `t_k = k / fps_out` and is taken from native frame
//! `round(t_k * fps_native)`; variable-rate streams use the first frame whose
//! timestamp is at or after `t_k`. Sample `k > 0` is kept only when the whole
//! interval `[t_k, t_{k+1})` lies inside the video, so a trailing partial
//! second contributes nothing.

mod avi;
mod ffmpeg;
mod synthetic;

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

pub use avi::{write_mjpeg_avi, AviSource};
pub use ffmpeg::{FfmpegSource, FfmpegTools};
pub use synthetic::SyntheticSource;

use crate::corpus::{read_jsonl, to_jsonl, write_atomic};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const SUPPORTED_FORMATS: [&str; 6] = ["mp4", "webm", "mkv", "mov", "m4v", "avi"];
pub const INDEX_FILE: &str = "index.jsonl";
pub const JPEG_QUALITY: u8 = 90;

const TIME_EPS: f64 = 1e-9;

pub fn supported_formats() -> Vec<&'static str> {
    SUPPORTED_FORMATS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub video_title: String,
    pub video_id: String,
    pub frame_id: u32,
    /// Path relative to the frames root.
    pub image_ref: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Jpeg,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Jpeg => "jpg",
            ImageFormat::Png => "png",
        }
    }
}

impl std::str::FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jpeg" | "jpg" => Ok(ImageFormat::Jpeg),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::Config(format!("unknown image format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub fps_out: f64,
    pub image_format: ImageFormat,
    pub max_frames: Option<u32>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            fps_out: 1.0,
            image_format: ImageFormat::Jpeg,
            max_frames: None,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps_out.is_finite() && self.fps_out > 0.0) {
            return Err(Error::Config(format!("fps_out must be > 0, got {}", self.fps_out)));
        }
        Ok(())
    }
}

/// What a decoder knows about the first video stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamInfo {
    /// Constant native rate; `None` for variable-rate streams.
    pub fps: Option<f64>,
    pub frame_count: usize,
    pub duration_s: f64,
    /// Presentation times relative to the first frame, for variable-rate streams.
    pub timestamps: Option<Vec<f64>>,
    pub width: u32,
    pub height: u32,
}

pub trait MediaSource {
    fn info(&self) -> &StreamInfo;

    /// Decode the frames at strictly increasing `indices`, in order. Stops
    /// at the first failure and returns it; frames already handed to `sink`
    /// stay valid.
    fn decode_frames(&mut self, indices: &[usize], sink: &mut dyn FnMut(usize, RgbImage) -> Result<()>) -> Result<()>;
}

/// `(frame_id, native frame index)` pairs to extract.
pub fn select_frames(info: &StreamInfo, config: &SamplingConfig) -> Vec<(u32, usize)> {
    let mut out: Vec<(u32, usize)> = Vec::new();
    if info.frame_count == 0 {
        return out;
    }
    let cap = config.max_frames.map_or(u32::MAX, |m| m);
    let mut k: u32 = 0;
    while k < cap {
        let t = k as f64 / config.fps_out;
        if k > 0 && (k as f64 + 1.0) / config.fps_out > info.duration_s + TIME_EPS {
            break;
        }
        let index = match (&info.timestamps, info.fps) {
            (Some(ts), _) => ts.iter().position(|&x| x >= t - TIME_EPS),
            (None, Some(fps)) => Some((t * fps).round() as usize).filter(|&i| i < info.frame_count),
            (None, None) => None,
        };
        let Some(index) = index else { break };
        // two samples can land on one native frame when fps_out exceeds the native rate
        if out.last().is_some_and(|&(_, prev)| prev >= index) {
            k += 1;
            continue;
        }
        out.push((k, index));
        k += 1;
    }
    out
}

pub fn encode_image(img: &RgbImage, format: ImageFormat) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    let res = match format {
        ImageFormat::Jpeg => {
            let enc = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, JPEG_QUALITY);
            img.write_with_encoder(enc)
        }
        ImageFormat::Png => img.write_to(&mut buf, image::ImageFormat::Png),
    };
    res.map_err(|e| Error::Decode(format!("encoding frame: {e}")))?;
    Ok(buf.into_inner())
}

/// Identity of one video to sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleJob {
    pub video_id: String,
    pub video_title: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialDecode {
    pub last_good_frame_id: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleOutcome {
    pub video_id: String,
    pub frames: Vec<FrameRecord>,
    /// Set when decoding failed part-way; `frames` then holds what came before.
    pub partial: Option<PartialDecode>,
}

pub fn check_extension(path: &Path) -> Result<&'static str> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    SUPPORTED_FORMATS
        .iter()
        .copied()
        .find(|f| *f == ext)
        .ok_or_else(|| Error::UnsupportedFormat(format!("{} (supported: {})", path.display(), SUPPORTED_FORMATS.join(", "))))
}

/// Open a video with the native AVI reader or the external decoder.
pub fn open_media(path: &Path, tools: &FfmpegTools) -> Result<Box<dyn MediaSource>> {
    match check_extension(path)? {
        "avi" => match AviSource::open(path) {
            Ok(src) => Ok(Box::new(src)),
            // non-MJPEG AVI goes through the external decoder
            Err(Error::UnsupportedFormat(_)) => Ok(Box::new(FfmpegSource::open(path, tools.clone())?)),
            Err(e) => Err(e),
        },
        _ => Ok(Box::new(FfmpegSource::open(path, tools.clone())?)),
    }
}

/// Sample one source, writing `<frames_root>/<video_id>/<frame_id>.<ext>`
/// and the per-video index file.
pub fn sample_source(
    source: &mut dyn MediaSource,
    video_id: &str,
    video_title: &str,
    frames_root: &Path,
    config: &SamplingConfig,
) -> Result<SampleOutcome> {
    config.validate()?;
    if video_id.is_empty() || video_id.contains(['/', '\\']) || video_id.starts_with('.') {
        return Err(Error::Validation(format!("video_id {video_id:?} is not usable as a directory name")));
    }
    let selection = select_frames(source.info(), config);
    let indices: Vec<usize> = selection.iter().map(|&(_, ix)| ix).collect();
    let frame_id_of: std::collections::HashMap<usize, u32> = selection.iter().map(|&(k, ix)| (ix, k)).collect();
    let video_dir = frames_root.join(video_id);
    let mut frames = Vec::with_capacity(selection.len());
    let decoded = source.decode_frames(&indices, &mut |ix, img| {
        let frame_id = frame_id_of[&ix];
        let name = format!("{frame_id}.{}", config.image_format.extension());
        write_atomic(&video_dir.join(&name), &encode_image(&img, config.image_format)?)?;
        frames.push(FrameRecord {
            video_title: video_title.to_string(),
            video_id: video_id.to_string(),
            frame_id,
            image_ref: format!("{video_id}/{name}"),
        });
        Ok(())
    });
    let partial = match decoded {
        Ok(()) => None,
        Err(e @ (Error::Decode(_) | Error::Io { .. })) => {
            let last = frames.last().map(|f| f.frame_id);
            log::warn!("{video_id}: decode failed after frame {last:?}: {e}; keeping {} frames", frames.len());
            Some(PartialDecode {
                last_good_frame_id: last,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(e),
    };
    write_atomic(&video_dir.join(INDEX_FILE), &to_jsonl(&frames)?)?;
    Ok(SampleOutcome {
        video_id: video_id.to_string(),
        frames,
        partial,
    })
}

pub fn sample_frames(job: &SampleJob, frames_root: &Path, config: &SamplingConfig, tools: &FfmpegTools) -> Result<SampleOutcome> {
    let mut source = open_media(&job.path, tools)?;
    sample_source(source.as_mut(), &job.video_id, &job.video_title, frames_root, config)
}

/// Sample many videos; each job writes only under its own directory.
pub fn sample_batch(
    jobs: &[SampleJob],
    frames_root: &Path,
    config: &SamplingConfig,
    tools: &FfmpegTools,
    exec: Execution,
) -> Vec<Result<SampleOutcome>> {
    exec.map(jobs, |job| sample_frames(job, frames_root, config, tools))
}

pub fn read_frame_index(frames_root: &Path, video_id: &str) -> Result<Vec<FrameRecord>> {
    read_jsonl(&frames_root.join(video_id).join(INDEX_FILE))
}
