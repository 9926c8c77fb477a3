//! Decoding through external `ffprobe`/`ffmpeg` processes.
//!
//! Probing reads the first video stream's rates and per-frame timestamps;
//! decoding streams raw RGB frames over a pipe with frame dropping and
//! duplication disabled, so frame `n` of the pipe is decoded frame `n`.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use image::RgbImage;
use serde::Deserialize;

use super::{MediaSource, StreamInfo};
use crate::error::{Error, Result};

const VFR_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct FfmpegTools {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegTools {
    fn default() -> Self {
        FfmpegTools {
            ffmpeg: std::env::var_os("SHORTLENS_FFMPEG").map_or_else(|| "ffmpeg".into(), PathBuf::from),
            ffprobe: std::env::var_os("SHORTLENS_FFPROBE").map_or_else(|| "ffprobe".into(), PathBuf::from),
        }
    }
}

pub struct FfmpegSource {
    path: PathBuf,
    tools: FfmpegTools,
    info: StreamInfo,
}

#[derive(Deserialize)]
struct ProbeOut {
    #[serde(default)]
    streams: Vec<ProbeStream>,
    #[serde(default)]
    frames: Vec<ProbeFrame>,
    format: Option<ProbeFormat>,
}

#[derive(Deserialize)]
struct ProbeStream {
    width: Option<u32>,
    height: Option<u32>,
    r_frame_rate: Option<String>,
    avg_frame_rate: Option<String>,
}

#[derive(Deserialize)]
struct ProbeFrame {
    best_effort_timestamp_time: Option<String>,
}

#[derive(Deserialize)]
struct ProbeFormat {
    duration: Option<String>,
}

pub(crate) fn parse_rate(s: &str) -> Option<f64> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let (n, d): (f64, f64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
    (d != 0.0 && n > 0.0).then_some(n / d)
}

fn missing(tool: &Path, e: std::io::Error) -> Error {
    Error::ToolMissing {
        tool: tool.display().to_string(),
        message: format!("{e}; install ffmpeg or convert the video to Motion-JPEG AVI"),
    }
}

impl FfmpegSource {
    pub fn open(path: &Path, tools: FfmpegTools) -> Result<Self> {
        let out = Command::new(&tools.ffprobe)
            .args(["-v", "error", "-select_streams", "v:0", "-show_entries"])
            .arg("stream=width,height,r_frame_rate,avg_frame_rate:format=duration:frame=best_effort_timestamp_time")
            .args(["-of", "json"])
            .arg(path)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| missing(&tools.ffprobe, e))?;
        if !out.status.success() {
            return Err(Error::Decode(format!(
                "{}: ffprobe failed: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let probe: ProbeOut = serde_json::from_slice(&out.stdout)
            .map_err(|e| Error::Decode(format!("{}: unreadable ffprobe output: {e}", path.display())))?;
        let info = stream_info_from_probe(probe).map_err(|m| Error::Decode(format!("{}: {m}", path.display())))?;
        Ok(FfmpegSource {
            path: path.to_path_buf(),
            tools,
            info,
        })
    }
}

fn stream_info_from_probe(probe: ProbeOut) -> std::result::Result<StreamInfo, String> {
    let stream = probe.streams.into_iter().next().ok_or("no video stream")?;
    let (width, height) = (stream.width.unwrap_or(0), stream.height.unwrap_or(0));
    if width == 0 || height == 0 {
        return Err("video stream has no dimensions".into());
    }
    let timestamps: Vec<f64> = probe
        .frames
        .iter()
        .filter_map(|f| f.best_effort_timestamp_time.as_deref()?.parse().ok())
        .collect();
    if timestamps.is_empty() {
        return Err("no decodable frames".into());
    }
    let r = stream.r_frame_rate.as_deref().and_then(parse_rate);
    let avg = stream.avg_frame_rate.as_deref().and_then(parse_rate);
    let constant = match (r, avg) {
        (Some(r), Some(a)) => (r - a).abs() / r < VFR_TOLERANCE,
        _ => false,
    };
    let fps = if constant { r } else { None };
    let start = timestamps[0];
    let timestamps: Vec<f64> = timestamps.iter().map(|t| t - start).collect();
    let container = probe.format.and_then(|f| f.duration?.parse::<f64>().ok());
    let duration_s = match fps {
        Some(f) => timestamps.len() as f64 / f,
        None => container.unwrap_or_else(|| timestamps.last().copied().unwrap_or(0.0)),
    };
    Ok(StreamInfo {
        fps,
        frame_count: timestamps.len(),
        duration_s,
        timestamps: if constant { None } else { Some(timestamps) },
        width,
        height,
    })
}

impl MediaSource for FfmpegSource {
    fn info(&self) -> &StreamInfo {
        &self.info
    }

    fn decode_frames(&mut self, indices: &[usize], sink: &mut dyn FnMut(usize, RgbImage) -> Result<()>) -> Result<()> {
        let Some(&last) = indices.last() else {
            return Ok(());
        };
        let mut child = Command::new(&self.tools.ffmpeg)
            .args(["-v", "error", "-nostdin", "-threads", "1", "-i"])
            .arg(&self.path)
            .args(["-map", "0:v:0", "-fps_mode", "passthrough", "-f", "rawvideo", "-pix_fmt", "rgb24", "-"])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| missing(&self.tools.ffmpeg, e))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let frame_len = (self.info.width * self.info.height * 3) as usize;
        let mut buf = vec![0u8; frame_len];
        let mut wanted = indices.iter().peekable();
        let mut result = Ok(());
        for n in 0..=last {
            if let Err(e) = stdout.read_exact(&mut buf) {
                result = Err(Error::Decode(format!("{}: stream ended at frame {n}: {e}", self.path.display())));
                break;
            }
            if wanted.peek() == Some(&&n) {
                wanted.next();
                let img = RgbImage::from_raw(self.info.width, self.info.height, buf.clone()).expect("buffer size matches");
                if let Err(e) = sink(n, img) {
                    result = Err(e);
                    break;
                }
            }
        }
        drop(stdout);
        let _ = child.kill();
        let output = child.wait_with_output().map_err(|e| Error::io(&self.path, e))?;
        if result.is_err() && !output.stderr.is_empty() {
            log::warn!("ffmpeg: {}", String::from_utf8_lossy(&output.stderr).trim());
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(json: &str) -> std::result::Result<StreamInfo, String> {
        stream_info_from_probe(serde_json::from_str(json).unwrap())
    }

    #[test]
    fn rate_parsing() {
        assert_eq!(parse_rate("30/1"), Some(30.0));
        assert!((parse_rate("30000/1001").unwrap() - 29.97).abs() < 1e-2);
        assert_eq!(parse_rate("0/0"), None);
        assert_eq!(parse_rate("25"), Some(25.0));
    }

    #[test]
    fn constant_rate_probe() {
        let info = probe(
            r#"{"streams":[{"width":4,"height":2,"r_frame_rate":"10/1","avg_frame_rate":"10/1"}],
                "frames":[{"best_effort_timestamp_time":"0.0"},{"best_effort_timestamp_time":"0.1"},{"best_effort_timestamp_time":"0.2"}],
                "format":{"duration":"0.3"}}"#,
        )
        .unwrap();
        assert_eq!(info.fps, Some(10.0));
        assert_eq!(info.frame_count, 3);
        assert!(info.timestamps.is_none());
    }

    #[test]
    fn variable_rate_probe_keeps_timestamps() {
        let info = probe(
            r#"{"streams":[{"width":4,"height":2,"r_frame_rate":"30/1","avg_frame_rate":"1000/47"}],
                "frames":[{"best_effort_timestamp_time":"0.5"},{"best_effort_timestamp_time":"0.6"},{"best_effort_timestamp_time":"1.7"}],
                "format":{"duration":"1.3"}}"#,
        )
        .unwrap();
        assert_eq!(info.fps, None);
        assert_eq!(info.timestamps.as_deref(), Some(&[0.0, 0.09999999999999998, 1.2][..]));
        assert_eq!(info.duration_s, 1.3);
    }

    #[test]
    fn missing_binary_is_reported() {
        let tools = FfmpegTools {
            ffmpeg: "/nonexistent/ffmpeg".into(),
            ffprobe: "/nonexistent/ffprobe".into(),
        };
        let err = FfmpegSource::open(Path::new("x.mp4"), tools).err().unwrap();
        assert!(matches!(err, Error::ToolMissing { .. }));
    }
}
