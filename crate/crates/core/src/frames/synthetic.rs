//! Generated frames for tests and benchmarks.

use image::{Rgb, RgbImage};

use super::{MediaSource, StreamInfo};
use crate::error::{Error, Result};

type Painter = Box<dyn Fn(usize) -> [u8; 3] + Send + Sync>;

/// Solid-colour frames at a constant rate. The colour of frame `i` comes from
/// `painter(i)`; a small marker square encodes the index so neighbouring
/// frames differ.
pub struct SyntheticSource {
    info: StreamInfo,
    painter: Painter,
    fail_at: Option<usize>,
}

impl SyntheticSource {
    pub fn new(duration_s: f64, fps: f64, width: u32, height: u32) -> Self {
        Self::with_painter(duration_s, fps, width, height, |i| [(i % 256) as u8, 64, 128])
    }

    pub fn with_painter(
        duration_s: f64,
        fps: f64,
        width: u32,
        height: u32,
        painter: impl Fn(usize) -> [u8; 3] + Send + Sync + 'static,
    ) -> Self {
        let frame_count = (duration_s * fps).round() as usize;
        SyntheticSource {
            info: StreamInfo {
                fps: Some(fps),
                frame_count,
                duration_s: frame_count as f64 / fps,
                timestamps: None,
                width,
                height,
            },
            painter: Box::new(painter),
            fail_at: None,
        }
    }

    /// Variable-rate stream with explicit presentation times.
    pub fn with_timestamps(timestamps: Vec<f64>, duration_s: f64, width: u32, height: u32) -> Self {
        SyntheticSource {
            info: StreamInfo {
                fps: None,
                frame_count: timestamps.len(),
                duration_s,
                timestamps: Some(timestamps),
                width,
                height,
            },
            painter: Box::new(|i| [(i % 256) as u8, 0, 0]),
            fail_at: None,
        }
    }

    /// Make decoding fail at native frame `index` and after.
    pub fn failing_at(mut self, index: usize) -> Self {
        self.fail_at = Some(index);
        self
    }

    pub fn render(&self, index: usize) -> RgbImage {
        let mut img = RgbImage::from_pixel(self.info.width, self.info.height, Rgb((self.painter)(index)));
        let marker = Rgb([(index % 251) as u8, (index / 251 % 251) as u8, 255]);
        for y in 0..self.info.height.min(2) {
            for x in 0..self.info.width.min(2) {
                img.put_pixel(x, y, marker);
            }
        }
        img
    }
}

impl MediaSource for SyntheticSource {
    fn info(&self) -> &StreamInfo {
        &self.info
    }

    fn decode_frames(&mut self, indices: &[usize], sink: &mut dyn FnMut(usize, RgbImage) -> Result<()>) -> Result<()> {
        for &ix in indices {
            if ix >= self.info.frame_count || self.fail_at.is_some_and(|f| ix >= f) {
                return Err(Error::Decode(format!("synthetic frame {ix} unavailable")));
            }
            sink(ix, self.render(ix))?;
        }
        Ok(())
    }
}
