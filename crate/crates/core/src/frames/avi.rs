//! Minimal RIFF/AVI support for Motion-JPEG video streams.
//!
//! The reader indexes the compressed video chunks of the first video stream
//! (including OpenDML `AVIX` continuation segments) and decodes frames on
//! demand. The writer produces plain AVI 1.0 files with an `idx1` index and
//! is used for fixtures.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use image::RgbImage;

use super::{MediaSource, StreamInfo};
use crate::error::{Error, Result};

const MJPEG_HANDLERS: [&[u8; 4]; 4] = [b"MJPG", b"mjpg", b"AVRn", b"jpeg"];

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

#[derive(Debug, Clone, Copy)]
struct ChunkRef {
    offset: u64,
    len: u32,
}

pub struct AviSource {
    path: PathBuf,
    file: File,
    info: StreamInfo,
    chunks: Vec<ChunkRef>,
}

struct Parsed {
    fps: Option<f64>,
    width: u32,
    height: u32,
    video_stream: Option<u32>,
    streams: u32,
    chunks: Vec<ChunkRef>,
}

impl AviSource {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let bad = |msg: &str| Error::Decode(format!("{}: {msg}", path.display()));
        let mut parsed = Parsed {
            fps: None,
            width: 0,
            height: 0,
            video_stream: None,
            streams: 0,
            chunks: Vec::new(),
        };
        let mut pos = 0u64;
        let mut first = true;
        while pos + 12 <= file_len {
            let mut hdr = [0u8; 12];
            file.seek(SeekFrom::Start(pos)).map_err(|e| Error::io(path, e))?;
            file.read_exact(&mut hdr).map_err(|e| Error::io(path, e))?;
            let size = le_u32(&hdr, 4) as u64;
            let form = &hdr[8..12];
            if &hdr[0..4] != b"RIFF" || (first && form != b"AVI ") || (!first && form != b"AVIX") {
                if first {
                    return Err(bad("not a RIFF AVI file"));
                }
                break;
            }
            let end = (pos + 8 + size).min(file_len);
            walk_list(&mut file, pos + 12, end, &mut parsed).map_err(|e| match e {
                Error::Io { source, .. } => bad(&format!("truncated container: {source}")),
                other => other,
            })?;
            first = false;
            pos = pos + 8 + size + (size & 1);
        }
        let fps = parsed.fps.filter(|f| f.is_finite() && *f > 0.0).ok_or_else(|| bad("no MJPEG video stream"))?;
        let frame_count = parsed.chunks.len();
        Ok(AviSource {
            path: path.to_path_buf(),
            file,
            info: StreamInfo {
                fps: Some(fps),
                frame_count,
                duration_s: frame_count as f64 / fps,
                timestamps: None,
                width: parsed.width,
                height: parsed.height,
            },
            chunks: parsed.chunks,
        })
    }

    /// Compressed bytes of one frame.
    pub fn frame_bytes(&mut self, index: usize) -> Result<Vec<u8>> {
        let c = *self
            .chunks
            .get(index)
            .ok_or_else(|| Error::Decode(format!("frame {index} out of range")))?;
        let mut buf = vec![0u8; c.len as usize];
        self.file
            .seek(SeekFrom::Start(c.offset))
            .and_then(|_| self.file.read_exact(&mut buf))
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(buf)
    }
}

fn walk_list(file: &mut File, mut pos: u64, end: u64, st: &mut Parsed) -> Result<()> {
    let io = |e| Error::io("<avi>", e);
    while pos + 8 <= end {
        let mut hdr = [0u8; 8];
        file.seek(SeekFrom::Start(pos)).map_err(io)?;
        file.read_exact(&mut hdr).map_err(io)?;
        let id: [u8; 4] = hdr[0..4].try_into().expect("4 bytes");
        let size = le_u32(&hdr, 4) as u64;
        let body = pos + 8;
        if &id == b"LIST" {
            // a truncated list is scanned up to the end of the data
            if size >= 4 {
                walk_list(file, body + 4, (body + size).min(end), st)?;
            }
            pos = body + size + (size & 1);
            continue;
        }
        if body + size > end {
            // a truncated trailing chunk ends the scan
            break;
        }
        match &id {
            b"strh" if size >= 36 => {
                let mut b = vec![0u8; size as usize];
                file.read_exact(&mut b).map_err(io)?;
                let stream_ix = st.streams;
                st.streams += 1;
                if &b[0..4] == b"vids" && st.video_stream.is_none() {
                    let handler = &b[4..8];
                    if !MJPEG_HANDLERS.iter().any(|h| h.as_slice() == handler) && handler != [0; 4] {
                        return Err(Error::UnsupportedFormat(format!(
                            "AVI video codec {:?} (only Motion-JPEG is decoded natively)",
                            String::from_utf8_lossy(handler)
                        )));
                    }
                    let scale = le_u32(&b, 20);
                    let rate = le_u32(&b, 24);
                    if scale > 0 {
                        st.fps = Some(rate as f64 / scale as f64);
                    }
                    st.video_stream = Some(stream_ix);
                }
            }
            b"strf" if st.video_stream.is_some() && st.width == 0 && size >= 12 => {
                let mut b = vec![0u8; size as usize];
                file.read_exact(&mut b).map_err(io)?;
                st.width = le_u32(&b, 4);
                st.height = (le_u32(&b, 8) as i32).unsigned_abs();
            }
            [a, b, b'd', b'c' | b'b'] if a.is_ascii_digit() && b.is_ascii_digit() => {
                let ix = ((a - b'0') * 10 + (b - b'0')) as u32;
                if size > 0 && Some(ix) == st.video_stream {
                    st.chunks.push(ChunkRef {
                        offset: body,
                        len: size as u32,
                    });
                }
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Ok(())
}

impl MediaSource for AviSource {
    fn info(&self) -> &StreamInfo {
        &self.info
    }

    fn decode_frames(&mut self, indices: &[usize], sink: &mut dyn FnMut(usize, RgbImage) -> Result<()>) -> Result<()> {
        for &ix in indices {
            let bytes = self.frame_bytes(ix)?;
            let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg)
                .map_err(|e| Error::Decode(format!("{} frame {ix}: {e}", self.path.display())))?;
            sink(ix, img.to_rgb8())?;
        }
        Ok(())
    }
}

/// Write a Motion-JPEG AVI from pre-encoded JPEG frames at `fps_num/fps_den`.
pub fn write_mjpeg_avi(path: &Path, width: u32, height: u32, fps_num: u32, fps_den: u32, frames: &[Vec<u8>]) -> Result<()> {
    let n = frames.len() as u32;
    let max_frame = frames.iter().map(|f| f.len()).max().unwrap_or(0) as u32;

    let mut avih = Vec::with_capacity(56);
    for v in [
        (1_000_000u64 * fps_den as u64 / fps_num.max(1) as u64) as u32, // microseconds per frame
        0,
        0,
        0x10, // AVIF_HASINDEX
        n,
        0,
        1,
        max_frame,
        width,
        height,
        0,
        0,
        0,
        0,
    ] {
        avih.extend_from_slice(&v.to_le_bytes());
    }

    let mut strh = Vec::with_capacity(56);
    strh.extend_from_slice(b"vids");
    strh.extend_from_slice(b"MJPG");
    for v in [0u32, 0, 0, fps_den, fps_num, 0, n, max_frame, u32::MAX, 0] {
        strh.extend_from_slice(&v.to_le_bytes());
    }
    for v in [0u16, 0, width as u16, height as u16] {
        strh.extend_from_slice(&v.to_le_bytes());
    }

    let mut strf = Vec::with_capacity(40);
    strf.extend_from_slice(&40u32.to_le_bytes());
    strf.extend_from_slice(&width.to_le_bytes());
    strf.extend_from_slice(&height.to_le_bytes());
    strf.extend_from_slice(&1u16.to_le_bytes());
    strf.extend_from_slice(&24u16.to_le_bytes());
    strf.extend_from_slice(b"MJPG");
    strf.extend_from_slice(&(width * height * 3).to_le_bytes());
    strf.extend_from_slice(&[0u8; 16]);

    let strl = list(b"strl", &[chunk(b"strh", &strh), chunk(b"strf", &strf)].concat());
    let hdrl = list(b"hdrl", &[chunk(b"avih", &avih), strl].concat());

    let mut movi_body = Vec::new();
    let mut idx1 = Vec::new();
    for f in frames {
        let offset = movi_body.len() as u32 + 4; // relative to the 'movi' fourcc
        idx1.extend_from_slice(b"00dc");
        idx1.extend_from_slice(&0x10u32.to_le_bytes()); // AVIIF_KEYFRAME
        idx1.extend_from_slice(&offset.to_le_bytes());
        idx1.extend_from_slice(&(f.len() as u32).to_le_bytes());
        movi_body.extend_from_slice(&chunk(b"00dc", f));
    }
    let movi = list(b"movi", &movi_body);

    let mut body = b"AVI ".to_vec();
    body.extend_from_slice(&hdrl);
    body.extend_from_slice(&movi);
    body.extend_from_slice(&chunk(b"idx1", &idx1));

    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn chunk(id: &[u8; 4], data: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(data.len() + 9);
    v.extend_from_slice(id);
    v.extend_from_slice(&(data.len() as u32).to_le_bytes());
    v.extend_from_slice(data);
    if data.len() % 2 == 1 {
        v.push(0);
    }
    v
}

fn list(kind: &[u8; 4], data: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(data.len() + 12);
    v.extend_from_slice(b"LIST");
    v.extend_from_slice(&(data.len() as u32 + 4).to_le_bytes());
    v.extend_from_slice(kind);
    v.extend_from_slice(data);
    v
}
