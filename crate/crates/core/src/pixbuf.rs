//! Binary PNM (P5/P6, maxval 255) frames and on-disk frame sequences.
//!
//! Coordinates are fixed crate-wide: origin at the top-left sample, x grows
//! to the right, y grows downward.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("malformed PNM header at byte {offset}: {reason}")]
    Header { offset: usize, reason: &'static str },
    #[error("unsupported maxval {maxval} at byte {offset} (only 255 is accepted)")]
    Maxval { offset: usize, maxval: u32 },
    #[error("truncated payload at byte {offset}: expected {expected} sample bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid file pattern {pattern:?}: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: glob::PatternError,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: PnmError,
    },
    #[error("{}: frame is {found}, sequence is {expected}", path.display())]
    DimensionMismatch {
        path: PathBuf,
        expected: FrameShape,
        found: FrameShape,
    },
}

/// Width, height and channel count of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameShape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl fmt::Display for FrameShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.width, self.height, self.channels)
    }
}

/// An 8-bit raster, row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Frame {
    /// Builds a frame, returning `None` when the sample count does not match
    /// the geometry or the geometry itself is invalid.
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Option<Self> {
        let valid = width >= 1
            && height >= 1
            && (channels == 1 || channels == 3)
            && samples.len() == width * height * channels;
        valid.then_some(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("invalid frame geometry")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> FrameShape {
        FrameShape {
            width: self.width,
            height: self.height,
            channels: self.channels,
        }
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Samples of the pixel at `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (y * self.width + x) * self.channels;
        &self.samples[start..start + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let start = (y * self.width + x) * self.channels;
        &mut self.samples[start..start + self.channels]
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<(u32, usize), PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or(PnmError::Header {
                    offset: start,
                    reason: "numeric field overflows",
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PnmError::Header {
                offset: start,
                reason: what,
            });
        }
        Ok((value, start))
    }
}

/// Decodes a binary graymap (`P5`) or pixmap (`P6`) with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<Frame, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(PnmError::Header {
                offset: 0,
                reason: "expected magic \"P5\" or \"P6\"",
            })
        }
    };
    let mut reader = HeaderReader { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PnmError::Header {
            offset: 2,
            reason: "expected whitespace after magic",
        });
    }
    let (width, w_off) = reader.number("expected width")?;
    let (height, h_off) = reader.number("expected height")?;
    let (maxval, m_off) = reader.number("expected maxval")?;
    if width == 0 {
        return Err(PnmError::Header {
            offset: w_off,
            reason: "width must be at least 1",
        });
    }
    if height == 0 {
        return Err(PnmError::Header {
            offset: h_off,
            reason: "height must be at least 1",
        });
    }
    if maxval != 255 {
        return Err(PnmError::Maxval {
            offset: m_off,
            maxval,
        });
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(reader.pos) {
        Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
        _ => {
            return Err(PnmError::Header {
                offset: reader.pos,
                reason: "expected single whitespace before raster",
            })
        }
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(PnmError::Header {
            offset: w_off,
            reason: "image dimensions overflow",
        })?;
    let payload = &bytes[reader.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated {
            offset: bytes.len(),
            expected,
            found: payload.len(),
        });
    }
    Ok(Frame {
        width,
        height,
        channels,
        samples: payload[..expected].to_vec(),
    })
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` (or `P6`) followed by raw samples.
pub fn encode_pnm(frame: &Frame) -> Vec<u8> {
    let magic = if frame.channels == 1 { "P5" } else { "P6" };
    let header = format!("{magic}\n{} {}\n255\n", frame.width, frame.height);
    let mut out = Vec::with_capacity(header.len() + frame.samples.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&frame.samples);
    out
}

/// Integer BT.601 luma with round-half-up. Single-channel frames are
/// returned unchanged.
pub fn to_grayscale(frame: &Frame) -> Frame {
    if frame.channels == 1 {
        return frame.clone();
    }
    let samples = frame
        .samples
        .chunks_exact(3)
        .map(|px| {
            let (r, g, b) = (u32::from(px[0]), u32::from(px[1]), u32::from(px[2]));
            ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
        })
        .collect();
    Frame {
        width: frame.width,
        height: frame.height,
        channels: 1,
        samples,
    }
}

pub fn read_frame(path: &Path) -> Result<Frame, SequenceError> {
    let bytes = fs::read(path).map_err(|source| SequenceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pnm(&bytes).map_err(|source| SequenceError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_frame(path: &Path, frame: &Frame) -> std::io::Result<()> {
    fs::write(path, encode_pnm(frame))
}

/// File-backed frames ordered lexicographically by file name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameSequence {
    paths: Vec<PathBuf>,
}

impl FrameSequence {
    pub fn from_paths(mut paths: Vec<PathBuf>) -> Self {
        paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()).then_with(|| a.cmp(b)));
        Self { paths }
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Decodes frames in order. Every frame after the first must match the
    /// first frame's shape.
    pub fn frames(&self) -> SequenceFrames<'_> {
        SequenceFrames {
            paths: self.paths.iter(),
            shape: None,
        }
    }
}

pub struct SequenceFrames<'a> {
    paths: std::slice::Iter<'a, PathBuf>,
    shape: Option<FrameShape>,
}

impl Iterator for SequenceFrames<'_> {
    type Item = Result<Frame, SequenceError>;

    fn next(&mut self) -> Option<Self::Item> {
        let path = self.paths.next()?;
        let frame = match read_frame(path) {
            Ok(f) => f,
            Err(e) => return Some(Err(e)),
        };
        match self.shape {
            None => self.shape = Some(frame.shape()),
            Some(expected) if expected != frame.shape() => {
                return Some(Err(SequenceError::DimensionMismatch {
                    path: path.clone(),
                    expected,
                    found: frame.shape(),
                }))
            }
            Some(_) => {}
        }
        Some(Ok(frame))
    }
}

/// Lists the files in `directory` whose names match the glob `pattern`.
pub fn load_sequence(directory: &Path, pattern: &str) -> Result<FrameSequence, SequenceError> {
    let matcher = glob::Pattern::new(pattern).map_err(|source| SequenceError::Pattern {
        pattern: pattern.to_string(),
        source,
    })?;
    let io_err = |source| SequenceError::Io {
        path: directory.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(directory).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if !entry.file_type().map_err(io_err)?.is_file() {
            continue;
        }
        if entry.file_name().to_str().is_some_and(|n| matcher.matches(n)) {
            paths.push(entry.path());
        }
    }
    Ok(FrameSequence::from_paths(paths))
}
