//! Video frame ingestion: Y4M files, raw planar YUV 4:2:0 files, and
//! directories of still images (PNG/PPM/BMP, lexicographic order).
//!
//! Everything downstream operates on the luma plane only; color stills are
//! converted with BT.601 weights. Frames are addressed 1-based throughout.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dct::PartitionConfig;

/// BT.601 luma weight for red.
pub const LUMA_FROM_R: f64 = 0.299;
/// BT.601 luma weight for green.
pub const LUMA_FROM_G: f64 = 0.587;
/// BT.601 luma weight for blue.
pub const LUMA_FROM_B: f64 = 0.114;

/// Width and height of the smallest hashable cell per grid block: each block
/// is a 4x4 grid of regions and each region must tile into 8x8 blocks.
pub const CELL: usize = 32;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error(
        "raw yuv file {path} is {size} bytes, not a positive multiple of the \
         {frame_size}-byte 4:2:0 frame for {width}x{height}"
    )]
    RawSizeMismatch {
        path: PathBuf,
        size: u64,
        frame_size: u64,
        width: usize,
        height: usize,
    },
    #[error("raw yuv input needs explicit dimensions (e.g. 416x240)")]
    RawDimensionsMissing,
    #[error("{path}: unsupported source format")]
    UnsupportedFormat { path: PathBuf },
    #[error("no frames found in {path}")]
    Empty { path: PathBuf },
    #[error("frame {frame} out of range 1..={count} for video {id}")]
    FrameOutOfRange { id: String, frame: u32, count: u32 },
    #[error(
        "frame is {width}x{height}, smaller than one {min_width}x{min_height} hashing cell"
    )]
    CropTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    #[error("plane data length {len} does not match {width}x{height}")]
    PlaneSize {
        len: usize,
        width: usize,
        height: usize,
    },
}

fn io_err(path: &Path, source: io::Error) -> FrameError {
    FrameError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, reason: impl Into<String>) -> FrameError {
    FrameError::Parse {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// A single 8-bit luma plane.
#[derive(Clone, PartialEq, Eq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for FramePlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FramePlane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl FramePlane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(FrameError::PlaneSize {
                len: data.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A plane filled with one value.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }
}

/// BT.601 luma from 8-bit RGB, rounded to nearest.
pub fn bt601_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = LUMA_FROM_R * f64::from(r) + LUMA_FROM_G * f64::from(g) + LUMA_FROM_B * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Anything that can hand out luma planes by 1-based frame index.
pub trait FrameProvider: Sync {
    fn id(&self) -> &str;
    fn frame_count(&self) -> u32;
    fn luma(&self, frame: u32) -> Result<FramePlane, FrameError>;
}

/// Options for [`open_source`].
#[derive(Clone, Copy, Debug, Default)]
pub struct OpenOptions {
    /// Dimensions for raw planar YUV 4:2:0 files, which carry no header.
    pub raw_dimensions: Option<(usize, usize)>,
}

/// A video on disk, opened for random frame access.
#[derive(Debug)]
pub struct VideoSource {
    id: String,
    kind: SourceKind,
}

#[derive(Debug)]
enum SourceKind {
    Y4m {
        path: PathBuf,
        width: usize,
        height: usize,
        /// Byte offset of each frame's luma plane.
        offsets: Vec<u64>,
    },
    RawYuv {
        path: PathBuf,
        width: usize,
        height: usize,
        frame_count: u32,
    },
    ImageDir { files: Vec<PathBuf> },
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "bmp"];

/// Opens a video for reading. Y4M and raw `.yuv` files are recognized by
/// extension; a directory is read as one video whose frames are its image
/// files in lexicographic name order.
pub fn open_source(path: impl AsRef<Path>, options: &OpenOptions) -> Result<VideoSource, FrameError> {
    let path = path.as_ref();
    let id = source_id(path);
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_err(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if files.is_empty() {
            return Err(FrameError::Empty {
                path: path.to_path_buf(),
            });
        }
        return Ok(VideoSource {
            id,
            kind: SourceKind::ImageDir { files },
        });
    }
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("y4m") => {
            let (width, height, offsets) = scan_y4m(path)?;
            Ok(VideoSource {
                id,
                kind: SourceKind::Y4m {
                    path: path.to_path_buf(),
                    width,
                    height,
                    offsets,
                },
            })
        }
        Some("yuv") | Some("raw") => {
            let (width, height) = options
                .raw_dimensions
                .ok_or(FrameError::RawDimensionsMissing)?;
            if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
                return Err(parse_err(path, "raw yuv dimensions must be positive and even"));
            }
            let size = fs::metadata(path).map_err(|e| io_err(path, e))?.len();
            let frame_size = (width * height + 2 * (width / 2) * (height / 2)) as u64;
            if size == 0 || size % frame_size != 0 {
                return Err(FrameError::RawSizeMismatch {
                    path: path.to_path_buf(),
                    size,
                    frame_size,
                    width,
                    height,
                });
            }
            Ok(VideoSource {
                id,
                kind: SourceKind::RawYuv {
                    path: path.to_path_buf(),
                    width,
                    height,
                    frame_count: (size / frame_size) as u32,
                },
            })
        }
        _ => Err(FrameError::UnsupportedFormat {
            path: path.to_path_buf(),
        }),
    }
}

fn source_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Parses a Y4M header and records every frame's luma offset. Only 4:2:0
/// chroma subsampling is accepted; the stream must end on a frame boundary.
fn scan_y4m(path: &Path) -> Result<(usize, usize, Vec<u64>), FrameError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let file_size = file.metadata().map_err(|e| io_err(path, e))?.len();
    let mut reader = BufReader::new(file);

    let mut header = Vec::new();
    reader
        .read_until(b'\n', &mut header)
        .map_err(|e| io_err(path, e))?;
    if header.last() != Some(&b'\n') {
        return Err(parse_err(path, "missing stream header line"));
    }
    let header_text = String::from_utf8_lossy(&header[..header.len() - 1]).into_owned();
    let mut tokens = header_text.split_ascii_whitespace();
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(parse_err(path, "missing YUV4MPEG2 signature"));
    }

    let mut width = 0usize;
    let mut height = 0usize;
    let mut colorspace: Option<String> = None;
    for token in tokens {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => {
                width = value
                    .parse()
                    .map_err(|_| parse_err(path, format!("bad width token {token:?}")))?
            }
            "H" => {
                height = value
                    .parse()
                    .map_err(|_| parse_err(path, format!("bad height token {token:?}")))?
            }
            "C" => colorspace = Some(value.to_string()),
            // Frame rate, interlacing, aspect and X extensions do not affect
            // plane geometry.
            _ => {}
        }
    }
    if let Some(cs) = &colorspace {
        if !cs.starts_with("420") {
            return Err(parse_err(
                path,
                format!("unsupported colorspace C{cs}; only 4:2:0 is handled"),
            ));
        }
    }
    if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(parse_err(
            path,
            format!("bad frame geometry {width}x{height}; 4:2:0 needs positive even dimensions"),
        ));
    }

    let frame_bytes = (width * height + 2 * (width / 2) * (height / 2)) as u64;
    let mut pos = header.len() as u64;
    let mut offsets = Vec::new();
    loop {
        let mut marker = Vec::new();
        let read = reader
            .read_until(b'\n', &mut marker)
            .map_err(|e| io_err(path, e))?;
        if read == 0 {
            break;
        }
        if !marker.starts_with(b"FRAME") || marker.last() != Some(&b'\n') {
            return Err(parse_err(path, "expected FRAME marker"));
        }
        pos += marker.len() as u64;
        if pos + frame_bytes > file_size {
            return Err(parse_err(path, "truncated frame payload"));
        }
        offsets.push(pos);
        reader
            .seek_relative(frame_bytes as i64)
            .map_err(|e| io_err(path, e))?;
        pos += frame_bytes;
    }
    if offsets.is_empty() {
        return Err(FrameError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok((width, height, offsets))
}

fn read_plane_at(path: &Path, offset: u64, width: usize, height: usize) -> Result<FramePlane, FrameError> {
    let mut file = File::open(path).map_err(|e| io_err(path, e))?;
    file.seek(SeekFrom::Start(offset))
        .map_err(|e| io_err(path, e))?;
    let mut data = vec![0u8; width * height];
    file.read_exact(&mut data).map_err(|e| io_err(path, e))?;
    FramePlane::new(width, height, data)
}

fn decode_image_luma(path: &Path) -> Result<FramePlane, FrameError> {
    let img = image::open(path).map_err(|e| parse_err(path, e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            FramePlane::new(w as usize, h as usize, gray.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            let mut data = Vec::with_capacity((w * h) as usize);
            for p in rgb.pixels() {
                data.push(bt601_luma(p.0[0], p.0[1], p.0[2]));
            }
            FramePlane::new(w as usize, h as usize, data)
        }
    }
}

impl FrameProvider for VideoSource {
    fn id(&self) -> &str {
        &self.id
    }

    fn frame_count(&self) -> u32 {
        match &self.kind {
            SourceKind::Y4m { offsets, .. } => offsets.len() as u32,
            SourceKind::RawYuv { frame_count, .. } => *frame_count,
            SourceKind::ImageDir { files, .. } => files.len() as u32,
        }
    }

    fn luma(&self, frame: u32) -> Result<FramePlane, FrameError> {
        let count = self.frame_count();
        if frame == 0 || frame > count {
            return Err(FrameError::FrameOutOfRange {
                id: self.id.clone(),
                frame,
                count,
            });
        }
        let idx = (frame - 1) as usize;
        match &self.kind {
            SourceKind::Y4m {
                path,
                width,
                height,
                offsets,
            } => read_plane_at(path, offsets[idx], *width, *height),
            SourceKind::RawYuv {
                path,
                width,
                height,
                ..
            } => {
                let frame_size = (width * height + 2 * (width / 2) * (height / 2)) as u64;
                read_plane_at(path, u64::from(frame - 1) * frame_size, *width, *height)
            }
            SourceKind::ImageDir { files, .. } => decode_image_luma(&files[idx]),
        }
    }
}

/// A fully decoded video held in memory. Attacks and tests work on these.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoFrames {
    pub id: String,
    pub frames: Vec<FramePlane>,
}

impl VideoFrames {
    pub fn from_planes(id: impl Into<String>, frames: Vec<FramePlane>) -> Self {
        Self {
            id: id.into(),
            frames,
        }
    }

    /// Decodes every frame of `source` into memory.
    pub fn load<P: FrameProvider>(source: &P) -> Result<Self, FrameError> {
        let mut frames = Vec::with_capacity(source.frame_count() as usize);
        for f in 1..=source.frame_count() {
            frames.push(source.luma(f)?);
        }
        Ok(Self {
            id: source.id().to_string(),
            frames,
        })
    }
}

impl FrameProvider for VideoFrames {
    fn id(&self) -> &str {
        &self.id
    }

    fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    fn luma(&self, frame: u32) -> Result<FramePlane, FrameError> {
        let count = self.frame_count();
        if frame == 0 || frame > count {
            return Err(FrameError::FrameOutOfRange {
                id: self.id.clone(),
                frame,
                count,
            });
        }
        Ok(self.frames[(frame - 1) as usize].clone())
    }
}

/// Crops a plane at the top-left corner to the largest size whose width is a
/// multiple of 32·cols and height a multiple of 32·rows, so every grid block
/// splits into a 4x4 grid of 8x8-tileable regions. Already-conforming planes
/// come back unchanged, which makes the crop idempotent.
pub fn crop_for_hashing(plane: &FramePlane, config: &PartitionConfig) -> Result<FramePlane, FrameError> {
    let unit_w = CELL * config.cols() as usize;
    let unit_h = CELL * config.rows() as usize;
    let new_w = plane.width() / unit_w * unit_w;
    let new_h = plane.height() / unit_h * unit_h;
    if new_w == 0 || new_h == 0 {
        return Err(FrameError::CropTooSmall {
            width: plane.width(),
            height: plane.height(),
            min_width: unit_w,
            min_height: unit_h,
        });
    }
    if new_w == plane.width() && new_h == plane.height() {
        return Ok(plane.clone());
    }
    let mut data = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        data.extend_from_slice(&plane.row(y)[..new_w]);
    }
    FramePlane::new(new_w, new_h, data)
}

/// Writes a video as Y4M with 4:2:0 chroma planes filled with the neutral
/// value 128 (the pipeline only ever reads luma back).
pub fn write_y4m(path: impl AsRef<Path>, video: &VideoFrames) -> Result<(), FrameError> {
    let path = path.as_ref();
    let first = video
        .frames
        .first()
        .ok_or_else(|| FrameError::Empty {
            path: path.to_path_buf(),
        })?;
    let (w, h) = (first.width(), first.height());
    if w % 2 != 0 || h % 2 != 0 {
        return Err(parse_err(path, "4:2:0 output needs even dimensions"));
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let chroma = vec![128u8; (w / 2) * (h / 2)];
    writeln!(out, "YUV4MPEG2 W{w} H{h} F25:1 Ip A1:1 C420").map_err(|e| io_err(path, e))?;
    for frame in &video.frames {
        if frame.width() != w || frame.height() != h {
            return Err(parse_err(path, "all frames must share one size"));
        }
        out.write_all(b"FRAME\n").map_err(|e| io_err(path, e))?;
        out.write_all(frame.data()).map_err(|e| io_err(path, e))?;
        out.write_all(&chroma).map_err(|e| io_err(path, e))?;
        out.write_all(&chroma).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Scans a directory for video inputs: recognized video files plus immediate
/// subdirectories treated as image-sequence videos, in lexicographic order.
/// A non-directory path is opened as a single video.
pub fn discover_sources(path: impl AsRef<Path>, options: &OpenOptions) -> Result<Vec<VideoSource>, FrameError> {
    let path = path.as_ref();
    if !path.is_dir() {
        return Ok(vec![open_source(path, options)?]);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| io_err(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            if p.is_dir() {
                return true;
            }
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                Some("y4m") | Some("yuv") | Some("raw")
            )
        })
        .collect();
    entries.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let mut sources = Vec::new();
    let mut seen = BTreeSet::new();
    for entry in entries {
        let src = open_source(&entry, options)?;
        if !seen.insert(src.id().to_string()) {
            return Err(parse_err(
                &entry,
                format!("duplicate video id {:?} in input set", src.id()),
            ));
        }
        sources.push(src);
    }
    if sources.is_empty() {
        return Err(FrameError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(sources)
}
