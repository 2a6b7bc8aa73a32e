//! The carrier index: every block hash in a video collection, mapped to the
//! ordered list of places it occurs.
//!
//! Buckets are direct-addressed by hash value (0..2^L), so an empty bucket is
//! an O(1) "this pattern has no carrier" answer. Insertion order is fixed —
//! videos in input order, frames ascending, blocks in raster order — which
//! keeps lookups and the serialized form deterministic.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::dct::{frame_dc_vectors, DcVector, PartitionConfig};
use crate::frame::{crop_for_hashing, FrameError, FrameProvider};
use crate::hash::{hash_block, HashMethod, HashSequence};

const MAGIC: &[u8; 4] = b"CVSI";
const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("video {id}: {source}")]
    Frame {
        id: String,
        #[source]
        source: FrameError,
    },
    #[error(transparent)]
    Partition(#[from] crate::dct::PartitionError),
    #[error("no videos supplied")]
    NoVideos,
    #[error("duplicate video id {0:?}")]
    DuplicateVideo(String),
    #[error("video id {0:?} does not fit the on-disk format (over 65535 bytes)")]
    VideoIdTooLong(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("index checksum failure: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u8),
    #[error("invalid partition parameters in index: {0}")]
    BadConfig(#[from] crate::dct::ConfigError),
    #[error("bucket table holds {got} buckets, expected {expected}")]
    BucketCount { got: usize, expected: usize },
    #[error("location {0:?} references an unknown video")]
    UnknownVideo(String),
    #[error("location ({x}, {y}) frame {frame} outside video {id} ({cols}x{rows} grid, {frames} frames)")]
    LocationOutOfRange {
        id: String,
        frame: u32,
        x: u16,
        y: u16,
        cols: u16,
        rows: u16,
        frames: u32,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum LookupError {
    #[error("segment is {got} bits but the index holds {expected}-bit hashes")]
    LengthMismatch { expected: u8, got: u8 },
    #[error("no carrier block for bit pattern {pattern}")]
    EmptyBucket { pattern: String },
}

/// One place a hash value occurs: a block of a frame of a video.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarrierLocation {
    pub video_id: String,
    /// 1-based frame index.
    pub frame: u32,
    /// 1-based block column.
    pub x: u16,
    /// 1-based block row.
    pub y: u16,
}

/// Frame count bookkeeping per indexed video, in input order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoMeta {
    pub id: String,
    pub frame_count: u32,
}

/// The full index: parameters, video table, and one location list per
/// possible hash value.
#[derive(Debug, PartialEq)]
pub struct IndexDatabase {
    config: PartitionConfig,
    method: HashMethod,
    videos: Vec<VideoMeta>,
    buckets: Vec<Vec<CarrierLocation>>,
}

/// DC vectors of every block of every frame of `sources`, flattened in
/// indexing order. Used for threshold calibration and rate studies.
pub fn dataset_dc_vectors<P: FrameProvider>(
    sources: &[P],
    config: &PartitionConfig,
) -> Result<Vec<DcVector>, IndexError> {
    let mut all = Vec::new();
    for source in sources {
        let per_frame = hash_frames(source, config, |dcv| dcv)?;
        for mut frame_vec in per_frame {
            all.append(&mut frame_vec);
        }
    }
    Ok(all)
}

/// Block hashes of every frame of `sources` in indexing order.
pub fn dataset_hashes<P: FrameProvider>(
    sources: &[P],
    config: &PartitionConfig,
    method: HashMethod,
) -> Result<Vec<HashSequence>, IndexError> {
    let mut all = Vec::new();
    for source in sources {
        let per_frame = hash_frames(source, config, |dcv| hash_block(&dcv, config, method))?;
        for mut frame_vec in per_frame {
            all.append(&mut frame_vec);
        }
    }
    Ok(all)
}

/// Maps every block of every frame through `f`, frames in parallel, results
/// in frame order.
fn hash_frames<P: FrameProvider, T: Send>(
    source: &P,
    config: &PartitionConfig,
    f: impl Fn(DcVector) -> T + Sync,
) -> Result<Vec<Vec<T>>, IndexError> {
    let id = source.id();
    let frame_err = |source: FrameError| IndexError::Frame {
        id: id.to_string(),
        source,
    };
    (1..=source.frame_count())
        .into_par_iter()
        .map(|frame| {
            let plane = source.luma(frame).map_err(frame_err)?;
            let cropped = crop_for_hashing(&plane, config).map_err(frame_err)?;
            let dcvs = frame_dc_vectors(&cropped, config)?;
            Ok(dcvs.into_iter().map(&f).collect())
        })
        .collect()
}

/// Hashes every block of every video and files its location. Videos keep
/// their input order; frames ascend; blocks are raster-ordered.
pub fn build_index<P: FrameProvider>(
    sources: &[P],
    config: &PartitionConfig,
    method: HashMethod,
) -> Result<IndexDatabase, IndexError> {
    if sources.is_empty() {
        return Err(IndexError::NoVideos);
    }
    let mut seen = BTreeSet::new();
    for s in sources {
        if s.id().len() > usize::from(u16::MAX) {
            return Err(IndexError::VideoIdTooLong(s.id().to_string()));
        }
        if !seen.insert(s.id().to_string()) {
            return Err(IndexError::DuplicateVideo(s.id().to_string()));
        }
    }

    let mut buckets = vec![Vec::new(); 1usize << config.hash_bits()];
    let mut videos = Vec::with_capacity(sources.len());
    for source in sources {
        let per_frame = hash_frames(source, config, |dcv| {
            (hash_block(&dcv, config, method).value(), dcv.x, dcv.y)
        })?;
        for (frame_zero, hashes) in per_frame.into_iter().enumerate() {
            for (value, x, y) in hashes {
                buckets[value as usize].push(CarrierLocation {
                    video_id: source.id().to_string(),
                    frame: frame_zero as u32 + 1,
                    x,
                    y,
                });
            }
        }
        videos.push(VideoMeta {
            id: source.id().to_string(),
            frame_count: source.frame_count(),
        });
    }
    Ok(IndexDatabase {
        config: *config,
        method,
        videos,
        buckets,
    })
}

/// Outcome of re-hashing indexed locations against a set of sources.
#[derive(Debug, Default, PartialEq)]
pub struct AuditReport {
    pub checked: usize,
    pub mismatches: Vec<AuditMismatch>,
}

impl AuditReport {
    pub fn mismatch_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.mismatches.len() as f64 / self.checked as f64
        }
    }
}

#[derive(Debug, PartialEq)]
pub struct AuditMismatch {
    pub expected_value: u16,
    pub location: CarrierLocation,
    /// What the sources hash to now; `None` when the frame cannot be read.
    pub recomputed: Option<u16>,
}

impl IndexDatabase {
    /// Assembles a database from parts. Intended for synthetic setups; the
    /// same validation as deserialization applies, except hashes are taken
    /// on trust until [`IndexDatabase::audit`] checks them.
    pub fn from_parts(
        config: PartitionConfig,
        method: HashMethod,
        videos: Vec<VideoMeta>,
        buckets: Vec<Vec<CarrierLocation>>,
    ) -> Result<Self, IndexError> {
        let expected = 1usize << config.hash_bits();
        if buckets.len() != expected {
            return Err(IndexError::BucketCount {
                got: buckets.len(),
                expected,
            });
        }
        let by_id: HashMap<&str, &VideoMeta> = videos.iter().map(|v| (v.id.as_str(), v)).collect();
        if by_id.len() != videos.len() {
            let dup = videos
                .iter()
                .enumerate()
                .find(|(i, v)| videos[..*i].iter().any(|w| w.id == v.id))
                .map(|(_, v)| v.id.clone())
                .unwrap_or_default();
            return Err(IndexError::DuplicateVideo(dup));
        }
        for bucket in &buckets {
            for loc in bucket {
                let meta = by_id
                    .get(loc.video_id.as_str())
                    .ok_or_else(|| IndexError::UnknownVideo(loc.video_id.clone()))?;
                if loc.frame == 0
                    || loc.frame > meta.frame_count
                    || loc.x == 0
                    || loc.x > config.cols()
                    || loc.y == 0
                    || loc.y > config.rows()
                {
                    return Err(IndexError::LocationOutOfRange {
                        id: loc.video_id.clone(),
                        frame: loc.frame,
                        x: loc.x,
                        y: loc.y,
                        cols: config.cols(),
                        rows: config.rows(),
                        frames: meta.frame_count,
                    });
                }
            }
        }
        Ok(Self {
            config,
            method,
            videos,
            buckets,
        })
    }

    pub fn config(&self) -> &PartitionConfig {
        &self.config
    }

    pub fn method(&self) -> HashMethod {
        self.method
    }

    pub fn videos(&self) -> &[VideoMeta] {
        &self.videos
    }

    /// Position of a video in the table (the id every payload record uses).
    pub fn video_index(&self, id: &str) -> Option<u32> {
        self.videos.iter().position(|v| v.id == id).map(|i| i as u32)
    }

    pub fn max_frame_count(&self) -> u32 {
        self.videos.iter().map(|v| v.frame_count).max().unwrap_or(0)
    }

    /// Locations carrying hash value `value`, insertion-ordered.
    pub fn bucket(&self, value: u16) -> &[CarrierLocation] {
        &self.buckets[value as usize]
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// `(value, occupancy)` for every bucket, ascending by value.
    pub fn occupancy(&self) -> impl Iterator<Item = (u16, usize)> + '_ {
        self.buckets.iter().enumerate().map(|(v, b)| (v as u16, b.len()))
    }

    /// Number of hash values with at least one carrier.
    pub fn distinct_values(&self) -> u32 {
        self.buckets.iter().filter(|b| !b.is_empty()).count() as u32
    }

    pub fn total_locations(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    /// Picks the carrier for a segment. Three tiers order the bucket:
    /// locations in the affinity video come first, locations in excluded
    /// videos are demoted to the back (still usable — exclusion is soft),
    /// and insertion order decides within a tier. A video that is both
    /// affinity and excluded counts as affinity.
    pub fn lookup(
        &self,
        segment: HashSequence,
        exclusions: &BTreeSet<String>,
        affinity: Option<&str>,
    ) -> Result<&CarrierLocation, LookupError> {
        if segment.len() != self.config.hash_bits() {
            return Err(LookupError::LengthMismatch {
                expected: self.config.hash_bits(),
                got: segment.len(),
            });
        }
        let bucket = self.bucket(segment.value());
        let mut best: Option<(u8, &CarrierLocation)> = None;
        for loc in bucket {
            let tier = if affinity == Some(loc.video_id.as_str()) {
                0
            } else if exclusions.contains(&loc.video_id) {
                2
            } else {
                1
            };
            if tier == 0 {
                return Ok(loc);
            }
            if best.is_none_or(|(t, _)| tier < t) {
                best = Some((tier, loc));
            }
        }
        best.map(|(_, loc)| loc).ok_or_else(|| LookupError::EmptyBucket {
            pattern: segment.bit_string(),
        })
    }

    /// Re-hashes indexed locations against `sources` and reports mismatches.
    /// `sample` limits the audit to a deterministic pseudo-random subset.
    pub fn audit<P: FrameProvider>(
        &self,
        sources: &[P],
        sample: Option<(usize, u64)>,
    ) -> AuditReport {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let by_id: HashMap<&str, &P> = sources.iter().map(|s| (s.id(), s)).collect();
        let mut entries: Vec<(u16, &CarrierLocation)> = Vec::new();
        for (value, bucket) in self.buckets.iter().enumerate() {
            for loc in bucket {
                entries.push((value as u16, loc));
            }
        }
        if let Some((n, seed)) = sample {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            entries.shuffle(&mut rng);
            entries.truncate(n);
        }

        let mut report = AuditReport::default();
        // Caching per (video, frame) keeps a full audit at one hash pass per
        // frame instead of one per location.
        let mut cache: HashMap<(String, u32), Option<Vec<u16>>> = HashMap::new();
        for (expected_value, loc) in entries {
            report.checked += 1;
            let key = (loc.video_id.clone(), loc.frame);
            let hashes = cache.entry(key).or_insert_with(|| {
                let src = by_id.get(loc.video_id.as_str())?;
                let plane = src.luma(loc.frame).ok()?;
                let cropped = crop_for_hashing(&plane, &self.config).ok()?;
                let dcvs = frame_dc_vectors(&cropped, &self.config).ok()?;
                Some(
                    dcvs.iter()
                        .map(|d| hash_block(d, &self.config, self.method).value())
                        .collect(),
                )
            });
            let recomputed = hashes.as_ref().and_then(|frame_hashes| {
                let idx = (loc.y as usize - 1) * self.config.cols() as usize + (loc.x as usize - 1);
                frame_hashes.get(idx).copied()
            });
            if recomputed != Some(expected_value) {
                report.mismatches.push(AuditMismatch {
                    expected_value,
                    location: loc.clone(),
                    recomputed,
                });
            }
        }
        report
    }

    /// Canonical little-endian serialization, ending in a CRC32 of all
    /// preceding bytes. Identical databases serialize to identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.total_locations() * 12);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.method.code());
        out.push(self.config.hash_bits());
        out.push(0); // reserved
        out.extend_from_slice(&self.config.cols().to_le_bytes());
        out.extend_from_slice(&self.config.rows().to_le_bytes());
        out.extend_from_slice(&self.config.threshold().to_le_bytes());
        out.extend_from_slice(&(self.videos.len() as u32).to_le_bytes());
        for v in &self.videos {
            out.extend_from_slice(&(v.id.len() as u16).to_le_bytes());
            out.extend_from_slice(v.id.as_bytes());
            out.extend_from_slice(&v.frame_count.to_le_bytes());
        }
        let video_idx: HashMap<&str, u32> = self
            .videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.as_str(), i as u32))
            .collect();
        out.extend_from_slice(&(self.buckets.len() as u32).to_le_bytes());
        for bucket in &self.buckets {
            out.extend_from_slice(&(bucket.len() as u32).to_le_bytes());
            for loc in bucket {
                out.extend_from_slice(&video_idx[loc.video_id.as_str()].to_le_bytes());
                out.extend_from_slice(&loc.frame.to_le_bytes());
                out.extend_from_slice(&loc.x.to_le_bytes());
                out.extend_from_slice(&loc.y.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// CRC32 of the canonical serialization; payloads carry it so extraction
    /// can confirm it is resolving locations against the right index.
    pub fn fingerprint(&self) -> u32 {
        let bytes = self.to_bytes();
        u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("crc suffix"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// Parses the canonical form. The trailing checksum is verified before
    /// anything else, so truncation and bit corruption both surface as
    /// [`IndexError::ChecksumMismatch`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        if bytes.len() < MAGIC.len() + 4 {
            return Err(IndexError::Corrupt("file shorter than any valid index".into()));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc_bytes.try_into().expect("split at 4"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(IndexError::ChecksumMismatch { stored, computed });
        }

        let mut cur = Cursor { body, pos: 0 };
        if cur.take(4)? != MAGIC.as_slice() {
            return Err(IndexError::Corrupt("bad magic".into()));
        }
        let version = cur.u8()?;
        if version != FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        let method = HashMethod::from_code(cur.u8()?)
            .ok_or_else(|| IndexError::Corrupt("unknown hash method code".into()))?;
        let hash_bits = cur.u8()?;
        let reserved = cur.u8()?;
        if reserved != 0 {
            return Err(IndexError::Corrupt("nonzero reserved byte".into()));
        }
        let cols = cur.u16()?;
        let rows = cur.u16()?;
        let threshold = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        let config = PartitionConfig::new(cols, rows, hash_bits, threshold)?;

        let video_count = cur.u32()? as usize;
        let mut videos = Vec::with_capacity(video_count.min(1 << 20));
        for _ in 0..video_count {
            let id_len = cur.u16()? as usize;
            let id = String::from_utf8(cur.take(id_len)?.to_vec())
                .map_err(|_| IndexError::Corrupt("video id is not UTF-8".into()))?;
            let frame_count = cur.u32()?;
            videos.push(VideoMeta { id, frame_count });
        }

        let bucket_count = cur.u32()? as usize;
        if bucket_count != 1usize << hash_bits {
            return Err(IndexError::BucketCount {
                got: bucket_count,
                expected: 1usize << hash_bits,
            });
        }
        let mut buckets = Vec::with_capacity(bucket_count);
        for _ in 0..bucket_count {
            let len = cur.u32()? as usize;
            let mut bucket = Vec::with_capacity(len.min(1 << 20));
            for _ in 0..len {
                let video = cur.u32()? as usize;
                let frame = cur.u32()?;
                let x = cur.u16()?;
                let y = cur.u16()?;
                let id = videos
                    .get(video)
                    .map(|v| v.id.clone())
                    .ok_or_else(|| IndexError::Corrupt("location video index out of table".into()))?;
                bucket.push(CarrierLocation {
                    video_id: id,
                    frame,
                    x,
                    y,
                });
            }
            buckets.push(bucket);
        }
        if cur.pos != body.len() {
            return Err(IndexError::Corrupt("trailing bytes after bucket table".into()));
        }
        Self::from_parts(config, method, videos, buckets)
    }
}

struct Cursor<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.pos + n > self.body.len() {
            return Err(IndexError::Corrupt("unexpected end of index data".into()));
        }
        let s = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
