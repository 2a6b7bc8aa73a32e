//! Hiding and extraction. Nothing is ever embedded: hiding picks, for each
//! secret segment, an existing block whose hash equals the segment, and the
//! transmitted artifact is only the list of picked locations. Extraction
//! re-hashes those blocks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dct::{block_region, region_dc_vector};
use crate::frame::{crop_for_hashing, FrameError, FramePlane, FrameProvider};
use crate::hash::{hash_block, HashSequence};
use crate::index::{CarrierLocation, IndexDatabase, LookupError};
use crate::payload::{AuxiliaryPayload, FieldWidths, PackedLocation, PayloadError};

#[derive(Debug, Error)]
pub enum StegoError {
    #[error("the secret is empty")]
    EmptySecret,
    #[error("secret needs {count} segments; a payload can carry at most 65535")]
    TooManySegments { count: usize },
    #[error("no carrier block exists for bit pattern {pattern}; nothing was hidden")]
    NoCarrier { pattern: String },
    #[error(transparent)]
    Lookup(LookupError),
    #[error("payload was built against index {payload:08x} but this index is {index:08x}")]
    IndexMismatch { payload: u32, index: u32 },
    #[error("payload references video index {0}, beyond the index video table")]
    UnknownVideoIndex(u32),
    #[error("video {0:?} is in the index but not among the supplied sources")]
    MissingVideo(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Partition(#[from] crate::dct::PartitionError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error("history file {path}: {source}")]
    HistoryIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("history file {path} is not valid JSON: {source}")]
    HistoryFormat {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// A secret as a bit sequence, most significant bit of each byte first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretMessage {
    bits: Vec<bool>,
}

impl SecretMessage {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
            .collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Packs bits into bytes, MSB first, zero-filling a final partial byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, bit) in self.bits.iter().enumerate() {
            if *bit {
                out[i / 8] |= 1 << (7 - (i % 8));
            }
        }
        out
    }
}

/// Splits a secret into fixed-length segments, zero-padding the tail.
/// Returns the segments and how many padding zeros the last one carries.
pub fn segment_secret(
    message: &SecretMessage,
    hash_bits: u8,
) -> Result<(Vec<HashSequence>, u8), StegoError> {
    if message.is_empty() {
        return Err(StegoError::EmptySecret);
    }
    let l = usize::from(hash_bits);
    let count = message.len().div_ceil(l);
    let padding = (count * l - message.len()) as u8;
    let mut segments = Vec::with_capacity(count);
    for chunk in message.bits().chunks(l) {
        let mut bits = chunk.to_vec();
        bits.resize(l, false);
        segments.push(HashSequence::from_bits(&bits).expect("chunk length equals hash_bits"));
    }
    Ok((segments, padding))
}

/// Which videos have carried which bit patterns in past transmissions.
/// Lookups demote those videos so repeated traffic spreads across the
/// collection instead of wearing a groove into one clip.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransmissionHistory {
    by_pattern: BTreeMap<String, BTreeSet<String>>,
}

impl TransmissionHistory {
    pub fn record(&mut self, pattern: &str, video_id: &str) {
        self.by_pattern
            .entry(pattern.to_string())
            .or_default()
            .insert(video_id.to_string());
    }

    pub fn videos_for(&self, pattern: &str) -> BTreeSet<String> {
        self.by_pattern.get(pattern).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pattern.is_empty()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StegoError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("history serializes");
        fs::write(path, json).map_err(|source| StegoError::HistoryIo {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Loads a history file; a missing file is an empty history.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StegoError> {
        let path = path.as_ref();
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|source| StegoError::HistoryFormat {
                path: path.to_path_buf(),
                source,
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(StegoError::HistoryIo {
                path: path.to_path_buf(),
                source,
            }),
        }
    }
}

/// A successful hide: the payload to transmit and the carriers it points at.
#[derive(Debug)]
pub struct HideOutcome {
    pub payload: AuxiliaryPayload,
    /// One location per segment, in segment order.
    pub locations: Vec<CarrierLocation>,
}

impl HideOutcome {
    /// Distinct carrier videos, sorted.
    pub fn videos(&self) -> BTreeSet<&str> {
        self.locations.iter().map(|l| l.video_id.as_str()).collect()
    }
}

/// Picks a carrier for every segment of `message` out of `db`.
///
/// Placement is all-or-nothing: if any segment has no carrier, the error
/// names its bit pattern and `history` is left untouched. On success the
/// chosen (pattern, video) pairs are recorded in `history`.
///
/// Within one call, a repeated pattern reuses the location chosen for its
/// first occurrence. The video that carries the first segment becomes the
/// affinity video: later segments prefer it, which concentrates a
/// transmission in few clips.
pub fn hide(
    message: &SecretMessage,
    db: &IndexDatabase,
    history: &mut TransmissionHistory,
) -> Result<HideOutcome, StegoError> {
    let (segments, padding_zeros) = segment_secret(message, db.config().hash_bits())?;
    if segments.len() > usize::from(u16::MAX) {
        return Err(StegoError::TooManySegments { count: segments.len() });
    }

    let mut chosen: HashMap<u16, CarrierLocation> = HashMap::new();
    let mut affinity: Option<String> = None;
    let mut locations = Vec::with_capacity(segments.len());
    for segment in &segments {
        let location = match chosen.get(&segment.value()) {
            Some(loc) => loc.clone(),
            None => {
                let exclusions = history.videos_for(&segment.bit_string());
                let loc = db
                    .lookup(*segment, &exclusions, affinity.as_deref())
                    .map_err(|e| match e {
                        LookupError::EmptyBucket { pattern } => StegoError::NoCarrier { pattern },
                        other => StegoError::Lookup(other),
                    })?
                    .clone();
                chosen.insert(segment.value(), loc.clone());
                loc
            }
        };
        if affinity.is_none() {
            affinity = Some(location.video_id.clone());
        }
        locations.push(location);
    }

    let widths = FieldWidths::for_database(db);
    let packed = locations
        .iter()
        .map(|loc| PackedLocation {
            video: db.video_index(&loc.video_id).expect("location came from this index"),
            frame: loc.frame,
            x: loc.x,
            y: loc.y,
        })
        .collect();
    let payload = AuxiliaryPayload::new(
        db.config().hash_bits(),
        padding_zeros,
        widths,
        db.fingerprint(),
        packed,
    )?;

    for (segment, location) in segments.iter().zip(&locations) {
        history.record(&segment.bit_string(), &location.video_id);
    }
    Ok(HideOutcome { payload, locations })
}

/// Recovers the secret by re-hashing each payload location in `sources`.
pub fn extract<P: FrameProvider>(
    payload: &AuxiliaryPayload,
    db: &IndexDatabase,
    sources: &[P],
) -> Result<SecretMessage, StegoError> {
    extract_with_skips(payload, db, sources, &BTreeSet::new())
}

/// [`extract`], but segment positions listed in `skips` (0-based) are not
/// read; each contributes hash-length zero bits. Used when attack recovery
/// has concluded that a carrier frame no longer exists.
pub fn extract_with_skips<P: FrameProvider>(
    payload: &AuxiliaryPayload,
    db: &IndexDatabase,
    sources: &[P],
    skips: &BTreeSet<usize>,
) -> Result<SecretMessage, StegoError> {
    let fingerprint = db.fingerprint();
    if payload.index_fingerprint != fingerprint {
        return Err(StegoError::IndexMismatch {
            payload: payload.index_fingerprint,
            index: fingerprint,
        });
    }
    let config = db.config();
    let by_id: HashMap<&str, &P> = sources.iter().map(|s| (s.id(), s)).collect();

    let hash_len = usize::from(payload.hash_bits);
    let mut bits = Vec::with_capacity(payload.segments.len() * hash_len);
    // Cropped frames are cached so a payload with many segments in one frame
    // decodes it once.
    let mut frames: HashMap<(u32, u32), FramePlane> = HashMap::new();
    for (position, packed) in payload.segments.iter().enumerate() {
        if skips.contains(&position) {
            bits.extend(std::iter::repeat_n(false, hash_len));
            continue;
        }
        let meta = db
            .videos()
            .get(packed.video as usize)
            .ok_or(StegoError::UnknownVideoIndex(packed.video))?;
        let source = by_id
            .get(meta.id.as_str())
            .ok_or_else(|| StegoError::MissingVideo(meta.id.clone()))?;
        let plane = match frames.entry((packed.video, packed.frame)) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let plane = source.luma(packed.frame)?;
                e.insert(crop_for_hashing(&plane, config)?)
            }
        };
        let region = block_region(plane, config, packed.x, packed.y)?;
        let dcv = region_dc_vector(plane, &region);
        let hash = hash_block(&dcv, config, db.method());
        bits.extend(hash.bits());
    }

    bits.truncate(bits.len() - usize::from(payload.padding_zeros));
    Ok(SecretMessage::from_bits(bits))
}
