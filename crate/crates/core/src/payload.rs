//! The auxiliary payload a sender transmits instead of a stego video: an
//! ordered list of carrier locations, bit-packed into a compact canonical
//! form, optionally sealed with AES-256-GCM.
//!
//! Field widths are derived from the index dimensions, so a record costs
//! exactly as many bits as the grid, frame count, and video table require.
//! The plaintext layout is canonical: the same payload always serializes to
//! the same bytes.

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use rand::rngs::OsRng;
use rand::TryRngCore;
use thiserror::Error;

use crate::index::IndexDatabase;

const MAGIC: &[u8; 4] = b"CVSA";
const FORMAT_VERSION: u8 = 1;
const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum PayloadError {
    #[error("payload is corrupt: {0}")]
    Corrupt(String),
    #[error("unsupported payload format version {0}")]
    UnsupportedVersion(u8),
    #[error("field value {value} does not fit in {bits} bits")]
    FieldOverflow { value: u32, bits: u8 },
    #[error("hash length {0} is outside 1..=15")]
    BadHashBits(u8),
    #[error("padding ({padding}) must be smaller than the segment length ({hash_bits})")]
    BadPadding { padding: u8, hash_bits: u8 },
    #[error("payload holds no segments")]
    Empty,
    #[error("sealed payload is too short to hold a nonce and tag")]
    SealedTooShort,
    #[error("decryption failed: wrong key or tampered payload")]
    AuthFailure,
}

/// Bits needed to store indices `0..count` (0 when there is nothing to tell
/// apart).
pub fn bits_for(count: u32) -> u8 {
    if count <= 1 {
        0
    } else {
        (32 - (count - 1).leading_zeros()) as u8
    }
}

/// Per-field record widths, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldWidths {
    pub x: u8,
    pub y: u8,
    pub frame: u8,
    pub video: u8,
}

impl FieldWidths {
    pub fn from_dimensions(cols: u16, rows: u16, max_frames: u32, videos: u32) -> Self {
        Self {
            x: bits_for(cols.into()),
            y: bits_for(rows.into()),
            frame: bits_for(max_frames),
            video: bits_for(videos),
        }
    }

    pub fn for_database(db: &IndexDatabase) -> Self {
        Self::from_dimensions(
            db.config().cols(),
            db.config().rows(),
            db.max_frame_count(),
            db.videos().len() as u32,
        )
    }

    /// Bits per packed location record.
    pub fn total(&self) -> u32 {
        u32::from(self.x) + u32::from(self.y) + u32::from(self.frame) + u32::from(self.video)
    }
}

/// A carrier location resolved to table indices, ready for packing.
/// `frame`, `x`, and `y` stay 1-based here; the bit packing stores each
/// minus one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedLocation {
    pub video: u32,
    pub frame: u32,
    pub x: u16,
    pub y: u16,
}

/// Everything a receiver needs to pull the secret back out of the carriers.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryPayload {
    pub version: u8,
    /// Segment length in bits (1..=15).
    pub hash_bits: u8,
    /// Zero bits appended to fill the last segment; dropped on extraction.
    pub padding_zeros: u8,
    pub widths: FieldWidths,
    /// Checksum of the index both sides must share.
    pub index_fingerprint: u32,
    pub segments: Vec<PackedLocation>,
}

impl AuxiliaryPayload {
    pub fn new(
        hash_bits: u8,
        padding_zeros: u8,
        widths: FieldWidths,
        index_fingerprint: u32,
        segments: Vec<PackedLocation>,
    ) -> Result<Self, PayloadError> {
        let p = Self {
            version: FORMAT_VERSION,
            hash_bits,
            padding_zeros,
            widths,
            index_fingerprint,
            segments,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), PayloadError> {
        if self.hash_bits == 0 || self.hash_bits > crate::dct::MAX_HASH_BITS {
            return Err(PayloadError::BadHashBits(self.hash_bits));
        }
        if self.padding_zeros >= self.hash_bits {
            return Err(PayloadError::BadPadding {
                padding: self.padding_zeros,
                hash_bits: self.hash_bits,
            });
        }
        if self.segments.is_empty() {
            return Err(PayloadError::Empty);
        }
        for loc in &self.segments {
            check_width(loc.x as u32 - 1, self.widths.x)?;
            check_width(loc.y as u32 - 1, self.widths.y)?;
            check_width(loc.frame - 1, self.widths.frame)?;
            check_width(loc.video, self.widths.video)?;
        }
        Ok(())
    }

    /// Secret length in bits this payload reconstructs.
    pub fn secret_bits(&self) -> usize {
        self.segments.len() * usize::from(self.hash_bits) - usize::from(self.padding_zeros)
    }

    /// Canonical plaintext serialization.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(self.version);
        out.push(self.hash_bits);
        out.push(self.padding_zeros);
        out.extend_from_slice(&(self.segments.len() as u16).to_le_bytes());
        out.push(self.widths.x);
        out.push(self.widths.y);
        out.push(self.widths.frame);
        out.push(self.widths.video);
        out.extend_from_slice(&self.index_fingerprint.to_le_bytes());

        let mut bits = BitWriter::new();
        for loc in &self.segments {
            bits.push(loc.x as u32 - 1, self.widths.x);
            bits.push(loc.y as u32 - 1, self.widths.y);
            bits.push(loc.frame - 1, self.widths.frame);
            bits.push(loc.video, self.widths.video);
        }
        out.extend_from_slice(&bits.finish());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PayloadError> {
        const HEADER: usize = 4 + 1 + 1 + 1 + 2 + 4 + 4;
        if bytes.len() < HEADER {
            return Err(PayloadError::Corrupt("shorter than the fixed header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(PayloadError::Corrupt("bad magic".into()));
        }
        let version = bytes[4];
        if version != FORMAT_VERSION {
            return Err(PayloadError::UnsupportedVersion(version));
        }
        let hash_bits = bytes[5];
        let padding_zeros = bytes[6];
        let segment_count = u16::from_le_bytes([bytes[7], bytes[8]]) as usize;
        if segment_count == 0 {
            return Err(PayloadError::Empty);
        }
        let widths = FieldWidths {
            x: bytes[9],
            y: bytes[10],
            frame: bytes[11],
            video: bytes[12],
        };
        if widths.x > 16 || widths.y > 16 || widths.frame > 32 || widths.video > 32 {
            return Err(PayloadError::Corrupt("field width exceeds its type".into()));
        }
        let index_fingerprint = u32::from_le_bytes([bytes[13], bytes[14], bytes[15], bytes[16]]);

        let record_bits = widths.total() as usize;
        let body_bytes = (segment_count * record_bits).div_ceil(8);
        if bytes.len() != HEADER + body_bytes {
            return Err(PayloadError::Corrupt(format!(
                "expected {} bytes for {} records, found {}",
                HEADER + body_bytes,
                segment_count,
                bytes.len()
            )));
        }

        let mut reader = BitReader::new(&bytes[HEADER..]);
        let mut segments = Vec::with_capacity(segment_count);
        for _ in 0..segment_count {
            let x = reader.pull(widths.x);
            let y = reader.pull(widths.y);
            let frame = reader.pull(widths.frame);
            let video = reader.pull(widths.video);
            segments.push(PackedLocation {
                video,
                frame: frame + 1,
                x: x as u16 + 1,
                y: y as u16 + 1,
            });
        }
        if !reader.rest_is_zero() {
            return Err(PayloadError::Corrupt("nonzero padding bits".into()));
        }

        Self::new(hash_bits, padding_zeros, widths, index_fingerprint, segments).map(|mut p| {
            p.version = version;
            p
        })
    }
}

fn check_width(value: u32, bits: u8) -> Result<(), PayloadError> {
    let fits = bits >= 32 || value < (1u32 << bits);
    if fits {
        Ok(())
    } else {
        Err(PayloadError::FieldOverflow { value, bits })
    }
}

/// MSB-first bit accumulator.
struct BitWriter {
    bytes: Vec<u8>,
    /// Bits already used in the final byte (0..8).
    used: u8,
}

impl BitWriter {
    fn new() -> Self {
        Self { bytes: Vec::new(), used: 0 }
    }

    fn push(&mut self, value: u32, bits: u8) {
        for i in (0..bits).rev() {
            let bit = (value >> i) & 1;
            if self.used == 0 {
                self.bytes.push(0);
            }
            let last = self.bytes.last_mut().expect("pushed above");
            *last |= (bit as u8) << (7 - self.used);
            self.used = (self.used + 1) % 8;
        }
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// MSB-first bit cursor over a byte slice.
struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn pull(&mut self, bits: u8) -> u32 {
        let mut v = 0u32;
        for _ in 0..bits {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            v = (v << 1) | u32::from(bit);
            self.pos += 1;
        }
        v
    }

    fn rest_is_zero(&self) -> bool {
        (self.pos..self.bytes.len() * 8).all(|p| {
            let byte = self.bytes[p / 8];
            (byte >> (7 - (p % 8))) & 1 == 0
        })
    }
}

/// Encrypts a serialized payload. Output is `nonce ‖ ciphertext ‖ tag` with
/// a fresh random nonce, so sealing the same payload twice yields different
/// bytes.
pub fn seal_payload(payload: &AuxiliaryPayload, key: &[u8; 32]) -> Vec<u8> {
    let cipher = Aes256Gcm::new(&Key::<Aes256Gcm>::from(*key));
    let mut nonce = [0u8; NONCE_LEN];
    OsRng
        .try_fill_bytes(&mut nonce)
        .expect("operating system randomness");
    let ciphertext = cipher
        .encrypt(&Nonce::from(nonce), payload.to_bytes().as_ref())
        .expect("AES-GCM encryption is infallible for in-memory data");
    let mut out = Vec::with_capacity(NONCE_LEN + ciphertext.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ciphertext);
    out
}

/// Reverses [`seal_payload`]. Any bit flip in the sealed bytes — nonce,
/// ciphertext, or tag — fails authentication.
pub fn open_payload(sealed: &[u8], key: &[u8; 32]) -> Result<AuxiliaryPayload, PayloadError> {
    if sealed.len() < NONCE_LEN + TAG_LEN {
        return Err(PayloadError::SealedTooShort);
    }
    let (nonce, ciphertext) = sealed.split_at(NONCE_LEN);
    let nonce: [u8; NONCE_LEN] = nonce.try_into().expect("split at nonce length");
    let cipher = Aes256Gcm::new(&Key::<Aes256Gcm>::from(*key));
    let plaintext = cipher
        .decrypt(&Nonce::from(nonce), ciphertext)
        .map_err(|_| PayloadError::AuthFailure)?;
    AuxiliaryPayload::from_bytes(&plaintext)
}
