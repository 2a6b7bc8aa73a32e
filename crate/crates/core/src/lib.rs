//! Coverless video steganography by block-hash carrier selection.
//!
//! Instead of modifying a cover, the sender owns a collection of ordinary
//! videos and an index of every block's perceptual hash. A secret is cut
//! into hash-sized segments, each segment is matched to an existing block
//! whose hash already equals it, and only the list of block locations —
//! compact, sealed with authenticated encryption — travels to the receiver,
//! who re-hashes those blocks in their copy of the collection to read the
//! secret. The videos themselves never change, so there is no embedding
//! signal to detect.
//!
//! The crate is organized bottom-up:
//! - [`frame`]: ingestion (y4m, raw YUV 4:2:0, image directories), luma
//!   planes, and the crop that makes dimensions divisible into blocks;
//! - [`dct`]: two-level partitioning of a frame into blocks and regions,
//!   and the per-region DC features;
//! - [`hash`]: the max-DC ratio hash (and the adjacent-DC baseline), plus
//!   threshold calibration;
//! - [`index`]: the persistent hash-to-locations database;
//! - [`payload`]: the bit-packed, sealable location list;
//! - [`stego`]: hiding (carrier selection) and extraction;
//! - [`attack`]: the channel-distortion suite used for robustness studies;
//! - [`deletion`]: frame-deletion detection and location remapping;
//! - [`eval`]: accuracy, capacity, and change-rate metrics with CSV output;
//! - [`samples`]: deterministic synthetic clips for tests and demos.

pub mod attack;
pub mod dct;
pub mod deletion;
pub mod eval;
pub mod frame;
pub mod hash;
pub mod index;
pub mod payload;
pub mod samples;
pub mod stego;

pub use attack::{AttackError, AttackSpec};
pub use dct::{PartitionConfig, MAX_HASH_BITS};
pub use deletion::{detect_deletions, remap_locations, DetectorOptions, FrameDeletionReport};
pub use eval::{extraction_accuracy, EvalError};
pub use frame::{FrameError, FramePlane, FrameProvider, VideoFrames};
pub use hash::{calibrate_threshold, HashMethod, HashSequence};
pub use index::{build_index, CarrierLocation, IndexDatabase, IndexError};
pub use payload::{open_payload, seal_payload, AuxiliaryPayload, PayloadError};
pub use stego::{extract, hide, SecretMessage, StegoError, TransmissionHistory};
