//! Frame-deletion recovery. A deleted frame leaves no mark in the frames
//! themselves — only a splice where two formerly non-adjacent frames now
//! touch. On smooth footage that splice shows up as a dip in consecutive
//! frame similarity, and the quotient of neighboring similarities isolates
//! the dip from slow drift. Detected splices let payload locations be
//! renumbered back to the received frame order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::frame::{FrameError, FramePlane, FrameProvider};
use crate::index::IndexDatabase;
use crate::payload::{AuxiliaryPayload, PackedLocation};

/// SSIM stabilizers for 8-bit dynamic range: (0.01*255)^2 and (0.03*255)^2.
const SSIM_C1: f64 = 6.5025;
const SSIM_C2: f64 = 58.5225;
const SSIM_WINDOW: usize = 8;

/// Dead zone added to the flag threshold so footage with identical
/// similarities everywhere (zero spread) never flags.
const FLAG_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DeletionError {
    #[error("deletion detection needs at least 4 frames, got {0}")]
    TooFewFrames(u32),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("payload references video index {0}, beyond the index video table")]
    UnknownVideoIndex(u32),
    #[error("video {id:?}: received {received} frames but the index recorded {original}")]
    GrewFrames {
        id: String,
        original: u32,
        received: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorOptions {
    /// Spread multiplier for the first flagging pass.
    pub k1: f64,
    /// Spread multiplier for the second pass, run with statistics
    /// recomputed over the samples the first pass kept.
    pub k2: f64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self { k1: 3.0, k2: 3.0 }
    }
}

/// Statistics of one flagging pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassStats {
    pub mean: f64,
    pub std_dev: f64,
    pub k: f64,
}

/// What the detector saw in one received video.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameDeletionReport {
    pub video_id: String,
    pub received_frames: u32,
    /// similarities[i] compares received frames i+1 and i+2 (1-based).
    pub similarities: Vec<f64>,
    /// quotients[i] = similarities[i] / similarities[i+1].
    pub quotients: Vec<f64>,
    pub passes: [PassStats; 2],
    /// Detected splice positions: deleted material sat just after this
    /// received frame number. Sorted, deduplicated.
    pub splices_after: Vec<u32>,
}

/// Mean SSIM over non-overlapping 8x8 windows (partial edge windows are
/// ignored). Identical planes score exactly 1. Panics if the planes differ
/// in size or are smaller than one window.
pub fn mean_ssim(a: &FramePlane, b: &FramePlane) -> f64 {
    assert_eq!(
        (a.width(), a.height()),
        (b.width(), b.height()),
        "mean_ssim needs equally sized planes"
    );
    assert!(
        a.width() >= SSIM_WINDOW && a.height() >= SSIM_WINDOW,
        "mean_ssim needs at least one full window"
    );
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for wy in 0..a.height() / SSIM_WINDOW {
        for wx in 0..a.width() / SSIM_WINDOW {
            let (mut sum_a, mut sum_b) = (0.0, 0.0);
            let (mut sq_a, mut sq_b, mut cross) = (0.0, 0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let pa = f64::from(a.get(wx * SSIM_WINDOW + dx, wy * SSIM_WINDOW + dy));
                    let pb = f64::from(b.get(wx * SSIM_WINDOW + dx, wy * SSIM_WINDOW + dy));
                    sum_a += pa;
                    sum_b += pb;
                    sq_a += pa * pa;
                    sq_b += pb * pb;
                    cross += pa * pb;
                }
            }
            let mu_a = sum_a / n;
            let mu_b = sum_b / n;
            let var_a = sq_a / n - mu_a * mu_a;
            let var_b = sq_b / n - mu_b * mu_b;
            let cov = cross / n - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2));
            windows += 1;
        }
    }
    total / windows as f64
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Scans a received video for deletion splices.
///
/// Consecutive-frame similarities are turned into quotients q[i] =
/// s[i]/s[i+1]; a splice makes one similarity dip, which pushes the quotient
/// before it up and the one at it down. Outliers are flagged in two passes:
/// the first over all quotients, the second with mean and spread recomputed
/// over only the quotients the first pass considered normal.
pub fn detect_deletions<P: FrameProvider>(
    source: &P,
    options: DetectorOptions,
) -> Result<FrameDeletionReport, DeletionError> {
    let count = source.frame_count();
    if count < 4 {
        return Err(DeletionError::TooFewFrames(count));
    }
    let planes: Vec<FramePlane> = (1..=count)
        .map(|f| source.luma(f))
        .collect::<Result<_, _>>()?;
    let similarities: Vec<f64> = planes
        .par_windows(2)
        .map(|pair| mean_ssim(&pair[0], &pair[1]))
        .collect();
    let quotients: Vec<f64> = similarities
        .windows(2)
        .map(|pair| pair[0] / pair[1])
        .collect();

    let (mean1, std1) = mean_and_std(&quotients);
    let flagged1: Vec<bool> = quotients
        .iter()
        .map(|q| (q - mean1).abs() > options.k1 * std1 + FLAG_EPSILON)
        .collect();

    let kept: Vec<f64> = quotients
        .iter()
        .zip(&flagged1)
        .filter(|(_, f)| !**f)
        .map(|(q, _)| *q)
        .collect();
    // If the first pass threw everything out, refining is impossible;
    // fall back to its statistics.
    let (mean2, std2) = if kept.is_empty() {
        (mean1, std1)
    } else {
        mean_and_std(&kept)
    };
    let flagged2: Vec<bool> = quotients
        .iter()
        .map(|q| (q - mean2).abs() > options.k2 * std2 + FLAG_EPSILON)
        .collect();

    let mut splices = BTreeSet::new();
    for (i, flagged) in flagged2.iter().enumerate() {
        if !flagged {
            continue;
        }
        // A high quotient means the NEXT similarity dipped: the splice sits
        // after received frame i+2. A low quotient means THIS similarity is
        // the dip: splice after frame i+1.
        if quotients[i] > mean2 {
            splices.insert(i as u32 + 2);
        } else {
            splices.insert(i as u32 + 1);
        }
    }

    Ok(FrameDeletionReport {
        video_id: source.id().to_string(),
        received_frames: count,
        similarities,
        quotients,
        passes: [
            PassStats { mean: mean1, std_dev: std1, k: options.k1 },
            PassStats { mean: mean2, std_dev: std2, k: options.k2 },
        ],
        splices_after: splices.into_iter().collect(),
    })
}

/// For each original frame number (index 1..=original), the received frame
/// that now holds it, or `None` if it was deleted.
///
/// The total deficit (original minus received) is distributed over the
/// detected splices: every splice owes at least one frame, surplus goes
/// round-robin in order of ascending splice similarity (the deeper the dip,
/// the more frames it likely hides), and with more splices than deficit the
/// lowest-similarity splices are kept. Any remainder with no splice to
/// explain it is assumed to be trailing truncation.
pub fn frame_map(original: u32, report: &FrameDeletionReport) -> Result<Vec<Option<u32>>, DeletionError> {
    let received = report.received_frames;
    if received > original {
        return Err(DeletionError::GrewFrames {
            id: report.video_id.clone(),
            original,
            received,
        });
    }
    let deficit = (original - received) as usize;

    // Rank splices by confidence: ascending similarity, position breaking
    // ties deterministically.
    let mut ranked: Vec<u32> = report.splices_after.clone();
    ranked.sort_by(|a, b| {
        let sa = report.similarities[*a as usize - 1];
        let sb = report.similarities[*b as usize - 1];
        sa.partial_cmp(&sb).unwrap().then(a.cmp(b))
    });
    ranked.truncate(deficit);

    let mut missing_at: BTreeMap<u32, u32> = ranked.iter().map(|&p| (p, 1u32)).collect();
    let mut surplus = deficit.saturating_sub(ranked.len());
    while surplus > 0 {
        for &p in &ranked {
            if surplus == 0 {
                break;
            }
            *missing_at.get_mut(&p).expect("ranked splice") += 1;
            surplus -= 1;
        }
        if ranked.is_empty() {
            break; // no splices: the whole deficit is trailing loss
        }
    }

    let mut map = vec![None; original as usize + 1];
    let mut shift = 0u32;
    for r in 1..=received {
        map[(r + shift) as usize] = Some(r);
        if let Some(&c) = missing_at.get(&r) {
            shift += c;
        }
    }
    Ok(map)
}

/// A payload whose frame numbers have been renumbered to the received
/// (post-deletion) frame order. Segments whose carrier frame was deleted
/// are unrecoverable and listed by position; extraction substitutes zero
/// bits for them.
#[derive(Debug, PartialEq)]
pub struct RemappedPayload {
    pub payload: AuxiliaryPayload,
    pub unrecoverable: BTreeSet<usize>,
}

/// Applies per-video deletion reports to a payload. Videos without a report
/// keep their locations unchanged.
pub fn remap_locations(
    payload: &AuxiliaryPayload,
    db: &IndexDatabase,
    reports: &BTreeMap<String, FrameDeletionReport>,
) -> Result<RemappedPayload, DeletionError> {
    let mut maps: BTreeMap<u32, Vec<Option<u32>>> = BTreeMap::new();
    for (idx, meta) in db.videos().iter().enumerate() {
        if let Some(report) = reports.get(&meta.id) {
            maps.insert(idx as u32, frame_map(meta.frame_count, report)?);
        }
    }

    let mut unrecoverable = BTreeSet::new();
    let mut segments = Vec::with_capacity(payload.segments.len());
    for (position, packed) in payload.segments.iter().enumerate() {
        if packed.video as usize >= db.videos().len() {
            return Err(DeletionError::UnknownVideoIndex(packed.video));
        }
        let new_frame = match maps.get(&packed.video) {
            None => Some(packed.frame),
            Some(map) => map.get(packed.frame as usize).copied().flatten(),
        };
        match new_frame {
            Some(frame) => segments.push(PackedLocation { frame, ..*packed }),
            None => {
                unrecoverable.insert(position);
                // The slot still needs a well-formed record; extraction will
                // skip it, so any in-range frame works.
                segments.push(PackedLocation { frame: 1, ..*packed });
            }
        }
    }

    let payload = AuxiliaryPayload::new(
        payload.hash_bits,
        payload.padding_zeros,
        payload.widths,
        payload.index_fingerprint,
        segments,
    )
    .expect("remapped payload keeps valid metadata");
    Ok(RemappedPayload { payload, unrecoverable })
}
