//! Evaluation metrics: extraction accuracy, capacity (ideal, effective,
//! relative), DC change-rate populations with a Gaussian fit, and the CSV
//! emitters behind the reporting CLI. Everything here is deterministic:
//! equal inputs produce byte-identical CSV text.

use rayon::prelude::*;
use thiserror::Error;

use crate::dct::{frame_dc_vectors, PartitionConfig, REGION_COUNT};
use crate::frame::{crop_for_hashing, FramePlane};
use crate::hash::HashSequence;

/// Denominator guard for change rates: DC magnitudes at or below this are
/// excluded (and counted) instead of producing huge ratios.
pub const RATE_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sequence lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("frame pair {index}: dimensions {a_w}x{a_h} vs {b_w}x{b_h} after cropping")]
    FrameMismatch {
        index: usize,
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error(transparent)]
    Frame(#[from] crate::frame::FrameError),
    #[error(transparent)]
    Partition(#[from] crate::dct::PartitionError),
    #[error("auxiliary bit count must be positive")]
    ZeroAuxBits,
    #[error("a zero-spread fit has no probability density curve")]
    DegenerateFit,
}

/// Percentage of positions whose entries match exactly, comparing whole
/// values (for hash sequences: the entire L-bit pattern, not bit by bit).
pub fn extraction_accuracy<T: PartialEq>(original: &[T], attacked: &[T]) -> Result<f64, EvalError> {
    if original.len() != attacked.len() {
        return Err(EvalError::LengthMismatch {
            left: original.len(),
            right: attacked.len(),
        });
    }
    if original.is_empty() {
        return Err(EvalError::TooFewSamples { need: 1, got: 0 });
    }
    let matches = original
        .iter()
        .zip(attacked)
        .filter(|(a, b)| a == b)
        .count();
    Ok(100.0 * matches as f64 / original.len() as f64)
}

/// Number of distinct hash values in a stream.
pub fn effective_capacity(hashes: &[HashSequence]) -> u32 {
    let mut seen = vec![false; 1 << 16];
    let mut count = 0u32;
    for h in hashes {
        if !seen[h.value() as usize] {
            seen[h.value() as usize] = true;
            count += 1;
        }
    }
    count
}

/// Distinct hash values per auxiliary bit spent on one location record.
pub fn relative_effective_capacity(distinct_values: u32, aux_bits: u32) -> Result<f64, EvalError> {
    if aux_bits == 0 {
        return Err(EvalError::ZeroAuxBits);
    }
    Ok(f64::from(distinct_values) / f64::from(aux_bits))
}

/// Capacity figures for one hash stream (a video or a whole collection).
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    pub hash_bits: u8,
    pub distinct_values: u32,
    pub theoretical_max: u32,
    pub aux_bits: u32,
    pub relative: f64,
}

pub fn capacity_report(
    hash_bits: u8,
    distinct_values: u32,
    aux_bits: u32,
) -> Result<CapacityReport, EvalError> {
    Ok(CapacityReport {
        hash_bits,
        distinct_values,
        theoretical_max: 1u32 << hash_bits,
        aux_bits,
        relative: relative_effective_capacity(distinct_values, aux_bits)?,
    })
}

/// Carrier blocks needed to hold `secret_bytes` at segment length
/// `hash_bits`.
pub fn carriers_needed(secret_bytes: u64, hash_bits: u8) -> u64 {
    (8 * secret_bytes).div_ceil(u64::from(hash_bits))
}

/// Bounds on carriers needed across the full segment-length range 1..=15:
/// (best case at 15 bits, worst case at 1 bit).
pub fn ideal_capacity_range(secret_bytes: u64) -> (u64, u64) {
    (
        carriers_needed(secret_bytes, crate::dct::MAX_HASH_BITS),
        carriers_needed(secret_bytes, 1),
    )
}

/// Relative DC changes between an original and a degraded rendering of the
/// same frames.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateSample {
    /// One entry per region DC with usable magnitude: (DC' - DC) / DC.
    pub per_coefficient: Vec<f64>,
    /// One entry per block: relative change of the maximum DC.
    pub per_block_max: Vec<f64>,
    /// Denominators at or below the epsilon guard, skipped not recorded.
    pub excluded: usize,
}

/// Compares aligned frame pairs block by block. Both sides are cropped with
/// `config` first; pairs must agree in size after that.
pub fn change_rates(
    original: &[FramePlane],
    degraded: &[FramePlane],
    config: &PartitionConfig,
) -> Result<RateSample, EvalError> {
    if original.len() != degraded.len() {
        return Err(EvalError::LengthMismatch {
            left: original.len(),
            right: degraded.len(),
        });
    }
    let per_frame: Vec<RateSample> = original
        .par_iter()
        .zip(degraded)
        .enumerate()
        .map(|(index, (a, b))| {
            let a = crop_for_hashing(a, config)?;
            let b = crop_for_hashing(b, config)?;
            if (a.width(), a.height()) != (b.width(), b.height()) {
                return Err(EvalError::FrameMismatch {
                    index,
                    a_w: a.width(),
                    a_h: a.height(),
                    b_w: b.width(),
                    b_h: b.height(),
                });
            }
            let mut sample = RateSample::default();
            let dcs_a = frame_dc_vectors(&a, config)?;
            let dcs_b = frame_dc_vectors(&b, config)?;
            for (va, vb) in dcs_a.iter().zip(&dcs_b) {
                for i in 0..REGION_COUNT {
                    if va.dc[i].abs() > RATE_EPSILON {
                        sample.per_coefficient.push((vb.dc[i] - va.dc[i]) / va.dc[i]);
                    } else {
                        sample.excluded += 1;
                    }
                }
                let max_a = va.max_dc();
                if max_a.abs() > RATE_EPSILON {
                    sample.per_block_max.push((vb.max_dc() - max_a) / max_a);
                } else {
                    sample.excluded += 1;
                }
            }
            Ok(sample)
        })
        .collect::<Result<_, _>>()?;

    // Serial merge in frame order keeps the sample order deterministic.
    let mut merged = RateSample::default();
    for mut s in per_frame {
        merged.per_coefficient.append(&mut s.per_coefficient);
        merged.per_block_max.append(&mut s.per_block_max);
        merged.excluded += s.excluded;
    }
    Ok(merged)
}

/// Normal distribution fitted by sample mean and standard deviation
/// (n-1 denominator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianFit, EvalError> {
    if samples.len() < 2 {
        return Err(EvalError::TooFewSamples { need: 2, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    Ok(GaussianFit {
        mean,
        std_dev: var.sqrt(),
        samples: samples.len(),
    })
}

pub fn gaussian_pdf(fit: &GaussianFit, x: f64) -> f64 {
    let z = (x - fit.mean) / fit.std_dev;
    (-0.5 * z * z).exp() / (fit.std_dev * (2.0 * std::f64::consts::PI).sqrt())
}

/// Evaluates the fitted density on `steps` evenly spaced points spanning
/// [from, to].
pub fn pdf_curve(
    fit: &GaussianFit,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if steps < 2 {
        return Err(EvalError::TooFewSamples { need: 2, got: steps });
    }
    if fit.std_dev <= 0.0 {
        return Err(EvalError::DegenerateFit);
    }
    let dx = (to - from) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let x = from + dx * i as f64;
            (x, gaussian_pdf(fit, x))
        })
        .collect())
}

/// One row of the attack-accuracy matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyRow {
    pub attack: String,
    pub block_grid: String,
    pub accuracy: f64,
}

pub fn accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = String::from("attack,block_grid,accuracy_percent\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.4}\n",
            csv_field(&row.attack),
            csv_field(&row.block_grid),
            row.accuracy
        ));
    }
    out
}

/// Capacity table: one labeled row per scope (a video id or "dataset").
pub fn capacity_csv(rows: &[(String, CapacityReport)]) -> String {
    let mut out = String::from("scope,hash_bits,distinct_values,theoretical_max,aux_bits,relative\n");
    for (scope, r) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.4}\n",
            csv_field(scope),
            r.hash_bits,
            r.distinct_values,
            r.theoretical_max,
            r.aux_bits,
            r.relative
        ));
    }
    out
}

pub fn pdf_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("x,density\n");
    for (x, y) in curve {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

/// Summary of both change-rate populations and their fits.
pub fn model_summary_csv(
    per_coefficient: &GaussianFit,
    per_block_max: &GaussianFit,
    excluded: usize,
) -> String {
    let mut out = String::from("population,mean,std_dev,samples,excluded\n");
    out.push_str(&format!(
        "per_coefficient,{},{},{},{}\n",
        per_coefficient.mean, per_coefficient.std_dev, per_coefficient.samples, excluded
    ));
    out.push_str(&format!(
        "per_block_max,{},{},{},{}\n",
        per_block_max.mean, per_block_max.std_dev, per_block_max.samples, excluded
    ));
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
