//! Per-block hash sequences derived from region DC features.
//!
//! The primary rule compares each of the first fifteen region features to the
//! block's maximum feature: bit i is 1 when DC_i / DC_max exceeds a threshold.
//! Because both sides scale together, the hash is invariant to any positive
//! rescaling of the features. A block whose features are all zero is hashed
//! as all ones (the ratio is taken as 1 there). The baseline rule instead
//! compares each feature to its successor.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dct::{DcVector, PartitionConfig, MAX_HASH_BITS};

/// Number of raw hash bits before truncation to the configured length.
pub const RAW_BITS: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum HashError {
    #[error("bit sequence length {0} outside 1..=15")]
    LengthOutOfRange(usize),
    #[error("value {value} does not fit in {len} bits")]
    ValueTooWide { value: u16, len: u8 },
    #[error("cannot calibrate a threshold on an empty feature set")]
    EmptyDataset,
    #[error("unknown hash method {0:?}")]
    UnknownMethod(String),
}

/// Which per-block hash rule an index was built with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HashMethod {
    /// Ratio of each region feature to the block maximum vs. a threshold.
    MaxDc,
    /// Each region feature vs. its successor.
    AdjacentDc,
}

impl HashMethod {
    pub fn code(self) -> u8 {
        match self {
            HashMethod::MaxDc => 0,
            HashMethod::AdjacentDc => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HashMethod::MaxDc),
            1 => Some(HashMethod::AdjacentDc),
            _ => None,
        }
    }
}

impl fmt::Display for HashMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashMethod::MaxDc => "max-dc",
            HashMethod::AdjacentDc => "adjacent-dc",
        })
    }
}

impl FromStr for HashMethod {
    type Err = HashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-dc" => Ok(HashMethod::MaxDc),
            "adjacent-dc" => Ok(HashMethod::AdjacentDc),
            other => Err(HashError::UnknownMethod(other.to_string())),
        }
    }
}

/// A block hash: 1..=15 bits, stored packed. The decimal value is the
/// MSB-first weighted sum of the bits, so `value` and `bits()` can never
/// disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashSequence {
    value: u16,
    len: u8,
}

impl HashSequence {
    pub fn from_bits(bits: &[bool]) -> Result<Self, HashError> {
        Ok(Self {
            value: hash_to_decimal(bits)?,
            len: bits.len() as u8,
        })
    }

    pub fn from_value(value: u16, len: u8) -> Result<Self, HashError> {
        if len == 0 || len > MAX_HASH_BITS {
            return Err(HashError::LengthOutOfRange(len as usize));
        }
        if u32::from(value) >= 1u32 << len {
            return Err(HashError::ValueTooWide { value, len });
        }
        Ok(Self { value, len })
    }

    /// Decimal value of the bit sequence (MSB first).
    pub fn value(&self) -> u16 {
        self.value
    }

    /// Number of bits.
    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bits MSB first.
    pub fn bits(&self) -> Vec<bool> {
        decimal_to_bits(self.value, self.len).expect("packed value always fits")
    }

    /// The bits as a `"0101…"` string, used in messages and history keys.
    pub fn bit_string(&self) -> String {
        self.bits().iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for HashSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

/// Decimal value of an MSB-first bit sequence: sum of bit_j · 2^(L−j).
pub fn hash_to_decimal(bits: &[bool]) -> Result<u16, HashError> {
    if bits.is_empty() || bits.len() > MAX_HASH_BITS as usize {
        return Err(HashError::LengthOutOfRange(bits.len()));
    }
    let mut value = 0u16;
    for &bit in bits {
        value = (value << 1) | u16::from(bit);
    }
    Ok(value)
}

/// Inverse of [`hash_to_decimal`] for a given bit length.
pub fn decimal_to_bits(value: u16, len: u8) -> Result<Vec<bool>, HashError> {
    if len == 0 || len > MAX_HASH_BITS {
        return Err(HashError::LengthOutOfRange(len as usize));
    }
    if u32::from(value) >= 1u32 << len {
        return Err(HashError::ValueTooWide { value, len });
    }
    Ok((0..len).rev().map(|i| value >> i & 1 == 1).collect())
}

/// Ratios DC_i / DC_max for the first fifteen regions. When every feature is
/// zero the ratio is defined as 1, so such blocks hash to all ones.
pub fn max_dc_ratios(dcv: &DcVector) -> [f64; RAW_BITS] {
    let max = dcv.max_dc();
    let mut ratios = [1.0f64; RAW_BITS];
    if max > 0.0 {
        for (ratio, dc) in ratios.iter_mut().zip(&dcv.dc) {
            *ratio = dc / max;
        }
    }
    ratios
}

/// Max-ratio hash: bit i is 1 iff DC_i / DC_max > threshold; the first
/// `hash_bits` of the fifteen raw bits are kept.
pub fn max_dc_hash(dcv: &DcVector, config: &PartitionConfig) -> HashSequence {
    let ratios = max_dc_ratios(dcv);
    let bits: Vec<bool> = ratios[..config.hash_bits() as usize]
        .iter()
        .map(|&r| r > config.threshold())
        .collect();
    HashSequence::from_bits(&bits).expect("hash_bits validated by PartitionConfig")
}

/// Successor-comparison baseline: bit i is 1 iff DC_i > DC_{i+1}.
pub fn adjacent_dc_hash(dcv: &DcVector, config: &PartitionConfig) -> HashSequence {
    let bits: Vec<bool> = (0..config.hash_bits() as usize)
        .map(|i| dcv.dc[i] > dcv.dc[i + 1])
        .collect();
    HashSequence::from_bits(&bits).expect("hash_bits validated by PartitionConfig")
}

/// Hashes one block with the chosen rule.
pub fn hash_block(dcv: &DcVector, config: &PartitionConfig, method: HashMethod) -> HashSequence {
    match method {
        HashMethod::MaxDc => max_dc_hash(dcv, config),
        HashMethod::AdjacentDc => adjacent_dc_hash(dcv, config),
    }
}

/// Candidate thresholds: 0.750, 0.755, …, 0.950. Computed as integer
/// thousandths so the grid is bit-exact.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (0..=40u32).map(|k| f64::from(750 + 5 * k) / 1000.0)
}

/// Picks the grid threshold whose global ones-fraction over all fifteen raw
/// bits of `dataset` is closest to 1/2, breaking ties toward the smaller
/// threshold.
pub fn calibrate_threshold(dataset: &[DcVector]) -> Result<f64, HashError> {
    if dataset.is_empty() {
        return Err(HashError::EmptyDataset);
    }
    let mut ratios = Vec::with_capacity(dataset.len() * RAW_BITS);
    for dcv in dataset {
        ratios.extend_from_slice(&max_dc_ratios(dcv));
    }
    let total = ratios.len() as f64;
    let mut best = (f64::INFINITY, 0.0);
    for t in threshold_grid() {
        let ones = ratios.iter().filter(|&&r| r > t).count() as f64;
        let dist = (ones / total - 0.5).abs();
        if dist < best.0 {
            best = (dist, t);
        }
    }
    Ok(best.1)
}

/// Fraction of one-bits the max-ratio rule produces on `dataset` at
/// threshold `t`, over all fifteen raw bits.
pub fn ones_fraction(dataset: &[DcVector], t: f64) -> f64 {
    let mut ones = 0usize;
    let mut total = 0usize;
    for dcv in dataset {
        for r in max_dc_ratios(dcv) {
            total += 1;
            ones += usize::from(r > t);
        }
    }
    ones as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::REGION_COUNT;

    fn dcv(dc: [f64; REGION_COUNT]) -> DcVector {
        DcVector { x: 1, y: 1, dc }
    }

    fn cfg(bits: u8, t: f64) -> PartitionConfig {
        PartitionConfig::new(13, 5, bits, t).unwrap()
    }

    #[test]
    fn max_ratio_rule_flags_sub_threshold_regions() {
        // Features of 100 except region 2 at 80; max is 100, so only region 2
        // falls at ratio 0.8 <= 0.85.
        let mut dc = [100.0; REGION_COUNT];
        dc[1] = 80.0;
        let h = max_dc_hash(&dcv(dc), &cfg(15, 0.85));
        let mut expected = vec![true; 15];
        expected[1] = false;
        assert_eq!(h.bits(), expected);
    }

    #[test]
    fn max_ratio_rule_on_ramp_features() {
        // DC_i = 10·i: max is 160, threshold 0.85 → only 140 and 150 pass.
        let mut dc = [0.0; REGION_COUNT];
        for (i, v) in dc.iter_mut().enumerate() {
            *v = 10.0 * (i as f64 + 1.0);
        }
        let h = max_dc_hash(&dcv(dc), &cfg(15, 0.85));
        let bits = h.bits();
        assert!(bits[..13].iter().all(|&b| !b));
        assert!(bits[13] && bits[14]);
    }

    #[test]
    fn all_zero_blocks_hash_to_all_ones() {
        let h = max_dc_hash(&dcv([0.0; REGION_COUNT]), &cfg(8, 0.85));
        assert_eq!(h.value(), 255);
        assert_eq!(h.len(), 8);
    }

    #[test]
    fn truncation_keeps_the_first_bits() {
        let mut dc = [100.0; REGION_COUNT];
        dc[0] = 10.0;
        dc[2] = 10.0;
        let full = max_dc_hash(&dcv(dc), &cfg(15, 0.85));
        let short = max_dc_hash(&dcv(dc), &cfg(4, 0.85));
        assert_eq!(short.bits(), full.bits()[..4]);
        assert_eq!(short.bit_string(), "0101");
    }

    #[test]
    fn hash_is_invariant_to_positive_scaling() {
        let mut dc = [0.0; REGION_COUNT];
        for (i, v) in dc.iter_mut().enumerate() {
            *v = 7.0 + 13.0 * (i as f64);
        }
        let base = max_dc_hash(&dcv(dc), &cfg(15, 0.85));
        for scale in [0.001, 0.5, 2.0, 1e6] {
            let mut scaled = dc;
            for v in &mut scaled {
                *v *= scale;
            }
            assert_eq!(max_dc_hash(&dcv(scaled), &cfg(15, 0.85)), base);
        }
    }

    #[test]
    fn adjacent_rule_compares_successors() {
        let mut dc = [1.0; REGION_COUNT];
        dc[0] = 10.0;
        dc[1] = 20.0;
        dc[2] = 20.0;
        dc[3] = 5.0;
        // 10 > 20? no. 20 > 20? no. 20 > 5? yes.
        let h = adjacent_dc_hash(&dcv(dc), &cfg(3, 0.85));
        assert_eq!(h.bit_string(), "001");
    }

    #[test]
    fn decimal_round_trips_and_weights_msb_first() {
        assert_eq!(hash_to_decimal(&[true, false, true]).unwrap(), 5);
        assert_eq!(decimal_to_bits(5, 3).unwrap(), vec![true, false, true]);
        // Exhaustive at 8 bits: the packed value must equal the binary
        // interpretation of the byte.
        for byte in 0u16..=255 {
            let bits: Vec<bool> = (0..8).rev().map(|i| byte >> i & 1 == 1).collect();
            assert_eq!(hash_to_decimal(&bits).unwrap(), byte);
            assert_eq!(decimal_to_bits(byte, 8).unwrap(), bits);
        }
        assert!(hash_to_decimal(&[]).is_err());
        assert!(hash_to_decimal(&[false; 16]).is_err());
        assert!(decimal_to_bits(8, 3).is_err());
    }

    #[test]
    fn calibration_minimizes_distance_to_balanced_bits() {
        // Ratios uniform over [0, 1): the balanced split sits below the grid,
        // so the smallest grid point must win.
        let mut dataset = Vec::new();
        for k in 0..400 {
            let mut dc = [0.0; REGION_COUNT];
            dc[15] = 1000.0;
            for (i, v) in dc.iter_mut().enumerate().take(15) {
                *v = 1000.0 * (((k * 31 + i * 17 + 5) % 100) as f64 / 100.0);
            }
            dataset.push(dcv(dc));
        }
        let t = calibrate_threshold(&dataset).unwrap();
        // Independent brute force over the same grid.
        let mut best = (f64::INFINITY, 0.0);
        for cand in threshold_grid() {
            let dist = (ones_fraction(&dataset, cand) - 0.5).abs();
            if dist < best.0 {
                best = (dist, cand);
            }
        }
        assert_eq!(t, best.1);
        assert_eq!(t, 0.750);

        // Ratios uniform over [0.70, 1.00): the balanced split is near the
        // middle of the grid.
        let mut dataset = Vec::new();
        for k in 0..400 {
            let mut dc = [0.0; REGION_COUNT];
            dc[15] = 1000.0;
            for (i, v) in dc.iter_mut().enumerate().take(15) {
                *v = 1000.0 * (0.70 + 0.30 * (((k * 31 + i * 17 + 5) % 100) as f64 / 100.0));
            }
            dataset.push(dcv(dc));
        }
        let t = calibrate_threshold(&dataset).unwrap();
        assert!((0.80..=0.90).contains(&t), "calibrated {t}");
        let frac = ones_fraction(&dataset, t);
        assert!((frac - 0.5).abs() <= 0.05, "ones fraction {frac}");

        assert_eq!(calibrate_threshold(&[]), Err(HashError::EmptyDataset));
    }

    #[test]
    fn grid_is_exact_thousandths() {
        let grid: Vec<f64> = threshold_grid().collect();
        assert_eq!(grid.len(), 41);
        assert_eq!(grid[0], 0.750);
        assert_eq!(grid[1], 0.755);
        assert_eq!(grid[40], 0.950);
    }

    #[test]
    fn method_codes_round_trip() {
        for m in [HashMethod::MaxDc, HashMethod::AdjacentDc] {
            assert_eq!(HashMethod::from_code(m.code()), Some(m));
            assert_eq!(m.to_string().parse::<HashMethod>().unwrap(), m);
        }
        assert_eq!(HashMethod::from_code(9), None);
        assert!("md5".parse::<HashMethod>().is_err());
    }
}
