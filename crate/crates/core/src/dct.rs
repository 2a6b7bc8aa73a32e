//! Block partitioning and DC-sum features.
//!
//! A cropped luma plane is cut into a `cols`×`rows` grid of equal blocks
//! (raster order). Each block is examined as a 4×4 grid of sixteen regions,
//! and each region is an exact tiling of 8×8 pixel tiles. The feature kept
//! per region is the sum of its tiles' DC coefficients under the orthonormal
//! 2-D DCT-II. No level shift is applied, so the features are non-negative.

use thiserror::Error;

use crate::frame::{FramePlane, CELL};

/// Side of the region grid inside one block.
pub const REGION_GRID: usize = 4;
/// Number of regions per block.
pub const REGION_COUNT: usize = 16;
/// Side of one transform tile.
pub const TILE: usize = 8;
/// Longest supported hash, one bit per region ratio except the maximum itself.
pub const MAX_HASH_BITS: u8 = 15;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("grid must have at least one column and one row")]
    ZeroGrid,
    #[error("hash length {0} outside 1..=15")]
    HashBitsOutOfRange(u8),
    #[error("threshold {0} outside (0, 1)")]
    ThresholdOutOfRange(f64),
}

/// Grid geometry plus the hashing parameters that travel with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionConfig {
    cols: u16,
    rows: u16,
    hash_bits: u8,
    threshold: f64,
}

impl PartitionConfig {
    pub fn new(cols: u16, rows: u16, hash_bits: u8, threshold: f64) -> Result<Self, ConfigError> {
        if cols == 0 || rows == 0 {
            return Err(ConfigError::ZeroGrid);
        }
        if hash_bits == 0 || hash_bits > MAX_HASH_BITS {
            return Err(ConfigError::HashBitsOutOfRange(hash_bits));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ConfigError::ThresholdOutOfRange(threshold));
        }
        Ok(Self {
            cols,
            rows,
            hash_bits,
            threshold,
        })
    }

    /// Blocks per frame row (grid width).
    pub fn cols(&self) -> u16 {
        self.cols
    }

    /// Blocks per frame column (grid height).
    pub fn rows(&self) -> u16 {
        self.rows
    }

    /// Hash bits kept per block.
    pub fn hash_bits(&self) -> u8 {
        self.hash_bits
    }

    /// Ratio threshold used by the max-DC hash rule.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Same geometry with a different threshold.
    pub fn with_threshold(self, threshold: f64) -> Result<Self, ConfigError> {
        Self::new(self.cols, self.rows, self.hash_bits, threshold)
    }

    /// Same geometry with a different hash length.
    pub fn with_hash_bits(self, hash_bits: u8) -> Result<Self, ConfigError> {
        Self::new(self.cols, self.rows, hash_bits, self.threshold)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error(
        "plane {width}x{height} is not cropped for a {cols}x{rows} grid \
         (need multiples of {unit_w}x{unit_h})"
    )]
    NotCropped {
        width: usize,
        height: usize,
        cols: u16,
        rows: u16,
        unit_w: usize,
        unit_h: usize,
    },
    #[error("block ({x}, {y}) outside the {cols}x{rows} grid")]
    BlockOutOfGrid { x: u16, y: u16, cols: u16, rows: u16 },
}

/// Pixel rectangle of one grid block. `x` runs 1..=cols left to right,
/// `y` runs 1..=rows top to bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockRegion {
    pub x: u16,
    pub y: u16,
    pub px: usize,
    pub py: usize,
    pub width: usize,
    pub height: usize,
}

fn block_size(plane: &FramePlane, config: &PartitionConfig) -> Result<(usize, usize), PartitionError> {
    let unit_w = CELL * config.cols() as usize;
    let unit_h = CELL * config.rows() as usize;
    if plane.width() == 0
        || plane.height() == 0
        || !plane.width().is_multiple_of(unit_w)
        || !plane.height().is_multiple_of(unit_h)
    {
        return Err(PartitionError::NotCropped {
            width: plane.width(),
            height: plane.height(),
            cols: config.cols(),
            rows: config.rows(),
            unit_w,
            unit_h,
        });
    }
    Ok((
        plane.width() / config.cols() as usize,
        plane.height() / config.rows() as usize,
    ))
}

/// The rectangle of block `(x, y)` in a cropped plane.
pub fn block_region(
    plane: &FramePlane,
    config: &PartitionConfig,
    x: u16,
    y: u16,
) -> Result<BlockRegion, PartitionError> {
    if x == 0 || x > config.cols() || y == 0 || y > config.rows() {
        return Err(PartitionError::BlockOutOfGrid {
            x,
            y,
            cols: config.cols(),
            rows: config.rows(),
        });
    }
    let (bw, bh) = block_size(plane, config)?;
    Ok(BlockRegion {
        x,
        y,
        px: (x - 1) as usize * bw,
        py: (y - 1) as usize * bh,
        width: bw,
        height: bh,
    })
}

/// All blocks of a cropped plane in raster order (left to right, top to
/// bottom).
pub fn partition_blocks(
    plane: &FramePlane,
    config: &PartitionConfig,
) -> Result<Vec<BlockRegion>, PartitionError> {
    let (bw, bh) = block_size(plane, config)?;
    let mut blocks = Vec::with_capacity(config.cols() as usize * config.rows() as usize);
    for y in 1..=config.rows() {
        for x in 1..=config.cols() {
            blocks.push(BlockRegion {
                x,
                y,
                px: (x - 1) as usize * bw,
                py: (y - 1) as usize * bh,
                width: bw,
                height: bh,
            });
        }
    }
    Ok(blocks)
}

/// The sixteen per-region DC sums of one block, region index in raster order.
#[derive(Clone, Debug, PartialEq)]
pub struct DcVector {
    pub x: u16,
    pub y: u16,
    pub dc: [f64; REGION_COUNT],
}

impl DcVector {
    /// Largest of the sixteen region features.
    pub fn max_dc(&self) -> f64 {
        self.dc.iter().copied().fold(f64::MIN, f64::max)
    }
}

/// Sums the DC coefficients of every 8×8 tile in each of the sixteen regions
/// of `block`. Under the orthonormal convention an 8×8 tile's DC equals its
/// pixel sum divided by 8, so each region feature is its pixel sum / 8 — an
/// exact integer division in f64 for any region that fits in 53 bits.
pub fn region_dc_vector(plane: &FramePlane, block: &BlockRegion) -> DcVector {
    debug_assert_eq!(block.width % (REGION_GRID * TILE), 0);
    debug_assert_eq!(block.height % (REGION_GRID * TILE), 0);
    let rw = block.width / REGION_GRID;
    let rh = block.height / REGION_GRID;
    let mut dc = [0.0f64; REGION_COUNT];
    for (i, slot) in dc.iter_mut().enumerate() {
        let rx = block.px + (i % REGION_GRID) * rw;
        let ry = block.py + (i / REGION_GRID) * rh;
        let mut sum: u64 = 0;
        for y in ry..ry + rh {
            sum += plane.row(y)[rx..rx + rw].iter().map(|&v| u64::from(v)).sum::<u64>();
        }
        *slot = sum as f64 / 8.0;
    }
    DcVector {
        x: block.x,
        y: block.y,
        dc,
    }
}

/// DC vectors for every block of a cropped plane, raster order.
pub fn frame_dc_vectors(
    plane: &FramePlane,
    config: &PartitionConfig,
) -> Result<Vec<DcVector>, PartitionError> {
    Ok(partition_blocks(plane, config)?
        .iter()
        .map(|b| region_dc_vector(plane, b))
        .collect())
}

/// Separable orthonormal 8×8 DCT-II / DCT-III pair.
pub struct Dct8 {
    /// `basis[k][n]` = c_k · cos((2n+1)kπ/16) with c_0 = 1/√8, c_k = 1/2.
    basis: [[f64; TILE]; TILE],
}

impl Dct8 {
    pub fn new() -> Self {
        let mut basis = [[0.0; TILE]; TILE];
        for (k, row) in basis.iter_mut().enumerate() {
            let scale = if k == 0 {
                (1.0 / TILE as f64).sqrt()
            } else {
                (2.0 / TILE as f64).sqrt()
            };
            for (n, cell) in row.iter_mut().enumerate() {
                *cell = scale
                    * ((2.0 * n as f64 + 1.0) * k as f64 * std::f64::consts::PI
                        / (2.0 * TILE as f64))
                        .cos();
            }
        }
        Self { basis }
    }

    /// Forward transform of a row-major 8×8 tile: F = C · X · Cᵀ.
    pub fn forward(&self, tile: &[f64; 64]) -> [f64; 64] {
        let mut rows = [0.0; 64];
        for y in 0..TILE {
            for k in 0..TILE {
                let mut acc = 0.0;
                for n in 0..TILE {
                    acc += self.basis[k][n] * tile[y * TILE + n];
                }
                rows[y * TILE + k] = acc;
            }
        }
        let mut out = [0.0; 64];
        for k in 0..TILE {
            for x in 0..TILE {
                let mut acc = 0.0;
                for n in 0..TILE {
                    acc += self.basis[k][n] * rows[n * TILE + x];
                }
                out[k * TILE + x] = acc;
            }
        }
        out
    }

    /// Inverse transform (DCT-III with the same orthonormal basis).
    pub fn inverse(&self, freq: &[f64; 64]) -> [f64; 64] {
        let mut rows = [0.0; 64];
        for y in 0..TILE {
            for n in 0..TILE {
                let mut acc = 0.0;
                for k in 0..TILE {
                    acc += self.basis[k][n] * freq[y * TILE + k];
                }
                rows[y * TILE + n] = acc;
            }
        }
        let mut out = [0.0; 64];
        for n in 0..TILE {
            for x in 0..TILE {
                let mut acc = 0.0;
                for k in 0..TILE {
                    acc += self.basis[k][n] * rows[k * TILE + x];
                }
                out[n * TILE + x] = acc;
            }
        }
        out
    }
}

impl Default for Dct8 {
    fn default() -> Self {
        Self::new()
    }
}
