//! Bundled synthetic sample clips, generated deterministically at runtime so
//! the full test and demo pipeline runs without any external downloads.
//!
//! Three 416x240 clips with distinct temporal behavior:
//! - `still`: a static gradient card with two flat rectangles,
//! - `pan`: smooth value-noise terrain rigidly panning 2 px/frame,
//! - `texture`: multi-octave value noise re-seeded every frame.
//!
//! Pixel synthesis uses only arithmetic and bilinear interpolation (no
//! transcendental functions), so the clips are bit-identical across
//! platforms and the constants frozen in tests stay valid.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{write_y4m, FrameError, FramePlane, VideoFrames};

pub const SAMPLE_WIDTH: usize = 416;
pub const SAMPLE_HEIGHT: usize = 240;

/// Lattice edge of the value-noise grid; power of two so coordinates wrap
/// with a mask.
const LATTICE: usize = 64;

/// Smooth pseudo-random field: random values on a coarse lattice, bilinear
/// in between, toroidal wrapping. Output stays in [-0.5, 0.5].
struct ValueNoise {
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let lattice = (0..LATTICE * LATTICE)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        Self { lattice }
    }

    fn at(&self, ix: usize, iy: usize) -> f64 {
        self.lattice[(iy & (LATTICE - 1)) * LATTICE + (ix & (LATTICE - 1))]
    }

    /// Samples at lattice coordinates (one lattice cell per unit).
    fn sample(&self, u: f64, v: f64) -> f64 {
        let iu = u.floor();
        let iv = v.floor();
        let fu = u - iu;
        let fv = v - iv;
        // The clips keep coordinates positive, so the cast is safe.
        let ix = iu as usize;
        let iy = iv as usize;
        let top = self.at(ix, iy) * (1.0 - fu) + self.at(ix + 1, iy) * fu;
        let bottom = self.at(ix, iy + 1) * (1.0 - fu) + self.at(ix + 1, iy + 1) * fu;
        top * (1.0 - fv) + bottom * fv
    }
}

/// Static card: a two-axis gradient with one bright and one dark rectangle.
/// Every frame is identical.
pub fn still_video(frames: usize) -> VideoFrames {
    let plane = FramePlane::from_fn(SAMPLE_WIDTH, SAMPLE_HEIGHT, |x, y| {
        if (64..192).contains(&x) && (32..96).contains(&y) {
            205
        } else if (256..384).contains(&x) && (48..144).contains(&y) {
            70
        } else {
            (100 + 40 * x / SAMPLE_WIDTH + 20 * y / SAMPLE_HEIGHT) as u8
        }
    });
    VideoFrames::from_planes("still", vec![plane; frames])
}

/// Smooth two-octave terrain translating rigidly 2 px per frame — adjacent
/// frames are highly similar, which makes splices from deleted frames stand
/// out in similarity traces.
pub fn pan_video(frames: usize, seed: u64) -> VideoFrames {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = ValueNoise::new(&mut rng);
    let fine = ValueNoise::new(&mut rng);
    let planes = (0..frames)
        .map(|t| {
            let ox = 2.0 * t as f64;
            FramePlane::from_fn(SAMPLE_WIDTH, SAMPLE_HEIGHT, |x, y| {
                let fx = x as f64 + ox;
                let fy = y as f64;
                let s = 0.55 * coarse.sample(fx / 40.0, fy / 40.0)
                    + 0.45 * fine.sample(fx / 14.0, fy / 14.0);
                (160.0 + 100.0 * s).round() as u8
            })
        })
        .collect();
    VideoFrames::from_planes("pan", planes)
}

/// Natural-texture stand-in: three noise octaves, re-positioned with fresh
/// random offsets each frame, so every frame offers new block content.
pub fn texture_video(frames: usize, seed: u64) -> VideoFrames {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let octaves = [
        (ValueNoise::new(&mut rng), 48.0, 0.50),
        (ValueNoise::new(&mut rng), 16.0, 0.33),
        (ValueNoise::new(&mut rng), 8.0, 0.17),
    ];
    let planes = (0..frames)
        .map(|_| {
            let offsets: Vec<(f64, f64)> = octaves
                .iter()
                .map(|_| {
                    (
                        rng.random_range(0.0..4096.0),
                        rng.random_range(0.0..4096.0),
                    )
                })
                .collect();
            FramePlane::from_fn(SAMPLE_WIDTH, SAMPLE_HEIGHT, |x, y| {
                let mut s = 0.0;
                for ((noise, scale, amp), (ox, oy)) in octaves.iter().zip(&offsets) {
                    s += amp * noise.sample((x as f64 + ox) / scale, (y as f64 + oy) / scale);
                }
                (160.0 + 110.0 * s).round() as u8
            })
        })
        .collect();
    VideoFrames::from_planes("texture", planes)
}

pub const STILL_FRAMES: usize = 60;
pub const PAN_FRAMES: usize = 120;
pub const TEXTURE_FRAMES: usize = 60;
pub const PAN_SEED: u64 = 11;
pub const TEXTURE_SEED: u64 = 23;

/// The bundled three-clip set, in the id order a directory scan would
/// produce, with pinned seeds and lengths.
pub fn sample_set() -> Vec<VideoFrames> {
    vec![
        pan_video(PAN_FRAMES, PAN_SEED),
        still_video(STILL_FRAMES),
        texture_video(TEXTURE_FRAMES, TEXTURE_SEED),
    ]
}

/// Writes the bundled set as y4m files named after their ids.
pub fn write_sample_set(dir: impl AsRef<Path>) -> Result<(), FrameError> {
    for video in sample_set() {
        write_y4m(dir.as_ref().join(format!("{}.y4m", video.id)), &video)?;
    }
    Ok(())
}
