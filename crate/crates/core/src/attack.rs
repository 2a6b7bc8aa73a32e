//! Channel attacks: the distortions a carrier video may suffer between
//! sender and receiver. Every attack operates on the luma plane only, is a
//! pure function of (input, parameters, seed), and — for the stochastic
//! ones — derives an independent per-frame seed so frames can be processed
//! in parallel with bit-reproducible output.

use std::collections::BTreeSet;
use std::fmt;
use std::process::Command;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dct::{Dct8, TILE};
use crate::frame::{open_source, write_y4m, FrameError, FramePlane, OpenOptions, VideoFrames};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("unknown attack {0:?}")]
    UnknownAttack(String),
    #[error("attack spec {spec:?}: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot delete frame {frame}: video has {count} frames")]
    DeleteOutOfRange { frame: u32, count: u32 },
    #[error("external command failed with {status}: {stderr}")]
    ExternalFailed { status: String, stderr: String },
    #[error("external command error: {0}")]
    ExternalIo(#[from] std::io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// One attack with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackSpec {
    /// Additive Gaussian noise; sigma is on a 0..1 intensity scale.
    GaussNoise { sigma: f64 },
    /// Each pixel independently becomes 0 or 255 with probability `density`.
    SaltPepper { density: f64 },
    /// Multiplicative noise: pixel' = pixel * (1 + N(0, sigma)).
    Speckle { sigma: f64 },
    MedianFilter { kernel: usize },
    MeanFilter { kernel: usize },
    GaussFilter { kernel: usize },
    /// Blacks out a centered rectangle covering `fraction` of the area.
    CenterCrop { fraction: f64 },
    /// Blacks out everything outside a centered rectangle, removing
    /// `fraction` of the area from the borders inward.
    EdgeCrop { fraction: f64 },
    /// Counterclockwise rotation about the frame center, black fill,
    /// dimensions preserved.
    Rotate { degrees: f64 },
    /// Rigid shift in pixels, black fill.
    Translate { dx: i32, dy: i32 },
    /// Bilinear resize by `factor`, then back to the original dimensions.
    Scale { factor: f64 },
    /// Intensity remap pixel' = 255 * (pixel/255)^value.
    Gamma { value: f64 },
    HistEq,
    /// Compression surrogate: per 8x8 tile, every DCT coefficient is
    /// rounded to a multiple of `step`.
    QuantizeDct { step: f64 },
    /// Removes whole frames (1-based indices); survivors renumber.
    FrameDelete { frames: Vec<u32> },
    /// Round-trips the video through an external command; `{in}` and
    /// `{out}` expand to temporary y4m paths.
    ExternalCompress { command: String },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<(), AttackError> {
        use AttackSpec::*;
        let bad = |m: String| Err(AttackError::InvalidParameter(m));
        match self {
            GaussNoise { sigma } | Speckle { sigma } => {
                if !sigma.is_finite() || *sigma < 0.0 {
                    return bad(format!("sigma must be finite and >= 0, got {sigma}"));
                }
            }
            SaltPepper { density } => {
                if !density.is_finite() || !(0.0..=1.0).contains(density) {
                    return bad(format!("density must be in [0, 1], got {density}"));
                }
            }
            MedianFilter { kernel } | MeanFilter { kernel } | GaussFilter { kernel } => {
                if *kernel < 3 || kernel % 2 == 0 {
                    return bad(format!("kernel must be odd and >= 3, got {kernel}"));
                }
            }
            CenterCrop { fraction } | EdgeCrop { fraction } => {
                if !fraction.is_finite() || *fraction <= 0.0 || *fraction >= 1.0 {
                    return bad(format!("fraction must be in (0, 1), got {fraction}"));
                }
            }
            Rotate { degrees } => {
                if !degrees.is_finite() {
                    return bad("degrees must be finite".into());
                }
            }
            Translate { .. } | HistEq | FrameDelete { .. } => {}
            Scale { factor } => {
                if !factor.is_finite() || *factor <= 0.0 {
                    return bad(format!("factor must be > 0, got {factor}"));
                }
            }
            Gamma { value } => {
                if !value.is_finite() || *value <= 0.0 {
                    return bad(format!("gamma must be > 0, got {value}"));
                }
            }
            QuantizeDct { step } => {
                if !step.is_finite() || *step < 1.0 {
                    return bad(format!("step must be >= 1, got {step}"));
                }
            }
            ExternalCompress { command } => {
                if !command.contains("{in}") || !command.contains("{out}") {
                    return bad("command template needs {in} and {out} placeholders".into());
                }
            }
        }
        Ok(())
    }

    /// True for the whole-video attacks that cannot run frame by frame.
    pub fn is_video_level(&self) -> bool {
        matches!(
            self,
            AttackSpec::FrameDelete { .. } | AttackSpec::ExternalCompress { .. }
        )
    }

    /// Attacks one luma plane. `seed` only matters for the stochastic kinds.
    pub fn apply_plane(&self, plane: &FramePlane, seed: u64) -> Result<FramePlane, AttackError> {
        self.validate()?;
        use AttackSpec::*;
        Ok(match self {
            GaussNoise { sigma } => gauss_noise(plane, *sigma, seed),
            SaltPepper { density } => salt_pepper(plane, *density, seed),
            Speckle { sigma } => speckle(plane, *sigma, seed),
            MedianFilter { kernel } => median_filter(plane, *kernel),
            MeanFilter { kernel } => mean_filter(plane, *kernel),
            GaussFilter { kernel } => gauss_filter(plane, *kernel),
            CenterCrop { fraction } => center_crop(plane, *fraction),
            EdgeCrop { fraction } => edge_crop(plane, *fraction),
            Rotate { degrees } => rotate(plane, *degrees),
            Translate { dx, dy } => translate(plane, *dx, *dy),
            Scale { factor } => scale(plane, *factor),
            Gamma { value } => gamma(plane, *value),
            HistEq => hist_eq(plane),
            QuantizeDct { step } => quantize_dct(plane, *step),
            FrameDelete { .. } | ExternalCompress { .. } => {
                return Err(AttackError::InvalidParameter(
                    "this attack operates on whole videos, not single frames".into(),
                ))
            }
        })
    }

    /// Attacks a whole video. Frames run in parallel with per-frame seeds
    /// derived from `seed`, so output is independent of thread scheduling.
    pub fn apply_video(&self, video: &VideoFrames, seed: u64) -> Result<VideoFrames, AttackError> {
        self.validate()?;
        match self {
            AttackSpec::FrameDelete { frames } => delete_frames(video, frames),
            AttackSpec::ExternalCompress { command } => external_compress(video, command),
            _ => {
                let frames: Vec<FramePlane> = video
                    .frames
                    .par_iter()
                    .enumerate()
                    .map(|(i, plane)| self.apply_plane(plane, frame_seed(seed, i as u32 + 1)))
                    .collect::<Result<_, _>>()?;
                Ok(VideoFrames::from_planes(video.id.clone(), frames))
            }
        }
    }
}

/// Decorrelates per-frame seeds: mixes the base seed with the 1-based frame
/// index through a splitmix64 finalizer.
pub fn frame_seed(base: u64, frame: u32) -> u64 {
    let mut z = (base ^ u64::from(frame)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl FromStr for AttackSpec {
    type Err = AttackError;

    /// Parses the `name:key=value,key=value` mini-language, e.g.
    /// `gauss-noise:sigma=0.005`, `translate:dx=10,dy=-4`, `hist-eq`,
    /// `frame-delete:frames=3+9+15`. For `external-compress` everything
    /// after the first colon is the shell command template.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let bad = |reason: &str| AttackError::BadSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };

        if name == "external-compress" {
            let command = rest.ok_or_else(|| bad("missing command template"))?.to_string();
            let spec = AttackSpec::ExternalCompress { command };
            spec.validate()?;
            return Ok(spec);
        }

        let mut params: Vec<(String, String)> = Vec::new();
        if let Some(rest) = rest {
            for pair in rest.split(',') {
                if pair.trim().is_empty() {
                    continue;
                }
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| bad("parameters must look like key=value"))?;
                let k = k.trim().to_string();
                if params.iter().any(|(p, _)| *p == k) {
                    return Err(bad(&format!("duplicate parameter {k:?}")));
                }
                params.push((k, v.trim().to_string()));
            }
        }
        let mut take = |key: &str| -> Result<String, AttackError> {
            let pos = params
                .iter()
                .position(|(k, _)| k == key)
                .ok_or_else(|| bad(&format!("missing parameter {key:?}")))?;
            Ok(params.remove(pos).1)
        };
        fn num<T: FromStr>(v: &str, spec: &str) -> Result<T, AttackError> {
            v.parse().map_err(|_| AttackError::BadSpec {
                spec: spec.to_string(),
                reason: format!("cannot parse {v:?} as a number"),
            })
        }

        let spec = match name {
            "gauss-noise" => AttackSpec::GaussNoise { sigma: num(&take("sigma")?, s)? },
            "salt-pepper" => AttackSpec::SaltPepper { density: num(&take("density")?, s)? },
            "speckle" => AttackSpec::Speckle { sigma: num(&take("sigma")?, s)? },
            "median-filter" => AttackSpec::MedianFilter { kernel: num(&take("kernel")?, s)? },
            "mean-filter" => AttackSpec::MeanFilter { kernel: num(&take("kernel")?, s)? },
            "gauss-filter" => AttackSpec::GaussFilter { kernel: num(&take("kernel")?, s)? },
            "center-crop" => AttackSpec::CenterCrop { fraction: num(&take("fraction")?, s)? },
            "edge-crop" => AttackSpec::EdgeCrop { fraction: num(&take("fraction")?, s)? },
            "rotate" => AttackSpec::Rotate { degrees: num(&take("degrees")?, s)? },
            "translate" => AttackSpec::Translate {
                dx: num(&take("dx")?, s)?,
                dy: num(&take("dy")?, s)?,
            },
            "scale" => AttackSpec::Scale { factor: num(&take("factor")?, s)? },
            "gamma" => AttackSpec::Gamma { value: num(&take("value")?, s)? },
            "hist-eq" => AttackSpec::HistEq,
            "quantize-dct" => AttackSpec::QuantizeDct { step: num(&take("step")?, s)? },
            "frame-delete" => {
                let list = take("frames")?;
                let frames = list
                    .split('+')
                    .filter(|p| !p.is_empty())
                    .map(|p| num::<u32>(p, s))
                    .collect::<Result<Vec<_>, _>>()?;
                AttackSpec::FrameDelete { frames }
            }
            other => return Err(AttackError::UnknownAttack(other.to_string())),
        };
        if !params.is_empty() {
            return Err(bad(&format!("unknown parameter {:?}", params[0].0)));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AttackSpec::*;
        match self {
            GaussNoise { sigma } => write!(f, "gauss-noise:sigma={sigma}"),
            SaltPepper { density } => write!(f, "salt-pepper:density={density}"),
            Speckle { sigma } => write!(f, "speckle:sigma={sigma}"),
            MedianFilter { kernel } => write!(f, "median-filter:kernel={kernel}"),
            MeanFilter { kernel } => write!(f, "mean-filter:kernel={kernel}"),
            GaussFilter { kernel } => write!(f, "gauss-filter:kernel={kernel}"),
            CenterCrop { fraction } => write!(f, "center-crop:fraction={fraction}"),
            EdgeCrop { fraction } => write!(f, "edge-crop:fraction={fraction}"),
            Rotate { degrees } => write!(f, "rotate:degrees={degrees}"),
            Translate { dx, dy } => write!(f, "translate:dx={dx},dy={dy}"),
            Scale { factor } => write!(f, "scale:factor={factor}"),
            Gamma { value } => write!(f, "gamma:value={value}"),
            HistEq => write!(f, "hist-eq"),
            QuantizeDct { step } => write!(f, "quantize-dct:step={step}"),
            FrameDelete { frames } => {
                let list: Vec<String> = frames.iter().map(u32::to_string).collect();
                write!(f, "frame-delete:frames={}", list.join("+"))
            }
            ExternalCompress { command } => write!(f, "external-compress:{command}"),
        }
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn gauss_noise(plane: &FramePlane, sigma: f64, seed: u64) -> FramePlane {
    if sigma == 0.0 {
        return plane.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let data = plane
        .data()
        .iter()
        .map(|&p| clamp_u8(f64::from(p) + 255.0 * normal.sample(&mut rng)))
        .collect();
    FramePlane::new(plane.width(), plane.height(), data).expect("same dimensions")
}

fn salt_pepper(plane: &FramePlane, density: f64, seed: u64) -> FramePlane {
    if density == 0.0 {
        return plane.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = plane
        .data()
        .iter()
        .map(|&p| {
            if rng.random_bool(density) {
                if rng.random_bool(0.5) {
                    255
                } else {
                    0
                }
            } else {
                p
            }
        })
        .collect();
    FramePlane::new(plane.width(), plane.height(), data).expect("same dimensions")
}

fn speckle(plane: &FramePlane, sigma: f64, seed: u64) -> FramePlane {
    if sigma == 0.0 {
        return plane.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let data = plane
        .data()
        .iter()
        .map(|&p| clamp_u8(f64::from(p) * (1.0 + normal.sample(&mut rng))))
        .collect();
    FramePlane::new(plane.width(), plane.height(), data).expect("same dimensions")
}

/// Neighborhood iterator with replicate borders.
fn window(plane: &FramePlane, cx: usize, cy: usize, k: usize) -> impl Iterator<Item = u8> + '_ {
    let r = (k / 2) as isize;
    let (w, h) = (plane.width() as isize, plane.height() as isize);
    let (cx, cy) = (cx as isize, cy as isize);
    (-r..=r).flat_map(move |dy| {
        (-r..=r).map(move |dx| {
            let x = (cx + dx).clamp(0, w - 1) as usize;
            let y = (cy + dy).clamp(0, h - 1) as usize;
            plane.get(x, y)
        })
    })
}

fn median_filter(plane: &FramePlane, k: usize) -> FramePlane {
    FramePlane::from_fn(plane.width(), plane.height(), |x, y| {
        let mut values: Vec<u8> = window(plane, x, y, k).collect();
        values.sort_unstable();
        values[values.len() / 2]
    })
}

fn mean_filter(plane: &FramePlane, k: usize) -> FramePlane {
    let n = (k * k) as f64;
    FramePlane::from_fn(plane.width(), plane.height(), |x, y| {
        let sum: u32 = window(plane, x, y, k).map(u32::from).sum();
        clamp_u8(f64::from(sum) / n)
    })
}

/// Standard deviation used for a Gaussian kernel of size `k`:
/// 0.3*((k-1)/2 - 1) + 0.8, the common default tied to kernel size.
fn gauss_kernel(k: usize) -> Vec<f64> {
    let sigma = 0.3 * ((k as f64 - 1.0) / 2.0 - 1.0) + 0.8;
    let c = (k / 2) as f64;
    let mut kernel: Vec<f64> = (0..k)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= total;
    }
    kernel
}

fn gauss_filter(plane: &FramePlane, k: usize) -> FramePlane {
    let kernel = gauss_kernel(k);
    let r = (k / 2) as isize;
    let (w, h) = (plane.width(), plane.height());

    // Horizontal pass into floats, then vertical pass back to bytes;
    // borders replicate.
    let mut mid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in kernel.iter().enumerate() {
                let sx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * f64::from(plane.get(sx, y));
            }
            mid[y * w + x] = acc;
        }
    }
    FramePlane::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (i, kv) in kernel.iter().enumerate() {
            let sy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
            acc += kv * mid[sy * w + x];
        }
        clamp_u8(acc)
    })
}

/// Centered rectangle covering `fraction` of the plane's area
/// (side scale sqrt(fraction)); returns (x0, y0, width, height).
fn centered_rect(plane: &FramePlane, fraction: f64) -> (usize, usize, usize, usize) {
    let side = fraction.sqrt();
    let rw = ((plane.width() as f64) * side).round() as usize;
    let rh = ((plane.height() as f64) * side).round() as usize;
    let rw = rw.min(plane.width());
    let rh = rh.min(plane.height());
    ((plane.width() - rw) / 2, (plane.height() - rh) / 2, rw, rh)
}

fn center_crop(plane: &FramePlane, fraction: f64) -> FramePlane {
    let (x0, y0, rw, rh) = centered_rect(plane, fraction);
    let mut out = plane.clone();
    for y in y0..y0 + rh {
        out.data_mut()[y * plane.width() + x0..y * plane.width() + x0 + rw].fill(0);
    }
    out
}

fn edge_crop(plane: &FramePlane, fraction: f64) -> FramePlane {
    let (x0, y0, rw, rh) = centered_rect(plane, 1.0 - fraction);
    FramePlane::from_fn(plane.width(), plane.height(), |x, y| {
        if x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh {
            plane.get(x, y)
        } else {
            0
        }
    })
}

/// Bilinear sample; coordinates outside the plane read as black.
fn sample_black(plane: &FramePlane, fx: f64, fy: f64) -> f64 {
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let mut acc = 0.0;
    for (dy, wy) in [(0.0, 1.0 - ty), (1.0, ty)] {
        for (dx, wx) in [(0.0, 1.0 - tx), (1.0, tx)] {
            let x = x0 + dx;
            let y = y0 + dy;
            let v = if x < 0.0
                || y < 0.0
                || x >= plane.width() as f64
                || y >= plane.height() as f64
            {
                0.0
            } else {
                f64::from(plane.get(x as usize, y as usize))
            };
            acc += wx * wy * v;
        }
    }
    acc
}

fn rotate(plane: &FramePlane, degrees: f64) -> FramePlane {
    if degrees % 360.0 == 0.0 {
        return plane.clone();
    }
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (plane.width() as f64 - 1.0) / 2.0;
    let cy = (plane.height() as f64 - 1.0) / 2.0;
    // Inverse mapping: each output pixel pulls from the input rotated the
    // other way, so the content appears rotated counterclockwise by theta
    // (y grows downward).
    FramePlane::from_fn(plane.width(), plane.height(), |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cx + cos * dx - sin * dy;
        let sy = cy + sin * dx + cos * dy;
        clamp_u8(sample_black(plane, sx, sy))
    })
}

fn translate(plane: &FramePlane, dx: i32, dy: i32) -> FramePlane {
    if dx == 0 && dy == 0 {
        return plane.clone();
    }
    let (w, h) = (plane.width() as i64, plane.height() as i64);
    FramePlane::from_fn(plane.width(), plane.height(), |x, y| {
        let sx = x as i64 - i64::from(dx);
        let sy = y as i64 - i64::from(dy);
        if sx < 0 || sy < 0 || sx >= w || sy >= h {
            0
        } else {
            plane.get(sx as usize, sy as usize)
        }
    })
}

/// Bilinear resize with pixel-center alignment and replicated edges.
fn resize(plane: &FramePlane, nw: usize, nh: usize) -> FramePlane {
    if nw == plane.width() && nh == plane.height() {
        return plane.clone();
    }
    let sx = plane.width() as f64 / nw as f64;
    let sy = plane.height() as f64 / nh as f64;
    FramePlane::from_fn(nw, nh, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, plane.width() as f64 - 1.0);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, plane.height() as f64 - 1.0);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(plane.width() - 1);
        let y1 = (y0 + 1).min(plane.height() - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let top = f64::from(plane.get(x0, y0)) * (1.0 - tx) + f64::from(plane.get(x1, y0)) * tx;
        let bottom = f64::from(plane.get(x0, y1)) * (1.0 - tx) + f64::from(plane.get(x1, y1)) * tx;
        clamp_u8(top * (1.0 - ty) + bottom * ty)
    })
}

fn scale(plane: &FramePlane, factor: f64) -> FramePlane {
    if factor == 1.0 {
        return plane.clone();
    }
    let nw = ((plane.width() as f64 * factor).round() as usize).max(1);
    let nh = ((plane.height() as f64 * factor).round() as usize).max(1);
    let shrunk = resize(plane, nw, nh);
    resize(&shrunk, plane.width(), plane.height())
}

fn gamma(plane: &FramePlane, value: f64) -> FramePlane {
    if value == 1.0 {
        return plane.clone();
    }
    let lut: Vec<u8> = (0..=255u16)
        .map(|i| clamp_u8(255.0 * (f64::from(i) / 255.0).powf(value)))
        .collect();
    let data = plane.data().iter().map(|&p| lut[p as usize]).collect();
    FramePlane::new(plane.width(), plane.height(), data).expect("same dimensions")
}

fn hist_eq(plane: &FramePlane) -> FramePlane {
    let mut histogram = [0u64; 256];
    for &p in plane.data() {
        histogram[p as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut running = 0;
    for (i, &count) in histogram.iter().enumerate() {
        running += count;
        cdf[i] = running;
    }
    let total = plane.data().len() as u64;
    let cdf_min = cdf
        .iter()
        .copied()
        .find(|&c| c > 0)
        .expect("plane is nonempty");
    if cdf_min == total {
        // Single-valued plane: the remap is degenerate, leave it alone.
        return plane.clone();
    }
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| {
            let scaled = (c.saturating_sub(cdf_min)) as f64 / (total - cdf_min) as f64;
            clamp_u8(scaled * 255.0)
        })
        .collect();
    let data = plane.data().iter().map(|&p| lut[p as usize]).collect();
    FramePlane::new(plane.width(), plane.height(), data).expect("same dimensions")
}

/// Rounds every coefficient of every complete 8x8 tile's DCT to a multiple
/// of `step`. Partial tiles at the right/bottom edges pass through.
pub fn quantize_dct(plane: &FramePlane, step: f64) -> FramePlane {
    let dct = Dct8::new();
    let mut out = plane.clone();
    let (w, h) = (plane.width(), plane.height());
    for ty in 0..h / TILE {
        for tx in 0..w / TILE {
            let mut tile = [0.0f64; TILE * TILE];
            for r in 0..TILE {
                for c in 0..TILE {
                    tile[r * TILE + c] = f64::from(plane.get(tx * TILE + c, ty * TILE + r));
                }
            }
            let mut freq = dct.forward(&tile);
            for v in &mut freq {
                *v = (*v / step).round() * step;
            }
            let back = dct.inverse(&freq);
            for r in 0..TILE {
                for c in 0..TILE {
                    out.data_mut()[(ty * TILE + r) * w + tx * TILE + c] = clamp_u8(back[r * TILE + c]);
                }
            }
        }
    }
    out
}

/// Removes the 1-based `indices` from the video; remaining frames renumber
/// consecutively. Duplicates in `indices` are allowed.
pub fn delete_frames(video: &VideoFrames, indices: &[u32]) -> Result<VideoFrames, AttackError> {
    let count = video.frames.len() as u32;
    let dropped: BTreeSet<u32> = indices.iter().copied().collect();
    if let Some(&bad) = dropped.iter().find(|&&i| i == 0 || i > count) {
        return Err(AttackError::DeleteOutOfRange { frame: bad, count });
    }
    let frames = video
        .frames
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(&(*i as u32 + 1)))
        .map(|(_, p)| p.clone())
        .collect();
    Ok(VideoFrames::from_planes(video.id.clone(), frames))
}

/// Writes the video to a temporary y4m file, runs `command` with `{in}` and
/// `{out}` substituted (via `sh -c`), and re-ingests the output.
pub fn external_compress(video: &VideoFrames, command: &str) -> Result<VideoFrames, AttackError> {
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("input.y4m");
    let output = dir.path().join("output.y4m");
    write_y4m(&input, video)?;

    let cmdline = command
        .replace("{in}", &input.to_string_lossy())
        .replace("{out}", &output.to_string_lossy());
    let result = Command::new("sh").arg("-c").arg(&cmdline).output()?;
    if !result.status.success() {
        return Err(AttackError::ExternalFailed {
            status: result.status.to_string(),
            stderr: String::from_utf8_lossy(&result.stderr).into_owned(),
        });
    }

    let source = open_source(&output, &OpenOptions::default())?;
    let mut reloaded = VideoFrames::load(&source)?;
    reloaded.id = video.id.clone();
    Ok(reloaded)
}
