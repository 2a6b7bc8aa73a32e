//! Subcommand implementations and the argument plumbing they share.

pub mod attack;
pub mod demo;
pub mod evaluate;
pub mod extract;
pub mod hide;
pub mod index;
pub mod sample;

use crate::error::CliError;
use crate::summary::{RunSummary, Ui};
use clap::ValueEnum;
use cvstego::frame::{discover_sources, open_source, OpenOptions, VideoSource};
use cvstego::hash::HashMethod;
use cvstego::index::dataset_dc_vectors;
use cvstego::{calibrate_threshold, FrameProvider, PartitionConfig, VideoFrames};
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Which input layouts to accept when scanning a directory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Everything recognized: y4m and yuv files plus image directories.
    Auto,
    /// YUV4MPEG2 files (*.y4m).
    Y4m,
    /// Headerless planar YUV 4:2:0 files (*.yuv, *.raw); needs --raw-dims.
    Yuv,
    /// Subdirectories of numbered image frames (png/ppm/bmp).
    Imgdir,
}

/// Hash method flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Compare each region DC against the block maximum.
    MaxDc,
    /// Compare each region DC against its right neighbor.
    #[value(alias = "adjacent-dc")]
    AdjDc,
}

impl MethodArg {
    pub fn to_method(self) -> HashMethod {
        match self {
            MethodArg::MaxDc => HashMethod::MaxDc,
            MethodArg::AdjDc => HashMethod::AdjacentDc,
        }
    }
}

/// Stable spelling for summaries and reports.
pub fn method_name(method: HashMethod) -> &'static str {
    match method {
        HashMethod::MaxDc => "max-dc",
        HashMethod::AdjacentDc => "adj-dc",
    }
}

/// WIDTHxHEIGHT of headerless raw YUV input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawDims {
    pub width: usize,
    pub height: usize,
}

impl FromStr for RawDims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let parse = |part: &str, name: &str| {
            part.parse::<usize>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| format!("{name} in {s:?} must be a positive integer"))
        };
        Ok(RawDims {
            width: parse(w, "width")?,
            height: parse(h, "height")?,
        })
    }
}

/// COLSxROWS block grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub cols: u16,
    pub rows: u16,
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.cols, self.rows)
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, r) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected COLSxROWS, got {s:?}"))?;
        let parse = |part: &str, name: &str| {
            part.parse::<u16>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| format!("{name} in {s:?} must be a positive integer"))
        };
        Ok(Grid {
            cols: parse(c, "columns")?,
            rows: parse(r, "rows")?,
        })
    }
}

/// `auto` (calibrate on the inputs) or a fixed ratio threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdArg {
    Auto,
    Fixed(f64),
}

impl FromStr for ThresholdArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ThresholdArg::Auto);
        }
        s.parse::<f64>()
            .map(ThresholdArg::Fixed)
            .map_err(|_| format!("expected `auto` or a number, got {s:?}"))
    }
}

/// Opens `input` — one video file, one image directory, or a directory of
/// inputs — applying the format filter to directory scans.
pub fn gather_sources(
    input: &Path,
    format: InputFormat,
    raw: Option<RawDims>,
) -> Result<Vec<VideoSource>, CliError> {
    if format == InputFormat::Yuv && raw.is_none() {
        return Err(CliError::Usage(
            "raw YUV input needs --raw-dims WIDTHxHEIGHT".into(),
        ));
    }
    let options = OpenOptions {
        raw_dimensions: raw.map(|d| (d.width, d.height)),
    };
    if !input.exists() {
        return Err(CliError::Data(format!(
            "input path {} does not exist",
            input.display()
        )));
    }
    if input.is_file() || format == InputFormat::Auto {
        return Ok(discover_sources(input, &options)?);
    }
    // A directory under a specific format: scan and filter ourselves.
    let mut paths: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| match format {
            InputFormat::Auto => unreachable!("handled above"),
            InputFormat::Y4m => has_extension(p, &["y4m"]),
            InputFormat::Yuv => has_extension(p, &["yuv", "raw"]),
            InputFormat::Imgdir => p.is_dir(),
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "no inputs of the requested format under {}",
            input.display()
        )));
    }
    let mut sources = Vec::with_capacity(paths.len());
    let mut seen = BTreeSet::new();
    for path in paths {
        let source = open_source(&path, &options)?;
        if !seen.insert(source.id().to_string()) {
            return Err(CliError::Data(format!(
                "duplicate video id {:?} in input set",
                source.id()
            )));
        }
        sources.push(source);
    }
    Ok(sources)
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
}

/// Loads every source fully into memory, for pipelines that re-render
/// frames (attacks) or read them repeatedly.
pub fn load_videos(sources: &[VideoSource]) -> Result<Vec<VideoFrames>, CliError> {
    sources
        .iter()
        .map(|s| VideoFrames::load(s).map_err(Into::into))
        .collect()
}

/// Builds the partition config, calibrating the threshold on the inputs
/// when the flag says `auto`. Returns the config and whether it was
/// calibrated.
pub fn resolve_config<P: FrameProvider>(
    sources: &[P],
    grid: Grid,
    hash_bits: u8,
    threshold: ThresholdArg,
) -> Result<(PartitionConfig, bool), CliError> {
    let build = |t: f64| {
        PartitionConfig::new(grid.cols, grid.rows, hash_bits, t)
            .map_err(|e| CliError::Usage(e.to_string()))
    };
    match threshold {
        ThresholdArg::Fixed(t) => Ok((build(t)?, false)),
        ThresholdArg::Auto => {
            // The probe threshold is irrelevant: DC extraction ignores it.
            let probe = build(0.85)?;
            let dcvs = dataset_dc_vectors(sources, &probe)?;
            let t = calibrate_threshold(&dcvs).map_err(|e| CliError::Data(e.to_string()))?;
            Ok((build(t)?, true))
        }
    }
}

/// Writes `text` to `path`, or prints it when no path is given. In JSON
/// mode nothing is printed — stdout belongs to the summary — so pass a
/// path to keep the data.
pub fn emit_text(
    ui: &Ui,
    path: Option<&Path>,
    text: &str,
    summary: &mut RunSummary,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            summary.output(p.display());
        }
        None => {
            if !ui.json {
                print!("{text}");
            }
        }
    }
    Ok(())
}

/// Per-video attack seed: decorrelates videos while keeping the run
/// reproducible from one base seed.
pub fn video_seed(base: u64, position: usize) -> u64 {
    base.wrapping_add(position as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_dims_parse_and_reject() {
        assert_eq!(
            "416x240".parse::<RawDims>().unwrap(),
            RawDims {
                width: 416,
                height: 240
            }
        );
        assert!("416".parse::<RawDims>().is_err());
        assert!("0x240".parse::<RawDims>().is_err());
        assert!("416xabc".parse::<RawDims>().is_err());
    }

    #[test]
    fn grids_parse_both_cases_and_print_canonically() {
        let g: Grid = "13X7".parse().unwrap();
        assert_eq!(g, Grid { cols: 13, rows: 7 });
        assert_eq!(g.to_string(), "13x7");
        assert!("13".parse::<Grid>().is_err());
    }

    #[test]
    fn thresholds_parse_auto_and_numbers() {
        assert_eq!("auto".parse::<ThresholdArg>().unwrap(), ThresholdArg::Auto);
        assert_eq!(
            "0.85".parse::<ThresholdArg>().unwrap(),
            ThresholdArg::Fixed(0.85)
        );
        assert!("fast".parse::<ThresholdArg>().is_err());
    }

    #[test]
    fn yuv_format_requires_dimensions() {
        let err = gather_sources(Path::new("."), InputFormat::Yuv, None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.message().contains("--raw-dims"));
    }
}
