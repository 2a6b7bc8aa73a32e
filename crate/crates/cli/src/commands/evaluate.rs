//! `evaluate accuracy|capacity|model`: measurement runs over a video
//! collection, emitted as CSV.

use super::{
    emit_text, gather_sources, load_videos, method_name, resolve_config, video_seed, Grid,
    InputFormat, MethodArg, RawDims, ThresholdArg,
};
use crate::error::{spec_parse_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::{Args, Subcommand};
use cvstego::eval::{
    accuracy_csv, capacity_csv, capacity_report, change_rates, effective_capacity, fit_gaussian,
    model_summary_csv, pdf_csv, pdf_curve, AccuracyRow, GaussianFit, RateSample,
};
use cvstego::index::dataset_hashes;
use cvstego::payload::FieldWidths;
use cvstego::{extraction_accuracy, AttackSpec, FrameProvider, VideoFrames};
use std::path::PathBuf;

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Hash-sequence survival rate under frame-aligned attacks
    Accuracy(AccuracyArgs),
    /// Distinct hash values per video and over the whole collection
    Capacity(CapacityArgs),
    /// Gaussian fit of relative DC changes under an attack
    Model(ModelArgs),
}

/// Rejects attacks that change frame alignment: accuracy and rate
/// measurements compare position by position.
fn aligned_spec(text: &str) -> Result<AttackSpec, CliError> {
    let spec: AttackSpec = text.parse().map_err(spec_parse_error)?;
    if spec.is_video_level() {
        return Err(CliError::Usage(format!(
            "{text:?} rewrites whole videos; this measurement needs frame-aligned pairs"
        )));
    }
    Ok(spec)
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    /// Video file or directory of inputs
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Attack to measure; repeat for a matrix
    #[arg(long = "spec", value_name = "SPEC", required = true)]
    pub specs: Vec<String>,
    /// Block grid COLSxROWS; repeat for a matrix
    #[arg(long = "grid", value_name = "CxR", default_values_t = [Grid { cols: 13, rows: 7 }])]
    pub grids: Vec<Grid>,
    /// Hash length in bits (1-15)
    #[arg(short = 'L', long, default_value_t = 8)]
    pub hash_bits: u8,
    #[arg(long, value_enum, default_value_t = MethodArg::MaxDc)]
    pub method: MethodArg,
    /// Ratio threshold: a number, or `auto` to calibrate per grid
    #[arg(long, default_value = "auto")]
    pub threshold: ThresholdArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn accuracy(args: &AccuracyArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("evaluate-accuracy");
    summary.input("input", args.input.display().to_string());
    summary.input("hash_bits", args.hash_bits);
    summary.input("method", method_name(args.method.to_method()));
    summary.seed = Some(args.seed);

    let specs: Vec<(String, AttackSpec)> = args
        .specs
        .iter()
        .map(|s| aligned_spec(s).map(|spec| (s.clone(), spec)))
        .collect::<Result<_, _>>()?;
    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    let videos = load_videos(&sources)?;

    let mut rows = Vec::new();
    for grid in &args.grids {
        let (config, _) = resolve_config(&videos, *grid, args.hash_bits, args.threshold)?;
        let original = dataset_hashes(&videos, &config, args.method.to_method())?;
        for (text, spec) in &specs {
            let attacked: Vec<VideoFrames> = videos
                .iter()
                .enumerate()
                .map(|(i, v)| spec.apply_video(v, video_seed(args.seed, i)))
                .collect::<Result<_, _>>()?;
            let degraded = dataset_hashes(&attacked, &config, args.method.to_method())?;
            let acc = extraction_accuracy(&original, &degraded)?;
            ui.line(format!("{text} @ {grid}: {acc:.2}% of {} hashes intact", original.len()));
            summary.metric(&format!("accuracy {text} @ {grid}"), acc);
            rows.push(AccuracyRow {
                attack: text.clone(),
                block_grid: grid.to_string(),
                accuracy: acc,
            });
        }
    }
    emit_text(ui, args.output.as_deref(), &accuracy_csv(&rows), &mut summary)?;
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Video file or directory of inputs
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Block grid COLSxROWS
    #[arg(long, value_name = "CxR", default_value_t = Grid { cols: 13, rows: 7 })]
    pub grid: Grid,
    /// Hash length in bits (1-15)
    #[arg(short = 'L', long, default_value_t = 8)]
    pub hash_bits: u8,
    #[arg(long, value_enum, default_value_t = MethodArg::MaxDc)]
    pub method: MethodArg,
    /// Ratio threshold: a number, or `auto` to calibrate on the inputs
    #[arg(long, default_value = "auto")]
    pub threshold: ThresholdArg,
    /// Write the CSV here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn capacity(args: &CapacityArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("evaluate-capacity");
    summary.input("input", args.input.display().to_string());
    summary.input("grid", args.grid.to_string());
    summary.input("hash_bits", args.hash_bits);

    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    let videos = load_videos(&sources)?;
    let (config, _) = resolve_config(&videos, args.grid, args.hash_bits, args.threshold)?;

    // One location record must address any block in the collection, so the
    // auxiliary cost is fixed by the collection's dimensions.
    let max_frames = videos.iter().map(|v| v.frame_count()).max().unwrap_or(0);
    let aux_bits = FieldWidths::from_dimensions(
        config.cols(),
        config.rows(),
        max_frames,
        videos.len() as u32,
    )
    .total();

    let method = args.method.to_method();
    let mut rows = Vec::new();
    let mut all_hashes = Vec::new();
    for video in &videos {
        let hashes = dataset_hashes(std::slice::from_ref(video), &config, method)?;
        let distinct = effective_capacity(&hashes);
        rows.push((
            video.id.clone(),
            capacity_report(config.hash_bits(), distinct, aux_bits)?,
        ));
        all_hashes.extend(hashes);
    }
    let dataset_distinct = effective_capacity(&all_hashes);
    let dataset_row = capacity_report(config.hash_bits(), dataset_distinct, aux_bits)?;
    ui.line(format!(
        "collection: {}/{} patterns reachable, {} auxiliary bits per record, relative {:.4}",
        dataset_distinct, dataset_row.theoretical_max, aux_bits, dataset_row.relative
    ));
    summary.metric("distinct_values", dataset_distinct);
    summary.metric("theoretical_max", dataset_row.theoretical_max);
    summary.metric("aux_bits", aux_bits);
    summary.metric("relative", dataset_row.relative);
    rows.push(("dataset".into(), dataset_row));

    emit_text(ui, args.output.as_deref(), &capacity_csv(&rows), &mut summary)?;
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Video file or directory of inputs
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Attack whose DC disturbance to model
    #[arg(long, value_name = "SPEC")]
    pub spec: String,
    /// Block grid COLSxROWS
    #[arg(long, value_name = "CxR", default_value_t = Grid { cols: 13, rows: 7 })]
    pub grid: Grid,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the fit summary CSV here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Also write the per-coefficient density curve here
    #[arg(long, value_name = "FILE")]
    pub pdf_coefficient: Option<PathBuf>,
    /// Also write the per-block-maximum density curve here
    #[arg(long, value_name = "FILE")]
    pub pdf_block: Option<PathBuf>,
    /// Points per density curve
    #[arg(long, default_value_t = 201)]
    pub steps: usize,
}

pub fn model(args: &ModelArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("evaluate-model");
    summary.input("input", args.input.display().to_string());
    summary.input("spec", args.spec.clone());
    summary.input("grid", args.grid.to_string());
    summary.seed = Some(args.seed);
    if args.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }

    let spec = aligned_spec(&args.spec)?;
    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    let videos = load_videos(&sources)?;
    // Hash length and threshold play no part in DC change rates; any valid
    // values satisfy the partition constructor.
    let config = cvstego::PartitionConfig::new(args.grid.cols, args.grid.rows, 8, 0.85)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut combined = RateSample::default();
    for (i, video) in videos.iter().enumerate() {
        let attacked = spec.apply_video(video, video_seed(args.seed, i))?;
        let rates = change_rates(&video.frames, &attacked.frames, &config)?;
        combined.per_coefficient.extend(rates.per_coefficient);
        combined.per_block_max.extend(rates.per_block_max);
        combined.excluded += rates.excluded;
    }
    let coefficient_fit = fit_gaussian(&combined.per_coefficient)?;
    let block_fit = fit_gaussian(&combined.per_block_max)?;

    ui.line(format!(
        "per-coefficient: mean {:.6}, std {:.6} over {} samples",
        coefficient_fit.mean, coefficient_fit.std_dev, coefficient_fit.samples
    ));
    ui.line(format!(
        "per-block max:   mean {:.6}, std {:.6} over {} samples ({} skipped)",
        block_fit.mean, block_fit.std_dev, block_fit.samples, combined.excluded
    ));
    summary.metric("per_coefficient_mean", coefficient_fit.mean);
    summary.metric("per_coefficient_std", coefficient_fit.std_dev);
    summary.metric("per_coefficient_samples", coefficient_fit.samples as u64);
    summary.metric("per_block_mean", block_fit.mean);
    summary.metric("per_block_std", block_fit.std_dev);
    summary.metric("per_block_samples", block_fit.samples as u64);
    summary.metric("excluded", combined.excluded as u64);

    emit_text(
        ui,
        args.output.as_deref(),
        &model_summary_csv(&coefficient_fit, &block_fit, combined.excluded),
        &mut summary,
    )?;
    if let Some(path) = &args.pdf_coefficient {
        emit_text(ui, Some(path), &pdf_csv(&curve(&coefficient_fit, args.steps)?), &mut summary)?;
    }
    if let Some(path) = &args.pdf_block {
        emit_text(ui, Some(path), &pdf_csv(&curve(&block_fit, args.steps)?), &mut summary)?;
    }
    Ok(summary)
}

/// Density curve across ±4 standard deviations.
fn curve(fit: &GaussianFit, steps: usize) -> Result<Vec<(f64, f64)>, CliError> {
    let span = 4.0 * fit.std_dev;
    pdf_curve(fit, fit.mean - span, fit.mean + span, steps).map_err(Into::into)
}
