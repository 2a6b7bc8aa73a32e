//! `index build`, `index audit`, and `index stats`.

use super::{
    emit_text, gather_sources, method_name, resolve_config, InputFormat, MethodArg, RawDims,
    ThresholdArg,
};
use crate::error::CliError;
use crate::summary::{RunSummary, Ui};
use clap::{Args, Subcommand};
use cvstego::hash::HashSequence;
use cvstego::{build_index, IndexDatabase};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Subcommand)]
pub enum IndexCommand {
    /// Hash every block of every input video into a carrier index
    Build(BuildArgs),
    /// Re-hash indexed locations against sources and report drift
    Audit(AuditArgs),
    /// Emit per-bucket occupancy as CSV
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Video file or directory of inputs
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Input layout to accept when scanning a directory
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Dimensions of headerless raw YUV inputs
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Block columns per frame
    #[arg(short = 'm', long)]
    pub cols: u16,
    /// Block rows per frame
    #[arg(short = 'n', long)]
    pub rows: u16,
    /// Hash length in bits (1-15)
    #[arg(short = 'L', long, value_name = "BITS")]
    pub hash_bits: u8,
    /// Hash method
    #[arg(long, value_enum, default_value_t = MethodArg::MaxDc)]
    pub method: MethodArg,
    /// Ratio threshold: a number, or `auto` to calibrate on the inputs
    #[arg(long, default_value = "auto")]
    pub threshold: ThresholdArg,
    /// Where to write the index
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
}

pub fn build(args: &BuildArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("index-build");
    summary.input("input", args.input.display().to_string());
    summary.input("cols", args.cols);
    summary.input("rows", args.rows);
    summary.input("hash_bits", args.hash_bits);
    summary.input("method", method_name(args.method.to_method()));

    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    let grid = super::Grid {
        cols: args.cols,
        rows: args.rows,
    };
    let (config, calibrated) = resolve_config(&sources, grid, args.hash_bits, args.threshold)?;
    let db = build_index(&sources, &config, args.method.to_method())?;
    db.save(&args.output)?;

    let frames: u32 = db.videos().iter().map(|v| v.frame_count).sum();
    let bytes = db.to_bytes().len();
    ui.line(format!(
        "indexed {} videos ({} frames) at {}x{} blocks, L={}, method {}",
        db.videos().len(),
        frames,
        config.cols(),
        config.rows(),
        config.hash_bits(),
        method_name(db.method()),
    ));
    ui.line(format!(
        "threshold {}{}; {} carrier blocks, {}/{} patterns occupied",
        config.threshold(),
        if calibrated { " (calibrated)" } else { "" },
        db.total_locations(),
        db.distinct_values(),
        db.bucket_count(),
    ));
    ui.line(format!(
        "wrote {} ({} bytes, fingerprint {:08x})",
        args.output.display(),
        bytes,
        db.fingerprint()
    ));

    summary.metric("videos", db.videos().len() as u64);
    summary.metric("frames", frames);
    summary.metric("total_locations", db.total_locations() as u64);
    summary.metric("distinct_values", db.distinct_values());
    summary.metric("buckets", db.bucket_count() as u64);
    summary.metric("threshold", config.threshold());
    summary.metric("threshold_calibrated", calibrated);
    summary.metric("fingerprint", format!("{:08x}", db.fingerprint()));
    summary.metric("index_bytes", bytes as u64);
    summary.output(args.output.display());
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Index file to audit
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// The video collection the index was built from
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Audit only this many locations, drawn pseudo-randomly
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Seed for the sampled subset
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn audit(args: &AuditArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("index-audit");
    summary.input("index", args.index.display().to_string());
    summary.input("input", args.input.display().to_string());
    summary.seed = Some(args.seed);

    let db = IndexDatabase::load(&args.index)?;
    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    let report = db.audit(&sources, args.sample.map(|n| (n, args.seed)));

    ui.line(format!(
        "checked {} locations: {} mismatches ({:.4}%)",
        report.checked,
        report.mismatches.len(),
        100.0 * report.mismatch_rate()
    ));
    for miss in report.mismatches.iter().take(10) {
        let loc = &miss.location;
        let now = match miss.recomputed {
            Some(v) => format!("{v}"),
            None => "unreadable".to_string(),
        };
        ui.line(format!(
            "  {}#{} block ({},{}): expected {}, found {now}",
            loc.video_id, loc.frame, loc.x, loc.y, miss.expected_value
        ));
    }
    if report.mismatches.len() > 10 {
        ui.line(format!("  ... and {} more", report.mismatches.len() - 10));
    }

    summary.metric("checked", report.checked as u64);
    summary.metric("mismatches", report.mismatches.len() as u64);
    summary.metric("mismatch_rate", report.mismatch_rate());
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Index file to inspect
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Write the occupancy CSV here instead of stdout
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn stats(args: &StatsArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("index-stats");
    summary.input("index", args.index.display().to_string());

    let db = IndexDatabase::load(&args.index)?;
    let bits = db.config().hash_bits();
    let mut csv = String::from("value,pattern,count\n");
    let mut max_bucket = 0usize;
    for (value, count) in db.occupancy() {
        let pattern = HashSequence::from_value(value, bits)
            .expect("bucket values fit the configured hash length")
            .bit_string();
        writeln!(csv, "{value},{pattern},{count}").expect("writing to a String cannot fail");
        max_bucket = max_bucket.max(count);
    }
    emit_text(ui, args.output.as_deref(), &csv, &mut summary)?;

    ui.line(format!(
        "{} buckets, {} occupied, {} locations total, largest bucket {}",
        db.bucket_count(),
        db.distinct_values(),
        db.total_locations(),
        max_bucket,
    ));
    summary.metric("buckets", db.bucket_count() as u64);
    summary.metric("distinct_values", db.distinct_values());
    summary.metric("total_locations", db.total_locations() as u64);
    summary.metric("max_bucket", max_bucket as u64);
    Ok(summary)
}
