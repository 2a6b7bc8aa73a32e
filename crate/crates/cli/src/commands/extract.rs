//! `extract`: recover a secret from received (possibly degraded) videos.

use super::{gather_sources, InputFormat, RawDims};
use crate::config::{load_key, resolve_key_path, FileConfig};
use crate::error::{file_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::Args;
use cvstego::frame::VideoSource;
use cvstego::stego::extract_with_skips;
use cvstego::{
    detect_deletions, open_payload, remap_locations, DetectorOptions, FrameDeletionReport,
    FrameProvider, IndexDatabase,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Sealed payload produced by `hide`
    #[arg(long, value_name = "FILE")]
    pub payload: PathBuf,
    /// 32-byte key file (or CVSTEGO_KEY_FILE, or key_file in the config)
    #[arg(long, value_name = "FILE")]
    pub key: Option<PathBuf>,
    /// The index the payload was built against
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// Received videos: a directory or one file
    #[arg(long, value_name = "PATH")]
    pub videos: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Where to write the recovered secret
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Scan shortened videos for deleted frames and remap locations
    #[arg(long)]
    pub detect_deletions: bool,
    /// Deletion detector: spread multiplier of the first flagging pass
    #[arg(long, default_value_t = 3.0)]
    pub k1: f64,
    /// Deletion detector: spread multiplier of the second flagging pass
    #[arg(long, default_value_t = 3.0)]
    pub k2: f64,
}

pub fn run(args: &ExtractArgs, file_config: &FileConfig, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("extract");
    summary.input("payload", args.payload.display().to_string());
    summary.input("index", args.index.display().to_string());
    summary.input("videos", args.videos.display().to_string());
    summary.input("detect_deletions", args.detect_deletions);
    if !(args.k1 > 0.0 && args.k2 > 0.0) {
        return Err(CliError::Usage("--k1 and --k2 must be positive".into()));
    }

    let key_path = resolve_key_path(args.key.as_deref(), file_config)?;
    let key = load_key(&key_path)?;
    let sealed = fs::read(&args.payload).map_err(|e| file_error(&args.payload, e))?;
    let payload = open_payload(&sealed, &key)?;
    let db = IndexDatabase::load(&args.index)?;
    let sources = gather_sources(&args.videos, args.format, args.raw_dims)?;

    ui.line(format!(
        "payload: {} segments of {} bits, index fingerprint {:08x}",
        payload.segments.len(),
        payload.hash_bits,
        payload.index_fingerprint
    ));

    let mut skips = BTreeSet::new();
    let payload = if args.detect_deletions {
        let options = DetectorOptions {
            k1: args.k1,
            k2: args.k2,
        };
        let mut reports: BTreeMap<String, FrameDeletionReport> = BTreeMap::new();
        for meta in db.videos() {
            let Some(source) = sources.iter().find(|s| s.id() == meta.id) else {
                continue;
            };
            let received = source.frame_count();
            // Deleting frames strictly shortens a video, so same-length
            // videos are left alone; that also keeps detector false
            // positives from shifting untouched locations.
            if received >= meta.frame_count {
                continue;
            }
            let report = scan(source, options)?;
            ui.line(format!(
                "deletion scan: {} lost {} frames, splices after received frames {:?}",
                meta.id,
                meta.frame_count - received,
                report.splices_after
            ));
            summary.metric(
                &format!("lost_frames_{}", meta.id),
                meta.frame_count - received,
            );
            summary.metric(
                &format!("splices_{}", meta.id),
                report.splices_after.clone(),
            );
            reports.insert(meta.id.clone(), report);
        }
        if reports.is_empty() {
            ui.line("deletion scan: all videos have their indexed frame counts");
            payload
        } else {
            let remapped = remap_locations(&payload, &db, &reports)?;
            if !remapped.unrecoverable.is_empty() {
                ui.line(format!(
                    "remap: {} of {} segments sat on deleted frames and will read as zeros",
                    remapped.unrecoverable.len(),
                    remapped.payload.segments.len()
                ));
            }
            skips = remapped.unrecoverable;
            remapped.payload
        }
    } else {
        payload
    };

    let message = extract_with_skips(&payload, &db, &sources, &skips)?;
    let bytes = message.to_bytes();
    fs::write(&args.output, &bytes).map_err(|e| file_error(&args.output, e))?;
    summary.output(args.output.display());

    ui.line(format!(
        "recovered {} bytes -> {}",
        bytes.len(),
        args.output.display()
    ));
    summary.metric("segments", payload.segments.len() as u64);
    summary.metric("segments_skipped", skips.len() as u64);
    summary.metric("secret_bytes", bytes.len() as u64);
    Ok(summary)
}

fn scan(source: &VideoSource, options: DetectorOptions) -> Result<FrameDeletionReport, CliError> {
    detect_deletions(source, options).map_err(Into::into)
}
