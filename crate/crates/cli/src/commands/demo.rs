//! `demo`: the whole pipeline — index, hide, optional attack, extract,
//! accuracy — on one dataset, reported on one page.

use super::{
    gather_sources, load_videos, method_name, resolve_config, video_seed, Grid, InputFormat,
    MethodArg, RawDims, ThresholdArg,
};
use crate::config::{load_key, FileConfig};
use crate::error::{file_error, spec_parse_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::Args;
use cvstego::attack::frame_seed;
use cvstego::hash::hash_to_decimal;
use cvstego::index::dataset_hashes;
use cvstego::stego::extract_with_skips;
use cvstego::{
    build_index, detect_deletions, extraction_accuracy, hide, open_payload, remap_locations,
    samples, seal_payload, AttackSpec, DetectorOptions, FrameDeletionReport, FrameProvider,
    SecretMessage, TransmissionHistory,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

/// Default secret when no file is given. Every byte value here occurs as a
/// block hash in the bundled clips, so the out-of-the-box demo always finds
/// carriers; the integration tests pin that.
const DEFAULT_SECRET: &[u8] = b"what you watch holds data";

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Dataset directory; defaults to the bundled synthetic clips
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
    /// Secret file; defaults to a built-in message
    #[arg(long, value_name = "FILE")]
    pub secret: Option<PathBuf>,
    /// 32-byte key file; without one a demo key is derived from --seed
    #[arg(long, value_name = "FILE")]
    pub key: Option<PathBuf>,
    /// Distort the videos before extraction, e.g. `salt-pepper:density=0.001`
    #[arg(long, value_name = "SPEC")]
    pub attack: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Block columns per frame
    #[arg(short = 'm', long, default_value_t = 13)]
    pub cols: u16,
    /// Block rows per frame
    #[arg(short = 'n', long, default_value_t = 7)]
    pub rows: u16,
    /// Hash length in bits (1-15)
    #[arg(short = 'L', long, default_value_t = 8)]
    pub hash_bits: u8,
    #[arg(long, value_enum, default_value_t = MethodArg::MaxDc)]
    pub method: MethodArg,
    /// Ratio threshold: a number, or `auto` to calibrate on the dataset
    #[arg(long, default_value = "auto")]
    pub threshold: ThresholdArg,
    /// Keep index.bin, payload.enc, and recovered.bin here
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

/// Demo-only key material, expanded from the run seed. Real transmissions
/// should use `--key` with a randomly generated file.
fn derived_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&frame_seed(seed, 0xD000 + i as u32).to_le_bytes());
    }
    key
}

pub fn run(args: &DemoArgs, file_config: &FileConfig, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("demo");
    summary.seed = Some(args.seed);
    summary.input("hash_bits", args.hash_bits);
    summary.input("method", method_name(args.method.to_method()));

    // Dataset: a directory, or the bundled clips.
    let videos = match &args.input {
        Some(path) => {
            summary.input("input", path.display().to_string());
            load_videos(&gather_sources(path, args.format, args.raw_dims)?)?
        }
        None => {
            summary.input("input", "bundled");
            samples::sample_set()
        }
    };
    let frames: u32 = videos.iter().map(|v| v.frame_count()).sum();
    ui.line("coverless video steganography -- demo".to_string());
    ui.line(format!(
        "dataset    {} videos, {} frames: {}",
        videos.len(),
        frames,
        videos
            .iter()
            .map(|v| format!("{} ({}x{})", v.id, v.frames[0].width(), v.frames[0].height()))
            .collect::<Vec<_>>()
            .join(", ")
    ));

    // Secret and key.
    let secret_bytes = match &args.secret {
        Some(path) => {
            summary.input("secret", path.display().to_string());
            fs::read(path).map_err(|e| file_error(path, e))?
        }
        None => {
            summary.input("secret", "built-in");
            DEFAULT_SECRET.to_vec()
        }
    };
    if secret_bytes.is_empty() {
        return Err(CliError::Data("secret file is empty".into()));
    }
    let (key, key_origin) = match &args.key {
        Some(path) => (load_key(path)?, "from file"),
        None => match &file_config.key_file {
            Some(path) => (load_key(path)?, "from config"),
            None => (derived_key(args.seed), "derived from seed (demo only)"),
        },
    };

    // Stage 1: index.
    let grid = Grid {
        cols: args.cols,
        rows: args.rows,
    };
    let (config, calibrated) = resolve_config(&videos, grid, args.hash_bits, args.threshold)?;
    let db = build_index(&videos, &config, args.method.to_method())?;
    ui.line(format!(
        "index      {}x{} blocks, L={}, threshold {}{}, {}",
        config.cols(),
        config.rows(),
        config.hash_bits(),
        config.threshold(),
        if calibrated { " (auto)" } else { "" },
        method_name(db.method()),
    ));
    ui.line(format!(
        "           {} blocks indexed, {}/{} patterns occupied",
        db.total_locations(),
        db.distinct_values(),
        db.bucket_count()
    ));
    summary.metric("threshold", config.threshold());
    summary.metric("distinct_values", db.distinct_values());
    summary.metric("total_locations", db.total_locations() as u64);

    // Stage 2: hide. A missing bucket fails here, atomically, naming the
    // bit pattern nothing could carry.
    let message = SecretMessage::from_bytes(&secret_bytes);
    let mut history = TransmissionHistory::default();
    let outcome = hide(&message, &db, &mut history)?;
    let sealed = seal_payload(&outcome.payload, &key);
    let videos_used: Vec<String> = outcome.videos().iter().map(|v| v.to_string()).collect();
    ui.line(format!(
        "secret     {} bytes -> {} segments of {} bits",
        secret_bytes.len(),
        outcome.payload.segments.len(),
        config.hash_bits()
    ));
    ui.line(format!(
        "hide       {} carriers in {} video(s): {}; payload sealed, {} bytes (key {})",
        outcome.payload.segments.len(),
        videos_used.len(),
        videos_used.join(", "),
        sealed.len(),
        key_origin,
    ));
    summary.metric("segments", outcome.payload.segments.len() as u64);
    summary.metric("videos", videos_used);
    summary.metric("sealed_bytes", sealed.len() as u64);

    // Stage 3: the channel. The receiver only ever sees `received`.
    let spec = match &args.attack {
        Some(text) => {
            summary.input("attack", text.clone());
            Some((text, text.parse::<AttackSpec>().map_err(spec_parse_error)?))
        }
        None => None,
    };
    let received = match &spec {
        Some((text, spec)) => {
            let attacked = videos
                .iter()
                .enumerate()
                .map(|(i, v)| spec.apply_video(v, video_seed(args.seed, i)))
                .collect::<Result<Vec<_>, _>>()?;
            ui.line(format!("attack     {text} (seed {})", args.seed));
            attacked
        }
        None => {
            ui.line("attack     none".to_string());
            videos.clone()
        }
    };
    // For frame-aligned attacks, also measure how many block hashes across
    // the whole collection survived — the robustness figure carrier
    // selection leans on, independent of which blocks this secret used.
    if let Some((_, spec)) = &spec {
        if !spec.is_video_level() {
            let method = args.method.to_method();
            let original = dataset_hashes(&videos, &config, method)?;
            let degraded = dataset_hashes(&received, &config, method)?;
            let survival = extraction_accuracy(&original, &degraded)?;
            ui.line(format!(
                "robustness {survival:.2}% of {} block hashes survive the attack",
                original.len()
            ));
            summary.metric("hash_survival", survival);
        }
    }

    // Stage 4: extract — reopen the sealed payload as the receiver would,
    // rescuing frame-deleted videos first.
    let payload = open_payload(&sealed, &key)?;
    let mut skips = BTreeSet::new();
    let mut reports: BTreeMap<String, FrameDeletionReport> = BTreeMap::new();
    for meta in db.videos() {
        if let Some(video) = received.iter().find(|v| v.id == meta.id) {
            if video.frame_count() < meta.frame_count {
                let report = detect_deletions(video, DetectorOptions::default())?;
                ui.line(format!(
                    "           {} lost {} frames; splices after received frames {:?}",
                    meta.id,
                    meta.frame_count - video.frame_count(),
                    report.splices_after
                ));
                reports.insert(meta.id.clone(), report);
            }
        }
    }
    let payload = if reports.is_empty() {
        payload
    } else {
        let remapped = remap_locations(&payload, &db, &reports)?;
        skips = remapped.unrecoverable;
        remapped.payload
    };
    let recovered = extract_with_skips(&payload, &db, &received, &skips)?;
    let recovered_bytes = recovered.to_bytes();
    ui.line(format!(
        "extract    {} segments read back{}",
        payload.segments.len(),
        if skips.is_empty() {
            String::new()
        } else {
            format!(" ({} skipped as unrecoverable)", skips.len())
        }
    ));

    // Stage 5: accuracy, segment by segment.
    let bits = usize::from(config.hash_bits());
    let sent: Vec<u16> = chunk_values(message.bits(), bits);
    let got: Vec<u16> = chunk_values(recovered.bits(), bits);
    let accuracy = extraction_accuracy(&sent, &got)?;
    let matching_bytes = secret_bytes
        .iter()
        .zip(&recovered_bytes)
        .filter(|(a, b)| a == b)
        .count();
    let identical = recovered_bytes == secret_bytes;
    ui.line(format!(
        "accuracy   {accuracy:.2}% of segments intact; {}",
        if identical {
            "recovered secret matches the original bit for bit".to_string()
        } else {
            format!(
                "recovered secret matches in {matching_bytes}/{} bytes",
                secret_bytes.len()
            )
        }
    ));
    summary.metric("segment_accuracy", accuracy);
    summary.metric("recovered_identical", identical);
    summary.metric("matching_bytes", matching_bytes as u64);
    summary.metric("secret_bytes", secret_bytes.len() as u64);

    // Keep the artifacts when asked.
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| file_error(dir, e))?;
        let index_path = dir.join("index.bin");
        db.save(&index_path)?;
        summary.output(index_path.display());
        let payload_path = dir.join("payload.enc");
        fs::write(&payload_path, &sealed).map_err(|e| file_error(&payload_path, e))?;
        summary.output(payload_path.display());
        let recovered_path = dir.join("recovered.bin");
        fs::write(&recovered_path, &recovered_bytes)
            .map_err(|e| file_error(&recovered_path, e))?;
        summary.output(recovered_path.display());
        ui.line(format!("artifacts  kept in {}", dir.display()));
    }
    Ok(summary)
}

/// Splits a bit sequence into hash-sized values; a short final chunk keeps
/// its own length, mirroring how padding is stripped on extraction.
fn chunk_values(bits: &[bool], size: usize) -> Vec<u16> {
    bits.chunks(size)
        .map(|chunk| hash_to_decimal(chunk).expect("chunks never exceed the hash length"))
        .collect()
}
