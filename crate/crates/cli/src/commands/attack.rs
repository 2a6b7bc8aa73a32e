//! `attack`: re-render videos through a channel distortion.

use super::{gather_sources, load_videos, video_seed, InputFormat, RawDims};
use crate::error::{spec_parse_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::Args;
use cvstego::frame::write_y4m;
use cvstego::{AttackSpec, FrameProvider};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Video file or directory of inputs
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Distortion, e.g. `gauss-noise:sigma=0.005` or `frame-delete:frames=3+9`
    #[arg(long, value_name = "SPEC")]
    pub spec: String,
    /// Base seed; video i (input order) is attacked with seed+i
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Directory for the attacked videos, written as y4m
    #[arg(short, long, value_name = "DIR")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[arg(long, value_name = "WxH")]
    pub raw_dims: Option<RawDims>,
}

pub fn run(args: &AttackArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("attack");
    summary.input("input", args.input.display().to_string());
    summary.input("spec", args.spec.clone());
    summary.seed = Some(args.seed);

    let spec: AttackSpec = args.spec.parse().map_err(spec_parse_error)?;
    let sources = gather_sources(&args.input, args.format, args.raw_dims)?;
    fs::create_dir_all(&args.output)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.output.display())))?;
    let videos = load_videos(&sources)?;

    let mut failures = String::new();
    let mut written = 0usize;
    for (i, video) in videos.iter().enumerate() {
        let result: Result<PathBuf, CliError> = (|| {
            let attacked = spec.apply_video(video, video_seed(args.seed, i))?;
            let path = args.output.join(format!("{}.y4m", video.id));
            write_y4m(&path, &attacked)?;
            Ok(path)
        })();
        match result {
            Ok(path) => {
                ui.line(format!(
                    "{}: {} frames -> {}",
                    video.id,
                    video.frame_count(),
                    path.display()
                ));
                summary.output(path.display());
                written += 1;
            }
            Err(e) => {
                ui.line(format!("{}: FAILED: {e}", video.id));
                let _ = write!(failures, "{}{}: {e}", if failures.is_empty() { "" } else { "; " }, video.id);
            }
        }
    }

    summary.metric("videos_written", written as u64);
    if !failures.is_empty() {
        return Err(CliError::Data(format!(
            "{} of {} videos failed: {failures}",
            videos.len() - written,
            videos.len()
        )));
    }
    Ok(summary)
}
