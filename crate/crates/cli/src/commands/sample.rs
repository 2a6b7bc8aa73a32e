//! `sample`: materialize the bundled synthetic clips.

use crate::error::{file_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::Args;
use cvstego::frame::write_y4m;
use cvstego::samples::sample_set;
use cvstego::FrameProvider;
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Directory for the clips
    #[arg(short, long, value_name = "DIR")]
    pub output: PathBuf,
}

pub fn run(args: &SampleArgs, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("sample");
    fs::create_dir_all(&args.output).map_err(|e| file_error(&args.output, e))?;
    for video in sample_set() {
        let path = args.output.join(format!("{}.y4m", video.id));
        write_y4m(&path, &video)?;
        ui.line(format!(
            "{}: {} frames, {}x{}",
            path.display(),
            video.frame_count(),
            video.frames[0].width(),
            video.frames[0].height()
        ));
        summary.output(path.display());
    }
    Ok(summary)
}
