//! `hide`: select carrier blocks for a secret and seal the location list.

use crate::config::{load_key, resolve_key_path, FileConfig};
use crate::error::{file_error, CliError};
use crate::summary::{RunSummary, Ui};
use clap::Args;
use cvstego::{hide, seal_payload, IndexDatabase, SecretMessage, TransmissionHistory};
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct HideArgs {
    /// Carrier index built from the video collection
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    /// File whose bytes are the secret
    #[arg(long, value_name = "FILE")]
    pub secret: PathBuf,
    /// 32-byte key file (or CVSTEGO_KEY_FILE, or key_file in the config)
    #[arg(long, value_name = "FILE")]
    pub key: Option<PathBuf>,
    /// Where to write the sealed payload
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Transmission history, read if present and updated on success
    #[arg(long, value_name = "FILE")]
    pub history: Option<PathBuf>,
}

pub fn run(args: &HideArgs, file_config: &FileConfig, ui: &Ui) -> Result<RunSummary, CliError> {
    let mut summary = RunSummary::new("hide");
    summary.input("index", args.index.display().to_string());
    summary.input("secret", args.secret.display().to_string());

    let key_path = resolve_key_path(args.key.as_deref(), file_config)?;
    let key = load_key(&key_path)?;
    let secret_bytes = fs::read(&args.secret).map_err(|e| file_error(&args.secret, e))?;
    if secret_bytes.is_empty() {
        return Err(CliError::Data(format!(
            "secret file {} is empty",
            args.secret.display()
        )));
    }
    let message = SecretMessage::from_bytes(&secret_bytes);
    let db = IndexDatabase::load(&args.index)?;

    let mut history = match &args.history {
        Some(path) if path.exists() => TransmissionHistory::load(path)?,
        _ => TransmissionHistory::default(),
    };
    let outcome = hide(&message, &db, &mut history)?;
    let sealed = seal_payload(&outcome.payload, &key);
    fs::write(&args.output, &sealed).map_err(|e| file_error(&args.output, e))?;
    summary.output(args.output.display());
    if let Some(path) = &args.history {
        history.save(path)?;
        summary.output(path.display());
    }

    let videos: Vec<String> = outcome.videos().iter().map(|v| v.to_string()).collect();
    let segments = outcome.locations.len();
    ui.line(format!(
        "secret: {} bytes -> {} segments of {} bits",
        secret_bytes.len(),
        segments,
        db.config().hash_bits()
    ));
    ui.line(format!(
        "carriers: {} blocks in {} video(s): {}",
        segments,
        videos.len(),
        videos.join(", ")
    ));
    ui.line(format!(
        "sealed payload: {} bytes -> {}",
        sealed.len(),
        args.output.display()
    ));

    summary.metric("secret_bytes", secret_bytes.len() as u64);
    summary.metric("segments", segments as u64);
    summary.metric("segment_bits", db.config().hash_bits());
    summary.metric("videos", videos);
    summary.metric("sealed_bytes", sealed.len() as u64);
    summary.metric("fingerprint", format!("{:08x}", db.fingerprint()));
    Ok(summary)
}
