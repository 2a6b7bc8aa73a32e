//! Layered settings: command-line flags override environment variables,
//! which override the optional TOML config file.

use crate::error::{file_error, CliError};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable naming the key file, consulted when `--key` is
/// absent.
pub const ENV_KEY_FILE: &str = "CVSTEGO_KEY_FILE";
/// Environment variable naming the config file, consulted when `--config`
/// is absent.
pub const ENV_CONFIG: &str = "CVSTEGO_CONFIG";

/// Contents of the optional config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Path to the 32-byte key file.
    pub key_file: Option<PathBuf>,
    /// Worker thread cap.
    pub threads: Option<usize>,
}

/// Loads the config file named by `--config`, falling back to
/// `CVSTEGO_CONFIG`. No file configured means defaults.
pub fn load_file_config(flag: Option<&Path>) -> Result<FileConfig, CliError> {
    let path = match flag {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(ENV_CONFIG).map(PathBuf::from),
    };
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

/// Resolves where the key lives: `--key` flag, then `CVSTEGO_KEY_FILE`,
/// then the config file's `key_file`.
pub fn resolve_key_path(flag: Option<&Path>, file: &FileConfig) -> Result<PathBuf, CliError> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(ENV_KEY_FILE) {
        return Ok(PathBuf::from(p));
    }
    if let Some(p) = &file.key_file {
        return Ok(p.clone());
    }
    Err(CliError::Usage(format!(
        "no key file: pass --key, set {ENV_KEY_FILE}, or put key_file in the config file"
    )))
}

/// Reads a key file, which must hold exactly 32 raw bytes.
pub fn load_key(path: &Path) -> Result<[u8; 32], CliError> {
    let bytes = fs::read(path).map_err(|e| file_error(path, e))?;
    let len = bytes.len();
    bytes.try_into().map_err(|_| {
        CliError::Data(format!(
            "key file {} holds {len} bytes; need exactly 32",
            path.display()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_config_file_is_a_usage_error() {
        let err = load_file_config(Some(Path::new("/nonexistent/cvstego.toml"))).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = std::env::temp_dir().join("cvstego-config-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        fs::write(&path, "key_file = \"k.bin\"\nturbo = true\n").unwrap();
        let err = load_file_config(Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        fs::remove_file(&path).ok();
    }

    #[test]
    fn flag_beats_config_file() {
        let file = FileConfig {
            key_file: Some(PathBuf::from("from-file.bin")),
            threads: None,
        };
        let chosen = resolve_key_path(Some(Path::new("from-flag.bin")), &file).unwrap();
        assert_eq!(chosen, PathBuf::from("from-flag.bin"));
    }

    #[test]
    fn key_files_must_hold_exactly_32_bytes() {
        let dir = std::env::temp_dir().join("cvstego-key-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.bin");
        fs::write(&path, [7u8; 16]).unwrap();
        let err = load_key(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("16 bytes"));
        fs::remove_file(&path).ok();
    }
}
