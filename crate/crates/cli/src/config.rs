//! Optional TOML config files.
//!
//! A setting comes from its command-line flag when given, else from the file
//! in the config directory (`--config-dir`, else `$FADET_CONFIG_DIR`), else
//! from the built-in default. Missing files in the config directory are
//! skipped; a file named explicitly on the command line must exist.

use std::fs;
use std::path::{Path, PathBuf};

use fadet_core::{Error, Result};
use serde::de::DeserializeOwned;

pub const CONFIG_DIR_ENV: &str = "FADET_CONFIG_DIR";

pub const CLEANING_FILE: &str = "cleaning.toml";
pub const PROTOCOL_FILE: &str = "protocol.toml";
pub const SIMULATE_FILE: &str = "simulate.toml";

/// The file to read, if any.
pub fn resolve(
    explicit: Option<&Path>,
    config_dir: Option<&Path>,
    file_name: &str,
) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let candidate = config_dir?.join(file_name);
    candidate.is_file().then_some(candidate)
}

pub fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    log::info!("using config {}", path.display());
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let explicit = dir.path().join("mine.toml");
        assert_eq!(
            resolve(Some(&explicit), Some(dir.path()), CLEANING_FILE),
            Some(explicit)
        );
        assert_eq!(resolve(None, Some(dir.path()), CLEANING_FILE), None);
        fs::write(dir.path().join(CLEANING_FILE), "").unwrap();
        assert_eq!(
            resolve(None, Some(dir.path()), CLEANING_FILE),
            Some(dir.path().join(CLEANING_FILE))
        );
        assert_eq!(resolve(None, None, CLEANING_FILE), None);
    }

    #[test]
    fn missing_explicit_file_is_io() {
        let err =
            load_toml::<fadet_core::Protocol>(Some(Path::new("/nonexistent/p.toml"))).unwrap_err();
        assert!(err.is_io());
    }
}
