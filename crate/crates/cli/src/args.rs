//! Argument groups shared by several subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use fadet_core::annotations::{load_dataset, LoadWarning};
use fadet_core::{Dataset, Error, Result, ValidationMode};

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Groundtruth JSONL, one image per line.
    #[arg(long)]
    pub groundtruth: PathBuf,
    /// Attribute vocabulary JSONL.
    #[arg(long)]
    pub attr_vocab: PathBuf,
    /// Category vocabulary JSONL.
    #[arg(long)]
    pub cat_vocab: PathBuf,
    /// Fail on out-of-image boxes and other recoverable problems instead of
    /// repairing them with a warning.
    #[arg(long)]
    pub strict: bool,
}

impl DatasetArgs {
    pub fn mode(&self) -> ValidationMode {
        if self.strict {
            ValidationMode::Strict
        } else {
            ValidationMode::Lenient
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let (dataset, warnings) = load_dataset(
            &self.groundtruth,
            &self.attr_vocab,
            &self.cat_vocab,
            self.mode(),
        )?;
        report_warnings(&warnings);
        Ok(dataset)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigDirArg {
    /// Directory searched for cleaning.toml, protocol.toml and simulate.toml.
    #[arg(long, env = crate::config::CONFIG_DIR_ENV)]
    pub config_dir: Option<PathBuf>,
}

pub fn report_warnings(warnings: &[LoadWarning]) {
    for w in warnings {
        log::warn!("line {} ({}): {}", w.line, w.image_id, w.message);
    }
    if !warnings.is_empty() {
        eprintln!(
            "{} groundtruth record(s) repaired; rerun with RUST_LOG=warn for details",
            warnings.len()
        );
    }
}

/// `off`, or a threshold in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneThreshold(pub Option<f64>);

impl std::str::FromStr for PruneThreshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("off") || s.eq_ignore_ascii_case("none") {
            return Ok(Self(None));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected `off` or a number, got {s:?}"))?;
        if v > 0.0 && v <= 1.0 {
            Ok(Self(Some(v)))
        } else {
            Err(format!("pruning threshold must be in (0, 1], got {v}"))
        }
    }
}

pub fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a number, got {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut w = create_file(path)?;
    w.write_all(contents)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary types serialize");
    s.push('\n');
    s
}
