use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use fadet_core::annotations::{
    clean_attributes, clean_boxes, remap_groundtruth, write_attribute_vocabulary,
    write_category_vocabulary, write_groundtruth, CleaningConfig, RemovalRule,
};
use fadet_core::{Error, Result};
use serde::Serialize;

use crate::args::{create_dir, create_file, to_pretty_json, write_file, ConfigDirArg, DatasetArgs};
use crate::config::{load_toml, resolve, CLEANING_FILE};

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Cleaning rules (TOML). Defaults to cleaning.toml in the config directory.
    #[arg(long)]
    pub cleaning_config: Option<PathBuf>,
    #[command(flatten)]
    pub config_dir: ConfigDirArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct CleanSummary {
    images: usize,
    objects_before: usize,
    objects_after: usize,
    removed: BTreeMap<&'static str, usize>,
    emptied_images: Vec<String>,
    attributes_before: usize,
    attributes_after: usize,
    config: CleaningConfig,
}

pub fn run(args: CleanArgs) -> Result<()> {
    let cfg_path = resolve(
        args.cleaning_config.as_deref(),
        args.config_dir.config_dir.as_deref(),
        CLEANING_FILE,
    );
    let cfg: CleaningConfig = load_toml(cfg_path.as_deref())?;
    cfg.validate()?;
    let dataset = args.dataset.load()?;

    let (boxed, log) = clean_boxes(&dataset, &cfg)?;
    let (vocab, remap) = clean_attributes(&dataset.attributes, &cfg)?;
    let cleaned = remap_groundtruth(&boxed, &vocab, &remap)?;

    let out = &args.out;
    create_dir(out)?;
    write_groundtruth(&out.join("groundtruth.jsonl"), &cleaned.images)?;
    write_attribute_vocabulary(&out.join("attributes.jsonl"), &cleaned.attributes)?;
    write_category_vocabulary(&out.join("categories.jsonl"), &cleaned.categories)?;

    let log_path = out.join("removal_log.jsonl");
    let mut w = create_file(&log_path)?;
    for entry in &log.entries {
        serde_json::to_writer(&mut w, entry).map_err(|e| Error::io(&log_path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(&log_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&log_path, e))?;

    let counts = log.count_by_rule();
    let removed = [
        RemovalRule::AspectBelowMin,
        RemovalRule::AspectAboveMax,
        RemovalRule::AreaBelowMin,
    ]
    .into_iter()
    .map(|r| (r.as_str(), counts.get(&r).copied().unwrap_or(0)))
    .collect();
    let summary = CleanSummary {
        images: cleaned.images.len(),
        objects_before: dataset.object_count(),
        objects_after: cleaned.object_count(),
        removed,
        emptied_images: log.emptied_images.clone(),
        attributes_before: dataset.attributes.len(),
        attributes_after: cleaned.attributes.len(),
        config: cfg,
    };
    let text = to_pretty_json(&summary);
    write_file(&out.join("summary.json"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
