use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use fadet_core::report::{ReportDocument, RunReport, RunSettings};
use fadet_core::{Error, Evaluator, Protocol, Result};

use crate::args::{
    create_dir, default_jobs, parse_unit, write_file, ConfigDirArg, DatasetArgs, PruneThreshold,
};
use crate::config::{load_toml, resolve, PROTOCOL_FILE};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Detection JSONL, one image per line.
    #[arg(long)]
    pub detections: PathBuf,
    /// Protocol settings (TOML). Defaults to protocol.toml in the config directory.
    #[arg(long)]
    pub protocol_config: Option<PathBuf>,
    #[command(flatten)]
    pub config_dir: ConfigDirArg,
    /// Detections scoring at or below this are ignored for AP.
    #[arg(long, value_parser = parse_unit)]
    pub score_threshold: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub iou_threshold: Option<f64>,
    /// Detections per image considered by CorLoc.
    #[arg(long)]
    pub topk: Option<usize>,
    /// Overlap (over the candidate's area) that joins a detection to the
    /// top-scoring one in the attribute merge.
    #[arg(long, value_parser = parse_unit)]
    pub ioa_threshold: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub attr_threshold: Option<f64>,
    /// Pruning threshold the detector was trained with; only names the report column.
    #[arg(long)]
    pub prune_threshold: Option<PruneThreshold>,
    /// Report column name. Defaults to the pruning setting, else the detection file name.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
    /// Output directory for report.json and report.txt.
    #[arg(long)]
    pub out: PathBuf,
}

impl EvaluateArgs {
    fn protocol(&self) -> Result<Protocol> {
        let path = resolve(
            self.protocol_config.as_deref(),
            self.config_dir.config_dir.as_deref(),
            PROTOCOL_FILE,
        );
        let mut p: Protocol = load_toml(path.as_deref())?;
        if let Some(v) = self.score_threshold {
            p.score_threshold = v;
        }
        if let Some(v) = self.iou_threshold {
            p.iou_threshold = v;
        }
        if let Some(v) = self.topk {
            p.top_k = v;
        }
        if let Some(v) = self.ioa_threshold {
            p.ioa_threshold = v;
        }
        if let Some(v) = self.attr_threshold {
            p.attr_threshold = v;
        }
        p.validate()?;
        Ok(p)
    }

    fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.prune_threshold {
            Some(PruneThreshold(Some(t))) => format!("pruning {t}"),
            Some(PruneThreshold(None)) => "no pruning".to_string(),
            None => self
                .detections
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "detections".to_string()),
        }
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let protocol = args.protocol()?;
    let dataset = args.dataset.load()?;
    let mut evaluator = Evaluator::new(&dataset, protocol)?;
    evaluator.strict = args.dataset.strict;

    let file = File::open(&args.detections).map_err(|e| Error::io(&args.detections, e))?;
    let reader = BufReader::with_capacity(1 << 20, file);
    let (evals, stats) =
        evaluator.evaluate_stream(reader, &path_string(&args.detections), args.jobs)?;
    if stats.unknown_images > 0 {
        log::warn!(
            "{} detection line(s) name images absent from the groundtruth",
            stats.unknown_images
        );
    }
    if stats.truncated_detections > 0 {
        log::warn!(
            "{} detection(s) beyond the per-image cap of {} were dropped",
            stats.truncated_detections,
            protocol.max_detections
        );
    }
    let run = RunReport {
        label: args.label(),
        settings: RunSettings {
            groundtruth: path_string(&args.dataset.groundtruth),
            detections: path_string(&args.detections),
            attr_vocab: path_string(&args.dataset.attr_vocab),
            cat_vocab: path_string(&args.dataset.cat_vocab),
            validation: args.dataset.mode(),
            protocol,
        },
        partitions: evaluator.partitions(&evals),
    };
    let doc = ReportDocument::from_runs(vec![run]);
    let text = doc.render_text();
    create_dir(&args.out)?;
    write_file(&args.out.join("report.json"), doc.to_json()?.as_bytes())?;
    write_file(&args.out.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
