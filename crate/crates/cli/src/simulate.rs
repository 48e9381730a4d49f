use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use fadet_core::synthetic::{simulate, NoiseSpec};
use fadet_core::{Error, Result};

use crate::args::{create_file, parse_unit, to_pretty_json, write_file, ConfigDirArg, DatasetArgs};
use crate::config::{load_toml, resolve, SIMULATE_FILE};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Noise settings (TOML). Defaults to simulate.toml in the config directory.
    #[arg(long)]
    pub noise_config: Option<PathBuf>,
    #[command(flatten)]
    pub config_dir: ConfigDirArg,
    /// Start from a detector that reproduces the groundtruth exactly.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coordinate jitter as a fraction of box size.
    #[arg(long, value_parser = parse_unit)]
    pub jitter: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub tp_score_min: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub tp_score_max: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub attr_flip: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub attr_spread: Option<f64>,
    /// Mean number of distractor detections per image.
    #[arg(long)]
    pub distractor_rate: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub distractor_score_min: Option<f64>,
    #[arg(long, value_parser = parse_unit)]
    pub distractor_score_max: Option<f64>,
    #[arg(long)]
    pub distractor_attributes: Option<usize>,
    #[arg(long)]
    pub max_detections: Option<usize>,
    /// Detection JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the run summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl SimulateArgs {
    fn spec(&self) -> Result<NoiseSpec> {
        let mut spec = if self.noiseless {
            NoiseSpec::noiseless()
        } else {
            let path = resolve(
                self.noise_config.as_deref(),
                self.config_dir.config_dir.as_deref(),
                SIMULATE_FILE,
            );
            load_toml(path.as_deref())?
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    spec.$field = v;
                }
            )*};
        }
        set!(
            seed,
            jitter,
            tp_score_min,
            tp_score_max,
            attr_flip,
            attr_spread,
            distractor_rate,
            distractor_score_min,
            distractor_score_max,
            distractor_attributes,
            max_detections
        );
        spec.validate()?;
        Ok(spec)
    }
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let spec = args.spec()?;
    let dataset = args.dataset.load()?;
    let mut w = create_file(&args.out)?;
    let summary = simulate(&dataset, &spec, &mut w)?;
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    let text = to_pretty_json(&serde_json::json!({ "noise": spec, "summary": summary }));
    if let Some(path) = &args.summary {
        write_file(path, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}
