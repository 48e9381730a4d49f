use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use fadet_core::proposals::{
    assign_labels, generate_anchor_grid, prune, AssignmentConfig, LabelHistogram, PruningConfig,
};
use fadet_core::{BBox, Error, ImageRecord, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    create_file, default_jobs, parse_unit, to_pretty_json, DatasetArgs, PruneThreshold,
};

#[derive(Debug, Args)]
pub struct LabelProposalsArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Person-box IoU at which Negative proposals become Ignored, or `off`.
    #[arg(long, default_value = "off")]
    pub prune_threshold: PruneThreshold,
    /// Anchor grid stride in pixels.
    #[arg(long, default_value_t = 16.0)]
    pub stride: f64,
    /// Anchor side lengths (square-root of area) in pixels.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub scales: Vec<f64>,
    /// Anchor height/width ratios.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub ratios: Vec<f64>,
    #[arg(long, value_parser = parse_unit, default_value_t = 0.7)]
    pub positive_iou: f64,
    #[arg(long, value_parser = parse_unit, default_value_t = 0.3)]
    pub negative_iou: f64,
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
    /// Per-image JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ImageLine<'a> {
    image_id: &'a str,
    proposals: usize,
    before: LabelHistogram,
    after: LabelHistogram,
    pruned_count: usize,
}

#[derive(Debug, Serialize)]
struct Totals {
    images: usize,
    proposals: usize,
    before: LabelHistogram,
    after: LabelHistogram,
    pruned_count: usize,
    images_without_person_boxes: usize,
    prune_threshold: Option<f64>,
    assignment: AssignmentConfig,
}

fn label_image(
    img: &ImageRecord,
    args: &LabelProposalsArgs,
    assignment: &AssignmentConfig,
    pruning: &PruningConfig,
) -> Result<(LabelHistogram, LabelHistogram, usize, usize)> {
    let proposals = generate_anchor_grid(
        img.width,
        img.height,
        args.stride,
        &args.scales,
        &args.ratios,
    )?;
    let gt: Vec<BBox> = img.objects.iter().map(|o| o.bbox).collect();
    let labels = assign_labels(&proposals, &gt, assignment);
    let (after, pruned) = prune(&labels, &proposals, img.person_boxes(), pruning);
    Ok((
        LabelHistogram::of(&labels),
        LabelHistogram::of(&after),
        pruned,
        proposals.len(),
    ))
}

pub fn run(args: LabelProposalsArgs) -> Result<()> {
    let assignment = AssignmentConfig {
        positive_iou: args.positive_iou,
        negative_iou: args.negative_iou,
        ..Default::default()
    };
    assignment.validate()?;
    let pruning = match args.prune_threshold.0 {
        Some(t) => PruningConfig::at(t)?,
        None => PruningConfig::disabled(),
    };
    let dataset = args.dataset.load()?;
    let missing: Vec<&str> = dataset
        .images
        .iter()
        .filter(|i| i.person_boxes.is_none())
        .map(|i| i.image_id.as_str())
        .collect();
    if args.dataset.strict && !missing.is_empty() {
        return Err(Error::Protocol(format!(
            "{} image(s) have no person_boxes field, first {:?}",
            missing.len(),
            missing[0]
        )));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let per_image: Vec<_> = pool.install(|| {
        dataset
            .images
            .par_iter()
            .map(|img| label_image(img, &args, &assignment, &pruning))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut totals = Totals {
        images: dataset.images.len(),
        proposals: 0,
        before: LabelHistogram::default(),
        after: LabelHistogram::default(),
        pruned_count: 0,
        images_without_person_boxes: missing.len(),
        prune_threshold: args.prune_threshold.0,
        assignment,
    };
    let mut w = create_file(&args.out)?;
    for (img, (before, after, pruned, n)) in dataset.images.iter().zip(per_image) {
        let line = ImageLine {
            image_id: &img.image_id,
            proposals: n,
            before,
            after,
            pruned_count: pruned,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::io(&args.out, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(&args.out, e))?;
        totals.proposals += n;
        totals.before.add(&before);
        totals.after.add(&after);
        totals.pruned_count += pruned;
    }
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    print!("{}", to_pretty_json(&totals));
    Ok(())
}
