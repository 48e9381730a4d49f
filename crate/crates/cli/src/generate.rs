use std::path::PathBuf;

use clap::Args;
use fadet_core::annotations::{
    write_attribute_vocabulary, write_category_vocabulary, write_groundtruth,
};
use fadet_core::synthetic::{generate_dataset, DatasetSpec};
use fadet_core::Result;

use crate::args::create_dir;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    pub images: usize,
    #[arg(long, default_value_t = 50)]
    pub categories: usize,
    #[arg(long, default_value_t = 544)]
    pub attributes: usize,
    #[arg(long, default_value_t = 1)]
    pub objects_per_image: usize,
    #[arg(long, default_value_t = 3)]
    pub positives_per_object: usize,
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    /// Domain tags, assigned to images round-robin.
    #[arg(long, value_delimiter = ',', default_value = "shop")]
    pub domains: Vec<String>,
    /// Leave out person boxes.
    #[arg(long)]
    pub no_person_boxes: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for groundtruth.jsonl, attributes.jsonl and categories.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: GenerateArgs) -> Result<()> {
    let spec = DatasetSpec {
        images: args.images,
        categories: args.categories,
        attributes: args.attributes,
        objects_per_image: args.objects_per_image,
        positives_per_object: args.positives_per_object,
        width: args.width,
        height: args.height,
        domains: args.domains,
        person_boxes: !args.no_person_boxes,
        seed: args.seed,
    };
    let ds = generate_dataset(&spec)?;
    create_dir(&args.out)?;
    write_groundtruth(&args.out.join("groundtruth.jsonl"), &ds.images)?;
    write_attribute_vocabulary(&args.out.join("attributes.jsonl"), &ds.attributes)?;
    write_category_vocabulary(&args.out.join("categories.jsonl"), &ds.categories)?;
    println!(
        "wrote {} images, {} objects, {} categories, {} attributes to {}",
        ds.images.len(),
        ds.object_count(),
        ds.categories.len(),
        ds.attributes.len(),
        args.out.display()
    );
    Ok(())
}
