//! Shared inputs for the benchmarks in `benches/`.

use fadet_core::synthetic::{generate_dataset, simulate, DatasetSpec, NoiseSpec};
use fadet_core::Dataset;

/// A synthetic dataset and its simulated detection file.
pub fn fixture(images: usize, distractor_rate: f64) -> (Dataset, Vec<u8>) {
    let ds = generate_dataset(&DatasetSpec {
        images,
        domains: vec!["shop".into(), "runway".into(), "sketch".into()],
        seed: 11,
        ..DatasetSpec::default()
    })
    .expect("valid dataset spec");
    let mut out = Vec::new();
    simulate(
        &ds,
        &NoiseSpec {
            distractor_rate,
            seed: 11,
            ..NoiseSpec::default()
        },
        &mut out,
    )
    .expect("in-memory simulation");
    (ds, out)
}
