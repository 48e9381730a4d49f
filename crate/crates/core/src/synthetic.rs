//! Seeded synthetic groundtruth and a noisy detector simulator.
//!
//! Every image draws from its own ChaCha8 stream (`seed`, stream = image
//! position), so output is identical however images are scheduled.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::annotations::{
    AttrVector, AttributeEntry, AttributeType, AttributeVocabulary, CategoryEntry,
    CategoryVocabulary, Dataset, GroundTruthObject, ImageRecord,
};
use crate::detections::{write_detection_line, DEFAULT_MAX_DETECTIONS};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::postprocess::{top_k, AttrScores, Detection, DetectionSet};

fn image_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (x * p).round() / p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub images: usize,
    pub categories: usize,
    pub attributes: usize,
    pub objects_per_image: usize,
    /// Positive attributes drawn per object.
    pub positives_per_object: usize,
    pub width: u32,
    pub height: u32,
    /// Assigned round-robin.
    pub domains: Vec<String>,
    pub person_boxes: bool,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            images: 100,
            categories: 50,
            attributes: 544,
            objects_per_image: 1,
            positives_per_object: 3,
            width: 640,
            height: 480,
            domains: vec!["shop".into()],
            person_boxes: true,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories == 0 || self.attributes == 0 {
            return Err(Error::Config(
                "need at least one category and one attribute".into(),
            ));
        }
        if self.positives_per_object > self.attributes {
            return Err(Error::Config(format!(
                "positives_per_object {} exceeds the {} attributes",
                self.positives_per_object, self.attributes
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::Config("images must be at least 16x16".into()));
        }
        if self.domains.is_empty() {
            return Err(Error::Config("need at least one domain".into()));
        }
        Ok(())
    }
}

fn random_box(rng: &mut ChaCha8Rng, width: u32, height: u32, area_range: (f64, f64)) -> BBox {
    let (w, h) = (f64::from(width), f64::from(height));
    let area = rng.random_range(area_range.0..=area_range.1) * w * h;
    let ratio = rng.random_range((0.4f64).ln()..=(2.5f64).ln()).exp();
    let bw = (area / ratio).sqrt().round().clamp(4.0, w);
    let bh = (area * ratio).sqrt().round().clamp(4.0, h);
    let x = rng.random_range(0.0..=(w - bw)).round();
    let y = rng.random_range(0.0..=(h - bh)).round();
    BBox::new(x, y, (x + bw).min(w), (y + bh).min(h)).expect("box has at least 4 pixels per side")
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let attributes = AttributeVocabulary::new(
        (0..spec.attributes)
            .map(|id| AttributeEntry {
                id,
                name: format!("attribute {id:04}"),
                attr_type: AttributeType::ALL[id % AttributeType::ALL.len()],
            })
            .collect(),
    )?;
    let categories = CategoryVocabulary::new(
        (0..spec.categories)
            .map(|id| CategoryEntry {
                id,
                name: format!("category {id:02}"),
            })
            .collect(),
    )?;
    let images = (0..spec.images)
        .map(|i| {
            let mut rng = image_rng(spec.seed, i);
            let objects: Vec<GroundTruthObject> = (0..spec.objects_per_image)
                .map(|_| {
                    let bbox = random_box(&mut rng, spec.width, spec.height, (0.03, 0.4));
                    let ids =
                        sample(&mut rng, spec.attributes, spec.positives_per_object).into_vec();
                    GroundTruthObject {
                        bbox,
                        category_id: rng.random_range(0..spec.categories),
                        attributes: AttrVector::from_positive_ids(spec.attributes, &ids)
                            .expect("sampled ids in range"),
                    }
                })
                .collect();
            let person_boxes = spec.person_boxes.then(|| {
                objects
                    .iter()
                    .filter_map(|o| {
                        let b = o.bbox;
                        let (mx, my) = (b.width() * 0.25, b.height() * 0.5);
                        BBox::new(
                            b.x_min() - mx,
                            b.y_min() - my,
                            b.x_max() + mx,
                            b.y_max() + my,
                        )
                        .ok()?
                        .clip(f64::from(spec.width), f64::from(spec.height))
                    })
                    .collect()
            });
            ImageRecord {
                image_id: format!("img{i:06}"),
                width: spec.width,
                height: spec.height,
                domain_tag: spec.domains[i % spec.domains.len()].clone(),
                objects,
                person_boxes,
            }
        })
        .collect();
    Ok(Dataset {
        attributes,
        categories,
        images,
    })
}

/// Noise model of the simulated detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Each coordinate moves by up to this fraction of the box side.
    pub jitter: f64,
    pub tp_score_min: f64,
    pub tp_score_max: f64,
    /// Probability that an attribute's groundtruth bit is inverted in the scores.
    pub attr_flip: f64,
    /// Positive attribute scores are drawn from `[1 - spread, 1]`.
    pub attr_spread: f64,
    /// Mean distractors per image (Poisson).
    pub distractor_rate: f64,
    pub distractor_score_min: f64,
    pub distractor_score_max: f64,
    /// Attribute scores drawn per distractor.
    pub distractor_attributes: usize,
    pub max_detections: usize,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            jitter: 0.05,
            tp_score_min: 0.6,
            tp_score_max: 1.0,
            attr_flip: 0.01,
            attr_spread: 0.3,
            distractor_rate: 2.0,
            distractor_score_min: 0.0,
            distractor_score_max: 0.7,
            distractor_attributes: 4,
            max_detections: DEFAULT_MAX_DETECTIONS,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    /// A detector that returns the groundtruth exactly.
    pub fn noiseless() -> Self {
        Self {
            jitter: 0.0,
            tp_score_min: 1.0,
            tp_score_max: 1.0,
            attr_flip: 0.0,
            attr_spread: 0.0,
            distractor_rate: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("jitter", self.jitter),
            ("tp_score_min", self.tp_score_min),
            ("tp_score_max", self.tp_score_max),
            ("attr_flip", self.attr_flip),
            ("attr_spread", self.attr_spread),
            ("distractor_score_min", self.distractor_score_min),
            ("distractor_score_max", self.distractor_score_max),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.tp_score_min > self.tp_score_max {
            return Err(Error::Config("tp_score_min exceeds tp_score_max".into()));
        }
        if self.distractor_score_min > self.distractor_score_max {
            return Err(Error::Config(
                "distractor_score_min exceeds distractor_score_max".into(),
            ));
        }
        if !(self.distractor_rate.is_finite() && self.distractor_rate >= 0.0) {
            return Err(Error::Config(format!(
                "distractor_rate must be non-negative, got {}",
                self.distractor_rate
            )));
        }
        if self.max_detections == 0 {
            return Err(Error::Config("max_detections must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub images: usize,
    pub true_positive_copies: usize,
    pub distractors: usize,
    /// Detections dropped by `max_detections`.
    pub truncated: usize,
    pub written_detections: usize,
}

impl SimulationSummary {
    fn add(&mut self, o: &SimulationSummary) {
        self.images += o.images;
        self.true_positive_copies += o.true_positive_copies;
        self.distractors += o.distractors;
        self.truncated += o.truncated;
        self.written_detections += o.written_detections;
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn jitter_box(rng: &mut ChaCha8Rng, b: BBox, jitter: f64, width: f64, height: f64) -> BBox {
    if jitter == 0.0 {
        return b;
    }
    let (w, h) = (b.width(), b.height());
    let mut d = || rng.random_range(-jitter..=jitter);
    let (dx0, dy0, dx1, dy1) = (d() * w, d() * h, d() * w, d() * h);
    BBox::new(
        round_to(b.x_min() + dx0, 2),
        round_to(b.y_min() + dy0, 2),
        round_to(b.x_max() + dx1, 2),
        round_to(b.y_max() + dy1, 2),
    )
    .ok()
    .and_then(|j| j.clip(width, height))
    .unwrap_or(b)
}

fn tp_attribute_scores(rng: &mut ChaCha8Rng, gt: &AttrVector, spec: &NoiseSpec) -> AttrScores {
    let dim = gt.len();
    let high = |rng: &mut ChaCha8Rng| round_to(uniform(rng, 1.0 - spec.attr_spread, 1.0), 4);
    let mut pairs: Vec<(u32, f64)> = Vec::new();
    for id in gt.positives() {
        if spec.attr_flip > 0.0 && rng.random_bool(spec.attr_flip) {
            continue;
        }
        pairs.push((id as u32, high(rng)));
    }
    if spec.attr_flip > 0.0 {
        // Flipped negatives: skip ahead geometrically instead of one draw per attribute.
        let geo = Geometric::new(spec.attr_flip).expect("flip probability in (0, 1]");
        let mut pos = 0usize;
        loop {
            let skip = geo.sample(rng);
            pos = match usize::try_from(skip).ok().and_then(|s| pos.checked_add(s)) {
                Some(p) if p < dim => p,
                _ => break,
            };
            if !gt.get(pos) {
                pairs.push((pos as u32, high(rng)));
            }
            pos += 1;
        }
    }
    AttrScores::from_pairs(dim, pairs).expect("ids are unique and in range")
}

/// Simulated detections for one image, in rank order.
pub fn simulate_image(
    image: &ImageRecord,
    index: usize,
    num_categories: usize,
    attr_dim: usize,
    spec: &NoiseSpec,
) -> (DetectionSet, SimulationSummary) {
    let mut rng = image_rng(spec.seed, index);
    let (w, h) = (f64::from(image.width), f64::from(image.height));
    let mut dets = Vec::new();
    for obj in &image.objects {
        let bbox = jitter_box(&mut rng, obj.bbox, spec.jitter, w, h);
        let score = round_to(uniform(&mut rng, spec.tp_score_min, spec.tp_score_max), 4);
        let attribute_scores = tp_attribute_scores(&mut rng, &obj.attributes, spec);
        dets.push(Detection {
            bbox,
            category_id: obj.category_id,
            category_score: score,
            attribute_scores,
        });
    }
    let distractors = if spec.distractor_rate > 0.0 {
        Poisson::new(spec.distractor_rate)
            .expect("rate is positive")
            .sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..distractors {
        let bbox = random_box(&mut rng, image.width, image.height, (0.002, 0.5));
        let category_id = rng.random_range(0..num_categories);
        let score = round_to(
            uniform(
                &mut rng,
                spec.distractor_score_min,
                spec.distractor_score_max,
            ),
            4,
        );
        let n = spec.distractor_attributes.min(attr_dim);
        let pairs = sample(&mut rng, attr_dim, n)
            .into_iter()
            .map(|id| (id as u32, round_to(rng.random::<f64>(), 4)))
            .collect();
        dets.push(Detection {
            bbox,
            category_id,
            category_score: score,
            attribute_scores: AttrScores::from_pairs(attr_dim, pairs)
                .expect("sampled ids are unique"),
        });
    }
    let total = dets.len();
    let set = top_k(
        &DetectionSet::new(image.image_id.clone(), attr_dim, dets),
        spec.max_detections,
    );
    let summary = SimulationSummary {
        images: 1,
        true_positive_copies: image.objects.len(),
        distractors,
        truncated: total - set.len(),
        written_detections: set.len(),
    };
    (set, summary)
}

/// Writes one detection JSONL line per groundtruth image.
pub fn simulate<W: Write>(
    dataset: &Dataset,
    spec: &NoiseSpec,
    out: &mut W,
) -> Result<SimulationSummary> {
    spec.validate()?;
    let mut summary = SimulationSummary::default();
    for (i, image) in dataset.images.iter().enumerate() {
        let (set, s) = simulate_image(
            image,
            i,
            dataset.categories.len(),
            dataset.attributes.len(),
            spec,
        );
        write_detection_line(out, &set).map_err(|e| Error::io("detections output", e))?;
        summary.add(&s);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        generate_dataset(&DatasetSpec {
            images: 10,
            categories: 3,
            attributes: 12,
            objects_per_image: 2,
            domains: vec!["shop".into(), "runway".into()],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn dataset_is_deterministic_and_valid() {
        let a = small();
        assert_eq!(a, small());
        assert_eq!(a.images.len(), 10);
        assert_eq!(a.images[1].domain_tag, "runway");
        for img in &a.images {
            for o in &img.objects {
                assert!(o
                    .bbox
                    .is_within(f64::from(img.width), f64::from(img.height)));
                assert_eq!(o.attributes.count_ones(), 3);
            }
            assert_eq!(img.person_boxes().len(), 2);
        }
    }

    #[test]
    fn noiseless_reproduces_groundtruth() {
        let ds = small();
        let spec = NoiseSpec::noiseless();
        for (i, img) in ds.images.iter().enumerate() {
            let (set, s) = simulate_image(img, i, 3, 12, &spec);
            assert_eq!(s.distractors, 0);
            assert_eq!(set.len(), img.objects.len());
            for d in &set.detections {
                let gt = img
                    .objects
                    .iter()
                    .find(|o| o.bbox == d.bbox)
                    .expect("exact box");
                assert_eq!(d.category_id, gt.category_id);
                assert_eq!(d.category_score, 1.0);
                assert_eq!(d.attribute_scores.binarize(0.5), gt.attributes);
                assert!(d.attribute_scores.pairs().iter().all(|&(_, s)| s == 1.0));
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let ds = small();
        let spec = NoiseSpec {
            seed: 7,
            ..Default::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let sa = simulate(&ds, &spec, &mut a).unwrap();
        let sb = simulate(&ds, &spec, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let mut c = Vec::new();
        simulate(&ds, &NoiseSpec { seed: 8, ..spec }, &mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn distractor_counts_and_cap() {
        let ds = small();
        let spec = NoiseSpec {
            distractor_rate: 2.0,
            ..Default::default()
        };
        let s = simulate(&ds, &spec, &mut std::io::sink()).unwrap();
        assert_eq!(s.images, 10);
        assert_eq!(s.true_positive_copies, 20);
        assert!(s.distractors > 5 && s.distractors < 45, "{}", s.distractors);
        assert_eq!(s.written_detections, 20 + s.distractors);

        let capped = NoiseSpec {
            distractor_rate: 50.0,
            max_detections: 10,
            ..Default::default()
        };
        let s = simulate(&ds, &capped, &mut std::io::sink()).unwrap();
        assert_eq!(s.written_detections, 100);
        assert_eq!(s.truncated, 20 + s.distractors - 100);
    }

    #[test]
    fn output_is_in_rank_order_and_in_bounds() {
        let ds = small();
        let spec = NoiseSpec {
            jitter: 0.3,
            distractor_rate: 5.0,
            ..Default::default()
        };
        for (i, img) in ds.images.iter().enumerate() {
            let (set, _) = simulate_image(img, i, 3, 12, &spec);
            let scores: Vec<f64> = set.detections.iter().map(|d| d.category_score).collect();
            assert!(scores.windows(2).all(|w| w[0] >= w[1]));
            assert!(set.detections.iter().all(|d| d
                .bbox
                .is_within(f64::from(img.width), f64::from(img.height))));
        }
    }

    #[test]
    fn flips_touch_negatives() {
        let gt = AttrVector::from_positive_ids(200, &[0, 1]).unwrap();
        let spec = NoiseSpec {
            attr_flip: 0.5,
            ..Default::default()
        };
        let mut rng = image_rng(1, 0);
        let scores = tp_attribute_scores(&mut rng, &gt, &spec);
        let negatives = scores.pairs().iter().filter(|(id, _)| *id > 1).count();
        assert!(negatives > 60 && negatives < 140, "{negatives}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NoiseSpec {
            attr_flip: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(NoiseSpec {
            tp_score_min: 0.9,
            tp_score_max: 0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DatasetSpec {
            positives_per_object: 100,
            attributes: 5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
