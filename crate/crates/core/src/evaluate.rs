//! End-to-end evaluation of a detection file against a groundtruth dataset.
//!
//! Detection lines are streamed in chunks; each chunk is parsed and scored
//! per image on a rayon pool, and results are slotted by the image's
//! position in the dataset. Aggregation walks images in dataset order, so the
//! report does not depend on the thread count.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::{AttrVector, Dataset, ImageRecord};
use crate::detections::{parse_detection_line, DetectionSchema, DEFAULT_MAX_DETECTIONS};
use crate::error::{Error, Result};
use crate::geometry::IoaDenominator;
use crate::metrics::{
    corloc_image, match_detections, per_class_ap, support_weighted_map, weighted_map,
    ApInterpolation, AttributeCounts, CorLocConfig, CorLocCounting, CorLocResult, MapMode,
    MatchConfig, MatchOutcome, TypeAveraging,
};
use crate::postprocess::{
    filter_by_score, merge_attributes, top_k, DetectionSet, MergeAggregator, MergeConfig,
};
use crate::report::{
    AttributeRow, AttributeTypeRow, ClassRow, EvaluationReport, PartitionReport, ALL_PARTITION,
};

/// Which detections feed the attribute merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePool {
    /// Every detection of the image.
    #[default]
    Unfiltered,
    /// Only detections above the score threshold.
    ScoreFiltered,
}

/// Every constant of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub score_threshold: f64,
    pub iou_threshold: f64,
    pub top_k: usize,
    pub ioa_threshold: f64,
    pub attr_threshold: f64,
    pub class_aware: bool,
    /// AP over score-filtered detections only. Off evaluates every detection.
    pub truncate_at_score_threshold: bool,
    pub ap_interpolation: ApInterpolation,
    pub map_mode: MapMode,
    pub corloc_counting: CorLocCounting,
    pub type_averaging: TypeAveraging,
    pub merge_aggregator: MergeAggregator,
    pub merge_pool: MergePool,
    pub ioa_denominator: IoaDenominator,
    pub max_detections: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            score_threshold: 0.5,
            iou_threshold: 0.5,
            top_k: 5,
            ioa_threshold: 0.7,
            attr_threshold: 0.5,
            class_aware: true,
            truncate_at_score_threshold: true,
            ap_interpolation: ApInterpolation::AllPoints,
            map_mode: MapMode::Pooled,
            corloc_counting: CorLocCounting::OneToMany,
            type_averaging: TypeAveraging::Micro,
            merge_aggregator: MergeAggregator::And,
            merge_pool: MergePool::Unfiltered,
            ioa_denominator: IoaDenominator::Candidate,
            max_detections: DEFAULT_MAX_DETECTIONS,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("score_threshold", self.score_threshold),
            ("iou_threshold", self.iou_threshold),
            ("ioa_threshold", self.ioa_threshold),
            ("attr_threshold", self.attr_threshold),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.iou_threshold == 0.0 {
            return Err(Error::Config("iou_threshold must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.max_detections == 0 {
            return Err(Error::Config("max_detections must be at least 1".into()));
        }
        Ok(())
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            iou_threshold: self.iou_threshold,
            class_aware: self.class_aware,
        }
    }

    pub fn corloc_config(&self) -> CorLocConfig {
        CorLocConfig {
            iou_threshold: self.iou_threshold,
            class_aware: self.class_aware,
            counting: self.corloc_counting,
        }
    }

    pub fn merge_config(&self) -> MergeConfig {
        MergeConfig {
            ioa_threshold: self.ioa_threshold,
            attr_threshold: self.attr_threshold,
            aggregator: self.merge_aggregator,
            ioa_denominator: self.ioa_denominator,
        }
    }
}

/// Everything the aggregate metrics need from one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEval {
    pub outcome: MatchOutcome,
    pub corloc_hits: Vec<bool>,
    pub predicted_attributes: AttrVector,
    pub groundtruth_attributes: AttrVector,
    pub had_detections: bool,
}

pub fn evaluate_image(
    image: &ImageRecord,
    set: &DetectionSet,
    vocab_len: usize,
    protocol: &Protocol,
) -> ImageEval {
    let filtered = filter_by_score(set, protocol.score_threshold);
    let ap_pool = if protocol.truncate_at_score_threshold {
        &filtered
    } else {
        set
    };
    let outcome = match_detections(
        &ap_pool.detections,
        &image.objects,
        &protocol.match_config(),
    );
    let top = top_k(set, protocol.top_k);
    let corloc_hits = corloc_image(&top.detections, &image.objects, &protocol.corloc_config());
    let merge_pool = match protocol.merge_pool {
        MergePool::Unfiltered => set,
        MergePool::ScoreFiltered => &filtered,
    };
    let merged = merge_attributes(merge_pool, &protocol.merge_config());
    ImageEval {
        outcome,
        corloc_hits,
        predicted_attributes: merged.vector,
        groundtruth_attributes: image.attribute_union(vocab_len),
        had_detections: !set.is_empty(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamStats {
    /// Detection lines whose image is in the groundtruth.
    pub matched_images: usize,
    /// Detection lines for images absent from the groundtruth; skipped.
    pub unknown_images: usize,
    /// Detections dropped by the per-image cap.
    pub truncated_detections: usize,
}

pub struct Evaluator<'a> {
    dataset: &'a Dataset,
    protocol: Protocol,
    index: HashMap<&'a str, usize>,
    /// Lenient mode cuts over-cap detection sets instead of failing.
    pub strict: bool,
}

const CHUNK_LINES: usize = 512;

impl<'a> Evaluator<'a> {
    pub fn new(dataset: &'a Dataset, protocol: Protocol) -> Result<Self> {
        protocol.validate()?;
        Ok(Self {
            dataset,
            protocol,
            index: dataset.image_index(),
            strict: false,
        })
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    fn schema(&self) -> DetectionSchema {
        DetectionSchema {
            num_categories: self.dataset.categories.len(),
            num_attributes: self.dataset.attributes.len(),
            max_detections: Some(self.protocol.max_detections),
            strict_cap: self.strict,
        }
    }

    fn empty_set(&self, image: &ImageRecord) -> DetectionSet {
        DetectionSet::new(
            image.image_id.clone(),
            self.dataset.attributes.len(),
            Vec::new(),
        )
    }

    /// Scores in-memory detection sets. Images without a set are evaluated
    /// with no detections.
    pub fn evaluate_sets(&self, sets: &[DetectionSet]) -> Result<(Vec<ImageEval>, StreamStats)> {
        let mut slots: Vec<Option<ImageEval>> = vec![None; self.dataset.images.len()];
        let mut stats = StreamStats::default();
        let vocab_len = self.dataset.attributes.len();
        for set in sets {
            let Some(&i) = self.index.get(set.image_id.as_str()) else {
                stats.unknown_images += 1;
                continue;
            };
            if slots[i].is_some() {
                return Err(Error::Protocol(format!(
                    "duplicate detections for image {:?}",
                    set.image_id
                )));
            }
            if set.attr_dim != vocab_len {
                return Err(Error::Protocol(format!(
                    "detections for {:?} have {} attributes, vocabulary has {vocab_len}",
                    set.image_id, set.attr_dim
                )));
            }
            stats.matched_images += 1;
            slots[i] = Some(evaluate_image(
                &self.dataset.images[i],
                set,
                vocab_len,
                &self.protocol,
            ));
        }
        Ok((self.fill_missing(slots), stats))
    }

    fn fill_missing(&self, slots: Vec<Option<ImageEval>>) -> Vec<ImageEval> {
        let vocab_len = self.dataset.attributes.len();
        slots
            .into_iter()
            .zip(&self.dataset.images)
            .map(|(slot, img)| {
                slot.unwrap_or_else(|| {
                    evaluate_image(img, &self.empty_set(img), vocab_len, &self.protocol)
                })
            })
            .collect()
    }

    /// Streams a detection JSONL file, evaluating up to `jobs` images at a time.
    pub fn evaluate_stream<R: BufRead>(
        &self,
        reader: R,
        source_name: &str,
        jobs: usize,
    ) -> Result<(Vec<ImageEval>, StreamStats)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
        let schema = self.schema();
        let vocab_len = self.dataset.attributes.len();
        let mut slots: Vec<Option<ImageEval>> = vec![None; self.dataset.images.len()];
        let mut stats = StreamStats::default();

        let mut lines = reader.lines().enumerate();
        loop {
            let mut chunk: Vec<(usize, String)> = Vec::with_capacity(CHUNK_LINES);
            for (idx, line) in lines.by_ref() {
                let line = line.map_err(|e| Error::io(source_name, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                chunk.push((idx + 1, line));
                if chunk.len() == CHUNK_LINES {
                    break;
                }
            }
            if chunk.is_empty() {
                break;
            }
            let results: Vec<Result<Option<(usize, ImageEval, usize)>>> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|(line_no, text)| {
                        let parsed = parse_detection_line(text, &schema)
                            .map_err(|reason| Error::record(source_name, *line_no, reason))?;
                        let Some(&i) = self.index.get(parsed.set.image_id.as_str()) else {
                            return Ok(None);
                        };
                        let eval = evaluate_image(
                            &self.dataset.images[i],
                            &parsed.set,
                            vocab_len,
                            &self.protocol,
                        );
                        Ok(Some((i, eval, parsed.truncated)))
                    })
                    .collect()
            });
            for (r, (line_no, _)) in results.into_iter().zip(&chunk) {
                match r? {
                    None => stats.unknown_images += 1,
                    Some((i, eval, truncated)) => {
                        if slots[i].is_some() {
                            return Err(Error::record(
                                source_name,
                                *line_no,
                                format!(
                                    "duplicate detections for image {:?}",
                                    self.dataset.images[i].image_id
                                ),
                            ));
                        }
                        stats.matched_images += 1;
                        stats.truncated_detections += truncated;
                        slots[i] = Some(eval);
                    }
                }
            }
        }
        if stats.matched_images == 0 {
            return Err(Error::Protocol(format!(
                "no overlapping image_ids between {source_name} and the groundtruth"
            )));
        }
        Ok((self.fill_missing(slots), stats))
    }

    /// Aggregates the images selected by `include` into one report.
    pub fn aggregate(
        &self,
        evals: &[ImageEval],
        include: impl Fn(&ImageRecord) -> bool,
    ) -> EvaluationReport {
        let ds = self.dataset;
        let selected: Vec<(&ImageRecord, &ImageEval)> = ds
            .images
            .iter()
            .zip(evals)
            .filter(|(img, _)| include(img))
            .collect();

        let outcomes = || selected.iter().map(|(_, e)| &e.outcome);
        let per_class = per_class_ap(outcomes(), self.protocol.ap_interpolation);
        let wmap = match self.protocol.map_mode {
            MapMode::Pooled => weighted_map(outcomes(), self.protocol.ap_interpolation),
            MapMode::SupportWeighted => support_weighted_map(&per_class),
        };

        let mut cl = CorLocResult::default();
        let mut attrs = AttributeCounts::new(ds.attributes.len());
        for (img, e) in &selected {
            cl.add_image(&img.objects, &e.corloc_hits);
            attrs.add_image(&e.predicted_attributes, &e.groundtruth_attributes);
        }

        let mut class_ids: Vec<usize> = per_class.keys().copied().collect();
        for c in cl.per_class.keys() {
            if !per_class.contains_key(c) {
                class_ids.push(*c);
            }
        }
        class_ids.sort_unstable();
        let classes = class_ids
            .into_iter()
            .map(|c| {
                let ap = per_class.get(&c);
                let cov = cl.per_class.get(&c).copied().unwrap_or_default();
                ClassRow {
                    category_id: c,
                    name: ds
                        .categories
                        .get(c)
                        .map(|e| e.name.clone())
                        .unwrap_or_default(),
                    groundtruth: ap.map(|a| a.num_gt).unwrap_or(cov.total),
                    detections: ap.map(|a| a.num_detections).unwrap_or(0),
                    true_positives: ap.map(|a| a.true_positives).unwrap_or(0),
                    ap: ap.and_then(|a| a.ap),
                    corloc_detected: cov.detected,
                    corloc: cov.ratio(),
                }
            })
            .collect();

        let type_counts = attrs.per_type(&ds.attributes);
        let type_pr = attrs.per_type_pr(&ds.attributes, self.protocol.type_averaging);
        let attribute_types = type_counts
            .iter()
            .map(|(t, c)| AttributeTypeRow {
                attr_type: *t,
                tp: c.tp,
                fp: c.fp,
                fn_: c.fn_,
                precision: type_pr[t].precision,
                recall: type_pr[t].recall,
            })
            .collect();
        let attributes = ds
            .attributes
            .entries()
            .iter()
            .zip(attrs.per_attribute())
            .map(|(e, c)| AttributeRow {
                attribute_id: e.id,
                name: e.name.clone(),
                attr_type: e.attr_type,
                tp: c.tp,
                fp: c.fp,
                fn_: c.fn_,
                precision: c.precision(),
                recall: c.recall(),
            })
            .collect();
        let total = attrs.total();

        EvaluationReport {
            images: selected.len(),
            images_without_detections: selected.iter().filter(|(_, e)| !e.had_detections).count(),
            groundtruth_instances: cl.overall.total,
            evaluated_detections: selected.iter().map(|(_, e)| e.outcome.labels.len()).sum(),
            weighted_map: wmap,
            weighted_mean_corloc: cl.weighted_mean(),
            corloc_detected: cl.overall.detected,
            attribute_precision: total.precision(),
            attribute_recall: total.recall(),
            classes,
            attribute_types,
            attributes,
        }
    }

    /// The overall partition followed by one partition per domain tag, sorted.
    /// Untagged images appear only in the overall partition.
    pub fn partitions(&self, evals: &[ImageEval]) -> Vec<PartitionReport> {
        let mut domains: BTreeMap<&str, ()> = BTreeMap::new();
        for img in &self.dataset.images {
            domains.insert(img.domain_tag.as_str(), ());
        }
        let mut out = vec![PartitionReport {
            dataset: ALL_PARTITION.to_string(),
            metrics: self.aggregate(evals, |_| true),
        }];
        for d in domains.keys() {
            if d.is_empty() || *d == ALL_PARTITION {
                continue;
            }
            out.push(PartitionReport {
                dataset: d.to_string(),
                metrics: self.aggregate(evals, |img| img.domain_tag == *d),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{
        AttributeEntry, AttributeType, AttributeVocabulary, CategoryEntry, CategoryVocabulary,
        GroundTruthObject,
    };
    use crate::geometry::BBox;
    use crate::postprocess::{AttrScores, Detection};

    fn dataset() -> Dataset {
        let attributes = AttributeVocabulary::new(
            (0..3)
                .map(|id| AttributeEntry {
                    id,
                    name: format!("a{id}"),
                    attr_type: AttributeType::Texture,
                })
                .collect(),
        )
        .unwrap();
        let categories = CategoryVocabulary::new(vec![CategoryEntry {
            id: 0,
            name: "dress".into(),
        }])
        .unwrap();
        let images = (0..4)
            .map(|i| ImageRecord {
                image_id: format!("im{i}"),
                width: 100,
                height: 100,
                domain_tag: if i < 2 {
                    "shop".into()
                } else {
                    "runway".into()
                },
                objects: vec![GroundTruthObject {
                    bbox: BBox::new(10.0, 10.0, 50.0, 60.0).unwrap(),
                    category_id: 0,
                    attributes: AttrVector::from_positive_ids(3, &[i % 3]).unwrap(),
                }],
                person_boxes: None,
            })
            .collect();
        Dataset {
            attributes,
            categories,
            images,
        }
    }

    fn perfect_sets(ds: &Dataset) -> Vec<DetectionSet> {
        ds.images
            .iter()
            .map(|img| {
                let dets = img
                    .objects
                    .iter()
                    .map(|o| Detection {
                        bbox: o.bbox,
                        category_id: o.category_id,
                        category_score: 1.0,
                        attribute_scores: AttrScores::from_pairs(
                            3,
                            o.attributes.positives().map(|i| (i as u32, 1.0)).collect(),
                        )
                        .unwrap(),
                    })
                    .collect();
                DetectionSet::new(img.image_id.clone(), 3, dets)
            })
            .collect()
    }

    #[test]
    fn perfect_detector_scores_one() {
        let ds = dataset();
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        let (evals, stats) = ev.evaluate_sets(&perfect_sets(&ds)).unwrap();
        assert_eq!(stats.matched_images, 4);
        let r = ev.aggregate(&evals, |_| true);
        assert_eq!(r.weighted_map, Some(1.0));
        assert_eq!(r.weighted_mean_corloc, Some(1.0));
        assert_eq!(r.attribute_precision, Some(1.0));
        assert_eq!(r.attribute_recall, Some(1.0));
    }

    #[test]
    fn missing_images_count_as_misses() {
        let ds = dataset();
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        let sets = perfect_sets(&ds);
        let (evals, _) = ev.evaluate_sets(&sets[..2]).unwrap();
        let r = ev.aggregate(&evals, |_| true);
        assert_eq!(r.images_without_detections, 2);
        assert_eq!(r.weighted_mean_corloc, Some(0.5));
        assert_eq!(r.weighted_map, Some(0.5));
        assert_eq!(r.attribute_recall, Some(0.5));
        let parts = ev.partitions(&evals);
        let names: Vec<_> = parts.iter().map(|p| p.dataset.as_str()).collect();
        assert_eq!(names, vec!["all", "runway", "shop"]);
        assert_eq!(parts[1].metrics.weighted_map, Some(0.0));
        assert_eq!(parts[2].metrics.weighted_map, Some(1.0));
    }

    #[test]
    fn untagged_images_only_in_all() {
        let mut ds = dataset();
        ds.images[3].domain_tag.clear();
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        let (evals, _) = ev.evaluate_sets(&perfect_sets(&ds)).unwrap();
        let parts = ev.partitions(&evals);
        let names: Vec<_> = parts
            .iter()
            .map(|p| (p.dataset.as_str(), p.metrics.images))
            .collect();
        assert_eq!(names, vec![("all", 4), ("runway", 1), ("shop", 2)]);
    }

    #[test]
    fn stream_matches_in_memory_and_jobs() {
        let ds = dataset();
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        let sets = perfect_sets(&ds);
        let mut buf = Vec::new();
        for s in &sets {
            crate::detections::write_detection_line(&mut buf, s).unwrap();
        }
        let (a, _) = ev.evaluate_stream(buf.as_slice(), "dets", 1).unwrap();
        let (b, _) = ev.evaluate_stream(buf.as_slice(), "dets", 3).unwrap();
        let (c, _) = ev.evaluate_sets(&sets).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn stream_errors() {
        let ds = dataset();
        let ev = Evaluator::new(&ds, Protocol::default()).unwrap();
        let none = "{\"image_id\":\"zzz\",\"detections\":[]}\n";
        let err = ev.evaluate_stream(none.as_bytes(), "dets", 1).unwrap_err();
        assert!(
            err.to_string().contains("no overlapping image_ids"),
            "{err}"
        );
        let dup = "{\"image_id\":\"im0\"}\n{\"image_id\":\"im0\"}\n";
        let err = ev.evaluate_stream(dup.as_bytes(), "dets", 1).unwrap_err();
        assert!(err.to_string().contains("dets:2: duplicate"), "{err}");
        let bad = "{\"image_id\":\"im0\",\"detections\":[{\"box\":[0,0,1,1],\"category_id\":4,\"category_score\":0.9}]}\n";
        let err = ev.evaluate_stream(bad.as_bytes(), "dets", 1).unwrap_err();
        assert!(err.to_string().contains("dets:1:"), "{err}");
    }

    #[test]
    fn protocol_validation() {
        assert!(Protocol::default().validate().is_ok());
        let p = Protocol {
            top_k: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = Protocol {
            score_threshold: 1.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let partial: Protocol =
            toml::from_str("top_k = 3\nmap_mode = \"support_weighted\"").unwrap();
        assert_eq!(partial.top_k, 3);
        assert_eq!(partial.map_mode, MapMode::SupportWeighted);
        assert_eq!(partial.score_threshold, 0.5);
    }
}
