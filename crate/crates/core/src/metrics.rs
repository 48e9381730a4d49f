//! Detection and attribute metrics.
//!
//! Ratios with a zero denominator are `None` ("undefined"), never 0, so a
//! class without support can be told apart from a class the detector missed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotations::{AttrVector, AttributeType, AttributeVocabulary, GroundTruthObject};
use crate::geometry::iou;
use crate::postprocess::{by_score_desc, ranked_indices, Detection};

/// One detection's verdict after matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub score: f64,
    pub is_tp: bool,
    pub category_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    /// Only match detections to groundtruth of the same category.
    pub class_aware: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            class_aware: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Aligned with the input detections.
    pub labels: Vec<ScoredLabel>,
    /// Aligned with the input groundtruth.
    pub gt_detected: Vec<bool>,
    pub gt_categories: Vec<usize>,
}

impl MatchOutcome {
    pub fn tp_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_tp).count()
    }
}

/// Greedy matching in descending score order (earlier index on ties). Each
/// detection takes the still-unmatched groundtruth with the highest IoU at or
/// above the threshold (lowest groundtruth index on ties); otherwise it is a
/// false positive.
pub fn match_detections(
    detections: &[Detection],
    gts: &[GroundTruthObject],
    config: &MatchConfig,
) -> MatchOutcome {
    let mut labels: Vec<ScoredLabel> = detections
        .iter()
        .map(|d| ScoredLabel {
            score: d.category_score,
            is_tp: false,
            category_id: d.category_id,
        })
        .collect();
    let mut gt_detected = vec![false; gts.len()];
    for di in ranked_indices(detections) {
        let d = &detections[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if gt_detected[gi] || (config.class_aware && g.category_id != d.category_id) {
                continue;
            }
            let v = iou(&d.bbox, &g.bbox);
            if v >= config.iou_threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            gt_detected[gi] = true;
            labels[di].is_tp = true;
        }
    }
    MatchOutcome {
        labels,
        gt_detected,
        gt_categories: gts.iter().map(|g| g.category_id).collect(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApInterpolation {
    /// Area under the precision envelope at every recall step.
    #[default]
    AllPoints,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

/// Average precision of `(score, is_tp)` labels against `num_gt` groundtruth
/// instances. Sorted internally by descending score; equal scores keep the
/// caller's order. `None` when `num_gt` is 0.
pub fn average_precision(
    labels: &[(f64, bool)],
    num_gt: usize,
    interpolation: ApInterpolation,
) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut sorted = labels.to_vec();
    sorted.sort_by(|a, b| by_score_desc(a.0, b.0));
    Some(ap_of_ranked(
        sorted.iter().map(|l| l.1),
        num_gt,
        interpolation,
    ))
}

/// AP of labels already in rank order.
fn ap_of_ranked(
    ranked: impl Iterator<Item = bool>,
    num_gt: usize,
    interpolation: ApInterpolation,
) -> f64 {
    let mut precision = Vec::new();
    let mut tp_flags = Vec::new();
    let mut tp = 0usize;
    for (k, is_tp) in ranked.enumerate() {
        tp += usize::from(is_tp);
        precision.push(tp as f64 / (k + 1) as f64);
        tp_flags.push(is_tp);
    }
    // precision envelope, non-increasing from the right
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    match interpolation {
        ApInterpolation::AllPoints => {
            let total = precision
                .iter()
                .zip(&tp_flags)
                .filter(|(_, &t)| t)
                .fold(0.0, |acc, (p, _)| acc + p);
            total / num_gt as f64
        }
        ApInterpolation::ElevenPoint => {
            let mut recall_at = Vec::with_capacity(precision.len());
            let mut tp = 0usize;
            for &t in &tp_flags {
                tp += usize::from(t);
                recall_at.push(tp as f64 / num_gt as f64);
            }
            (0..=10)
                .map(|i| {
                    let r = i as f64 / 10.0;
                    recall_at
                        .iter()
                        .position(|&x| x >= r)
                        .map(|k| precision[k])
                        .unwrap_or(0.0)
                })
                .fold(0.0, |acc, p| acc + p)
                / 11.0
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    /// AP of all labels pooled across classes.
    #[default]
    Pooled,
    /// Mean of per-class AP weighted by groundtruth count.
    SupportWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub num_gt: usize,
    pub num_detections: usize,
    pub true_positives: usize,
    pub ap: Option<f64>,
}

/// Per-class AP over a collection of per-image outcomes.
pub fn per_class_ap<'a>(
    outcomes: impl IntoIterator<Item = &'a MatchOutcome>,
    interpolation: ApInterpolation,
) -> BTreeMap<usize, ClassAp> {
    let mut labels: BTreeMap<usize, Vec<(f64, bool)>> = BTreeMap::new();
    let mut gt: BTreeMap<usize, usize> = BTreeMap::new();
    for o in outcomes {
        for l in &o.labels {
            labels
                .entry(l.category_id)
                .or_default()
                .push((l.score, l.is_tp));
        }
        for &c in &o.gt_categories {
            *gt.entry(c).or_default() += 1;
        }
    }
    let classes: std::collections::BTreeSet<usize> =
        labels.keys().chain(gt.keys()).copied().collect();
    classes
        .into_iter()
        .map(|c| {
            let l = labels.remove(&c).unwrap_or_default();
            let n = gt.get(&c).copied().unwrap_or(0);
            let row = ClassAp {
                num_gt: n,
                num_detections: l.len(),
                true_positives: l.iter().filter(|x| x.1).count(),
                ap: average_precision(&l, n, interpolation),
            };
            (c, row)
        })
        .collect()
}

/// Class-agnostic AP of every label pooled across images and classes.
pub fn weighted_map<'a>(
    outcomes: impl IntoIterator<Item = &'a MatchOutcome>,
    interpolation: ApInterpolation,
) -> Option<f64> {
    let mut pooled = Vec::new();
    let mut num_gt = 0;
    for o in outcomes {
        pooled.extend(o.labels.iter().map(|l| (l.score, l.is_tp)));
        num_gt += o.gt_categories.len();
    }
    average_precision(&pooled, num_gt, interpolation)
}

/// Groundtruth-count-weighted mean of the defined per-class APs.
pub fn support_weighted_map(per_class: &BTreeMap<usize, ClassAp>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0usize);
    for row in per_class.values() {
        if let Some(ap) = row.ap {
            num += ap * row.num_gt as f64;
            den += row.num_gt;
        }
    }
    (den > 0).then(|| num / den as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorLocCounting {
    /// A detection may witness every groundtruth it overlaps.
    #[default]
    OneToMany,
    /// Groundtruth is covered only through greedy one-to-one matching.
    OneToOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorLocConfig {
    pub iou_threshold: f64,
    pub class_aware: bool,
    pub counting: CorLocCounting,
}

impl Default for CorLocConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            class_aware: true,
            counting: CorLocCounting::OneToMany,
        }
    }
}

/// Which groundtruth instances of one image are covered by `top_detections`.
pub fn corloc_image(
    top_detections: &[Detection],
    gts: &[GroundTruthObject],
    config: &CorLocConfig,
) -> Vec<bool> {
    match config.counting {
        CorLocCounting::OneToMany => gts
            .iter()
            .map(|g| {
                top_detections.iter().any(|d| {
                    (!config.class_aware || d.category_id == g.category_id)
                        && iou(&d.bbox, &g.bbox) >= config.iou_threshold
                })
            })
            .collect(),
        CorLocCounting::OneToOne => {
            let m = MatchConfig {
                iou_threshold: config.iou_threshold,
                class_aware: config.class_aware,
            };
            match_detections(top_detections, gts, &m).gt_detected
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCount {
    pub detected: usize,
    pub total: usize,
}

impl CoverageCount {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.detected as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorLocResult {
    pub per_class: BTreeMap<usize, CoverageCount>,
    pub overall: CoverageCount,
}

impl CorLocResult {
    pub fn add_image(&mut self, gts: &[GroundTruthObject], detected: &[bool]) {
        for (g, &hit) in gts.iter().zip(detected) {
            let c = self.per_class.entry(g.category_id).or_default();
            c.total += 1;
            c.detected += usize::from(hit);
            self.overall.total += 1;
            self.overall.detected += usize::from(hit);
        }
    }

    pub fn weighted_mean(&self) -> Option<f64> {
        self.overall.ratio()
    }
}

/// CorLoc over images given each image's top-k detections.
pub fn corloc(
    top_sets: &[&[Detection]],
    gts_per_image: &[&[GroundTruthObject]],
    config: &CorLocConfig,
) -> CorLocResult {
    assert_eq!(
        top_sets.len(),
        gts_per_image.len(),
        "one detection set per image"
    );
    let mut out = CorLocResult::default();
    for (dets, gts) in top_sets.iter().zip(gts_per_image) {
        out.add_image(gts, &corloc_image(dets, gts, config));
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn add(&mut self, o: &ConfusionCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeAveraging {
    /// Pool counts across the type's attributes.
    #[default]
    Micro,
    /// Mean of the defined per-attribute ratios.
    Macro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Per-attribute confusion counts accumulated image by image.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCounts {
    counts: Vec<ConfusionCounts>,
}

impl AttributeCounts {
    pub fn new(dim: usize) -> Self {
        Self {
            counts: vec![ConfusionCounts::default(); dim],
        }
    }

    pub fn add_image(&mut self, predicted: &AttrVector, groundtruth: &AttrVector) {
        assert_eq!(
            predicted.len(),
            self.counts.len(),
            "prediction dimension mismatch"
        );
        assert_eq!(
            groundtruth.len(),
            self.counts.len(),
            "groundtruth dimension mismatch"
        );
        for id in predicted.positives() {
            if groundtruth.get(id) {
                self.counts[id].tp += 1;
            } else {
                self.counts[id].fp += 1;
            }
        }
        for id in groundtruth.positives() {
            if !predicted.get(id) {
                self.counts[id].fn_ += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &AttributeCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.add(b);
        }
    }

    pub fn per_attribute(&self) -> &[ConfusionCounts] {
        &self.counts
    }

    /// Counts pooled over every attribute.
    pub fn total(&self) -> ConfusionCounts {
        let mut t = ConfusionCounts::default();
        for c in &self.counts {
            t.add(c);
        }
        t
    }

    pub fn per_type(
        &self,
        vocab: &AttributeVocabulary,
    ) -> BTreeMap<AttributeType, ConfusionCounts> {
        let mut out = BTreeMap::new();
        for e in vocab.entries() {
            out.entry(e.attr_type)
                .or_insert_with(ConfusionCounts::default)
                .add(&self.counts[e.id]);
        }
        out
    }

    pub fn per_type_pr(
        &self,
        vocab: &AttributeVocabulary,
        averaging: TypeAveraging,
    ) -> BTreeMap<AttributeType, PrecisionRecall> {
        match averaging {
            TypeAveraging::Micro => self
                .per_type(vocab)
                .into_iter()
                .map(|(t, c)| {
                    (
                        t,
                        PrecisionRecall {
                            precision: c.precision(),
                            recall: c.recall(),
                        },
                    )
                })
                .collect(),
            TypeAveraging::Macro => {
                let mut groups: BTreeMap<AttributeType, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
                for e in vocab.entries() {
                    let g = groups.entry(e.attr_type).or_default();
                    let c = &self.counts[e.id];
                    g.0.extend(c.precision());
                    g.1.extend(c.recall());
                }
                let mean =
                    |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
                groups
                    .into_iter()
                    .map(|(t, (p, r))| {
                        (
                            t,
                            PrecisionRecall {
                                precision: mean(&p),
                                recall: mean(&r),
                            },
                        )
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeEvaluation {
    pub per_attribute: Vec<(ConfusionCounts, PrecisionRecall)>,
    pub per_type: BTreeMap<AttributeType, PrecisionRecall>,
}

/// Precision and recall per attribute and per attribute type from one
/// predicted and one groundtruth vector per image.
pub fn attribute_pr(
    predictions: &[AttrVector],
    groundtruth: &[AttrVector],
    vocab: &AttributeVocabulary,
    averaging: TypeAveraging,
) -> AttributeEvaluation {
    assert_eq!(
        predictions.len(),
        groundtruth.len(),
        "one prediction per image"
    );
    let mut counts = AttributeCounts::new(vocab.len());
    for (p, g) in predictions.iter().zip(groundtruth) {
        counts.add_image(p, g);
    }
    AttributeEvaluation {
        per_attribute: counts
            .per_attribute()
            .iter()
            .map(|c| {
                (
                    *c,
                    PrecisionRecall {
                        precision: c.precision(),
                        recall: c.recall(),
                    },
                )
            })
            .collect(),
        per_type: counts.per_type_pr(vocab, averaging),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::AttributeEntry;
    use crate::geometry::BBox;
    use crate::postprocess::AttrScores;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn det(b: BBox, cat: usize, score: f64) -> Detection {
        Detection {
            bbox: b,
            category_id: cat,
            category_score: score,
            attribute_scores: AttrScores::empty(0),
        }
    }

    fn gt(b: BBox, cat: usize) -> GroundTruthObject {
        GroundTruthObject {
            bbox: b,
            category_id: cat,
            attributes: AttrVector::zeros(0),
        }
    }

    const AP: ApInterpolation = ApInterpolation::AllPoints;

    #[test]
    fn exact_match_is_tp() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let o = match_detections(&[det(b, 1, 0.9)], &[gt(b, 1)], &MatchConfig::default());
        assert!(o.labels[0].is_tp);
        assert_eq!(o.gt_detected, vec![true]);
    }

    #[test]
    fn duplicate_detection_is_fp() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        // lower-scored copy listed first; ranking decides the TP
        let o = match_detections(
            &[det(b, 0, 0.6), det(b, 0, 0.9)],
            &[gt(b, 0)],
            &MatchConfig::default(),
        );
        assert!(!o.labels[0].is_tp);
        assert!(o.labels[1].is_tp);
    }

    #[test]
    fn sub_threshold_iou_is_fp() {
        let g = bx(0.0, 0.0, 10.0, 10.0);
        let d = bx(0.0, 0.0, 4.0, 10.0); // inter 40, union 100
        assert!((iou(&d, &g) - 0.4).abs() < 1e-12);
        let o = match_detections(&[det(d, 0, 0.9)], &[gt(g, 0)], &MatchConfig::default());
        assert!(!o.labels[0].is_tp);
    }

    #[test]
    fn class_awareness() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let aware = match_detections(&[det(b, 1, 0.9)], &[gt(b, 0)], &MatchConfig::default());
        assert!(!aware.labels[0].is_tp);
        let agnostic = MatchConfig {
            class_aware: false,
            ..Default::default()
        };
        assert!(match_detections(&[det(b, 1, 0.9)], &[gt(b, 0)], &agnostic).labels[0].is_tp);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            average_precision(&[(0.9, true), (0.8, true)], 2, AP),
            Some(1.0)
        );
        assert_eq!(average_precision(&[(0.9, false)], 3, AP), Some(0.0));
        let v = average_precision(&[(0.9, true), (0.8, false), (0.7, true)], 2, AP).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-12);
        // caller order does not matter
        let v2 = average_precision(&[(0.7, true), (0.9, true), (0.8, false)], 2, AP).unwrap();
        assert_eq!(v, v2);
        assert_eq!(average_precision(&[(0.9, false)], 0, AP), None);
        assert_eq!(average_precision(&[], 0, AP), None);
        assert_eq!(average_precision(&[], 4, AP), Some(0.0));
        // +0.0, so reports never print a negative zero
        for interp in [AP, ApInterpolation::ElevenPoint] {
            assert!(average_precision(&[(0.9, false)], 3, interp)
                .unwrap()
                .is_sign_positive());
        }
    }

    #[test]
    fn eleven_point_ap() {
        // TP, FP, TP with 2 gt: envelope 1 up to r = 0.5, then 2/3
        let v = average_precision(
            &[(0.9, true), (0.8, false), (0.7, true)],
            2,
            ApInterpolation::ElevenPoint,
        )
        .unwrap();
        let expected = (6.0 * 1.0 + 5.0 * (2.0 / 3.0)) / 11.0;
        assert!((v - expected).abs() < 1e-12);
    }

    fn outcome(labels: &[(f64, bool, usize)], gt_cats: &[usize]) -> MatchOutcome {
        MatchOutcome {
            labels: labels
                .iter()
                .map(|&(score, is_tp, category_id)| ScoredLabel {
                    score,
                    is_tp,
                    category_id,
                })
                .collect(),
            gt_detected: vec![false; gt_cats.len()],
            gt_categories: gt_cats.to_vec(),
        }
    }

    #[test]
    fn pooled_map_examples() {
        let o = [
            outcome(&[(0.9, true, 0)], &[0]),
            outcome(&[(0.8, false, 1)], &[1]),
        ];
        assert_eq!(weighted_map(&o, AP), Some(0.5));
        let single = [outcome(
            &[(0.9, true, 0), (0.8, false, 0), (0.7, true, 0)],
            &[0, 0],
        )];
        let per = per_class_ap(&single, AP);
        assert_eq!(weighted_map(&single, AP), per[&0].ap);
        assert_eq!(weighted_map(&[] as &[MatchOutcome], AP), None);
    }

    #[test]
    fn support_weighted_alternative() {
        let o = [
            outcome(&[(0.9, true, 0)], &[0]),
            outcome(&[(0.8, false, 1)], &[1, 1, 1]),
        ];
        let per = per_class_ap(&o, AP);
        assert_eq!(per[&0].ap, Some(1.0));
        assert_eq!(per[&1].ap, Some(0.0));
        assert_eq!(support_weighted_map(&per), Some(0.25));
    }

    #[test]
    fn class_without_gt_is_undefined() {
        let per = per_class_ap(&[outcome(&[(0.9, false, 3)], &[0])], AP);
        assert_eq!(per[&3].ap, None);
        assert_eq!(per[&0].ap, Some(0.0));
    }

    #[test]
    fn corloc_counting() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(1.0, 0.0, 11.0, 10.0);
        let gts = [gt(a, 0), gt(b, 0), gt(bx(50.0, 50.0, 60.0, 60.0), 0)];
        let dets = [det(a, 0, 0.9)];
        let many = corloc_image(&dets, &gts, &CorLocConfig::default());
        assert_eq!(many, vec![true, true, false]);
        let one = corloc_image(
            &dets,
            &gts,
            &CorLocConfig {
                counting: CorLocCounting::OneToOne,
                ..Default::default()
            },
        );
        assert_eq!(one, vec![true, false, false]);
        let r = corloc(&[&dets], &[&gts], &CorLocConfig::default());
        assert_eq!(r.per_class[&0].ratio(), Some(2.0 / 3.0));
        assert_eq!(r.weighted_mean(), Some(2.0 / 3.0));
    }

    fn vocab4() -> AttributeVocabulary {
        AttributeVocabulary::new(
            [
                AttributeType::Texture,
                AttributeType::Texture,
                AttributeType::Fabric,
                AttributeType::Style,
            ]
            .iter()
            .enumerate()
            .map(|(id, t)| AttributeEntry {
                id,
                name: format!("a{id}"),
                attr_type: *t,
            })
            .collect(),
        )
        .unwrap()
    }

    #[test]
    fn attribute_pr_counts() {
        let v = vocab4();
        let preds = [
            AttrVector::from_bools(&[true, false, false, false]),
            AttrVector::from_bools(&[true, false, false, false]),
        ];
        let gts = [
            AttrVector::from_bools(&[true, false, false, false]),
            AttrVector::from_bools(&[false, true, false, false]),
        ];
        let e = attribute_pr(&preds, &gts, &v, TypeAveraging::Micro);
        let (c, pr) = e.per_attribute[0];
        assert_eq!((c.tp, c.fp, c.fn_), (1, 1, 0));
        assert_eq!(pr.precision, Some(0.5));
        assert_eq!(pr.recall, Some(1.0));
        assert_eq!(e.per_attribute[1].1.precision, None);
        assert_eq!(e.per_attribute[1].1.recall, Some(0.0));
        assert_eq!(e.per_attribute[2].1, PrecisionRecall::default());
        let tex = e.per_type[&AttributeType::Texture];
        assert_eq!(tex.precision, Some(0.5));
        assert_eq!(tex.recall, Some(0.5));
        let mac = attribute_pr(&preds, &gts, &v, TypeAveraging::Macro);
        assert_eq!(mac.per_type[&AttributeType::Texture].precision, Some(0.5));
        assert_eq!(mac.per_type[&AttributeType::Texture].recall, Some(0.5));
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let v = vocab4();
        let gts = [AttrVector::from_bools(&[true, false, true, false])];
        let e = attribute_pr(&gts, &gts, &v, TypeAveraging::Micro);
        for (c, pr) in &e.per_attribute {
            if c.tp + c.fn_ > 0 {
                assert_eq!(pr.precision, Some(1.0));
                assert_eq!(pr.recall, Some(1.0));
            }
        }
        let e = attribute_pr(&[AttrVector::zeros(4)], &gts, &v, TypeAveraging::Micro);
        assert_eq!(e.per_attribute[0].1.recall, Some(0.0));
        assert!(e.per_attribute.iter().all(|(_, pr)| pr.precision.is_none()));
    }
}
