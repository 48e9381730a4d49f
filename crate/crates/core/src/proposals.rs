//! Anchor grids, three-way RPN target assignment and person-box pruning.
//!
//! Pruning rewrites Negative anchors that overlap a person box to Ignored, so
//! garments on a person that carry no groundtruth box are not trained as
//! background.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    Grid {
        /// Row-major cell index.
        cell: usize,
        scale: usize,
        ratio: usize,
    },
    External(String),
}

/// A candidate box. May extend beyond the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub bbox: BBox,
    pub source: ProposalSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalLabel {
    Positive,
    Negative,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentConfig {
    pub positive_iou: f64,
    pub negative_iou: f64,
    /// Every groundtruth's best-overlapping proposals become Positive even
    /// below `positive_iou`.
    pub best_match_positive: bool,
}

impl Default for AssignmentConfig {
    fn default() -> Self {
        Self {
            positive_iou: 0.7,
            negative_iou: 0.3,
            best_match_positive: true,
        }
    }
}

impl AssignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.negative_iou
            && self.negative_iou <= self.positive_iou
            && self.positive_iou <= 1.0)
        {
            return Err(Error::Config(format!(
                "need 0 <= negative_iou <= positive_iou <= 1, got {} and {}",
                self.negative_iou, self.positive_iou
            )));
        }
        Ok(())
    }
}

/// Person-box pruning threshold; `None` disables pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PruningConfig {
    pub person_iou_threshold: Option<f64>,
}

impl PruningConfig {
    pub fn disabled() -> Self {
        Self {
            person_iou_threshold: None,
        }
    }

    pub fn at(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::Config(format!(
                "pruning threshold must be in (0, 1], got {threshold}"
            )));
        }
        Ok(Self {
            person_iou_threshold: Some(threshold),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub positive: usize,
    pub negative: usize,
    pub ignored: usize,
}

impl LabelHistogram {
    pub fn of(labels: &[ProposalLabel]) -> Self {
        let mut h = Self::default();
        for l in labels {
            match l {
                ProposalLabel::Positive => h.positive += 1,
                ProposalLabel::Negative => h.negative += 1,
                ProposalLabel::Ignored => h.ignored += 1,
            }
        }
        h
    }

    pub fn add(&mut self, other: &LabelHistogram) {
        self.positive += other.positive;
        self.negative += other.negative;
        self.ignored += other.ignored;
    }
}

/// One anchor per (cell, scale, ratio), centered on its cell, ordered
/// row-major then by scale then by ratio. A ratio `r` is height over width
/// and preserves area: `width = s / sqrt(r)`, `height = s * sqrt(r)`.
///
/// The grid has `ceil(width / stride)` columns and `ceil(height / stride)` rows.
pub fn generate_anchor_grid(
    image_width: u32,
    image_height: u32,
    stride: f64,
    scales: &[f64],
    ratios: &[f64],
) -> Result<Vec<Proposal>> {
    if !(stride > 0.0 && stride.is_finite()) {
        return Err(Error::Config(format!(
            "anchor stride must be positive, got {stride}"
        )));
    }
    if scales.is_empty() || ratios.is_empty() {
        return Err(Error::Config(
            "anchor scales and ratios must be non-empty".into(),
        ));
    }
    if let Some(bad) = scales
        .iter()
        .chain(ratios)
        .find(|v| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::Config(format!(
            "anchor scales and ratios must be positive, got {bad}"
        )));
    }
    let cols = (f64::from(image_width) / stride).ceil() as usize;
    let rows = (f64::from(image_height) / stride).ceil() as usize;
    let shapes: Vec<(f64, f64)> = scales
        .iter()
        .flat_map(|&s| ratios.iter().map(move |&r| (s / r.sqrt(), s * r.sqrt())))
        .collect();
    let mut out = Vec::with_capacity(rows * cols * shapes.len());
    for row in 0..rows {
        let cy = (row as f64 + 0.5) * stride;
        for col in 0..cols {
            let cx = (col as f64 + 0.5) * stride;
            let cell = row * cols + col;
            for (k, &(w, h)) in shapes.iter().enumerate() {
                out.push(Proposal {
                    bbox: BBox::from_center(cx, cy, w, h)?,
                    source: ProposalSource::Grid {
                        cell,
                        scale: k / ratios.len(),
                        ratio: k % ratios.len(),
                    },
                });
            }
        }
    }
    Ok(out)
}

fn max_iou(b: &BBox, others: &[BBox]) -> f64 {
    others.iter().map(|o| iou(b, o)).fold(0.0, f64::max)
}

/// Labels proposals by their best IoU `m` over the groundtruth boxes:
/// Positive when `m >= positive_iou` or the proposal is (one of) the best
/// match for some groundtruth; Negative when `m < negative_iou`; otherwise
/// Ignored.
///
/// A best match only counts when its IoU is positive, so a groundtruth that
/// no proposal touches promotes nothing.
pub fn assign_labels(
    proposals: &[Proposal],
    gt_boxes: &[BBox],
    config: &AssignmentConfig,
) -> Vec<ProposalLabel> {
    // ious[p][g]
    let ious: Vec<Vec<f64>> = proposals
        .iter()
        .map(|p| gt_boxes.iter().map(|g| iou(&p.bbox, g)).collect())
        .collect();
    let mut best_for_gt = vec![0.0f64; gt_boxes.len()];
    for row in &ious {
        for (g, &v) in row.iter().enumerate() {
            best_for_gt[g] = best_for_gt[g].max(v);
        }
    }
    ious.iter()
        .map(|row| {
            let m = row.iter().copied().fold(0.0, f64::max);
            let is_best = config.best_match_positive
                && row
                    .iter()
                    .zip(&best_for_gt)
                    .any(|(&v, &best)| best > 0.0 && v == best);
            if m >= config.positive_iou || is_best {
                ProposalLabel::Positive
            } else if m < config.negative_iou {
                ProposalLabel::Negative
            } else {
                ProposalLabel::Ignored
            }
        })
        .collect()
}

/// Flips Negative labels to Ignored when the proposal's best IoU over the
/// person boxes reaches the threshold. Returns the new labels and the number
/// of flips.
pub fn prune(
    labels: &[ProposalLabel],
    proposals: &[Proposal],
    person_boxes: &[BBox],
    config: &PruningConfig,
) -> (Vec<ProposalLabel>, usize) {
    assert_eq!(
        labels.len(),
        proposals.len(),
        "labels and proposals must align"
    );
    let Some(threshold) = config.person_iou_threshold else {
        return (labels.to_vec(), 0);
    };
    let mut pruned = 0;
    let out = labels
        .iter()
        .zip(proposals)
        .map(|(&label, p)| {
            if label == ProposalLabel::Negative && max_iou(&p.bbox, person_boxes) >= threshold {
                pruned += 1;
                ProposalLabel::Ignored
            } else {
                label
            }
        })
        .collect();
    (out, pruned)
}
