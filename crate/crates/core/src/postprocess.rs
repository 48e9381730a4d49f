//! Per-image detection post-processing: score filtering, top-k selection and
//! IoA-based attribute merging.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::annotations::AttrVector;
use crate::geometry::{ioa_with, BBox, IoaDenominator};

/// Sparse attribute scores over a vocabulary of `dim` attributes. Absent ids
/// score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrScores {
    dim: usize,
    /// Sorted by id, ids unique.
    entries: Vec<(u32, f64)>,
}

impl AttrScores {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Validates ids and scores; pairs may come in any order.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Result<Self, String> {
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(format!("attribute id {} scored twice", w[0].0));
            }
        }
        for &(id, s) in &pairs {
            if id as usize >= dim {
                return Err(format!(
                    "attribute id {id} outside vocabulary of {dim} attributes"
                ));
            }
            if !(0.0..=1.0).contains(&s) {
                return Err(format!("attribute {id} score {s} outside [0, 1]"));
            }
        }
        Ok(Self {
            dim,
            entries: pairs,
        })
    }

    pub fn from_dense(scores: &[f64]) -> Result<Self, String> {
        let pairs = scores
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0.0)
            .map(|(i, s)| (i as u32, *s))
            .collect();
        Self::from_pairs(scores.len(), pairs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(id as u32), |p| p.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Positive where the score is strictly above `threshold`.
    pub fn binarize(&self, threshold: f64) -> AttrVector {
        let mut v = AttrVector::zeros(self.dim);
        for &(id, s) in &self.entries {
            if s > threshold {
                v.set(id as usize, true);
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub category_id: usize,
    pub category_score: f64,
    pub attribute_scores: AttrScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub image_id: String,
    /// Attribute vocabulary size shared by every detection.
    pub attr_dim: usize,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn new(image_id: impl Into<String>, attr_dim: usize, detections: Vec<Detection>) -> Self {
        debug_assert!(detections
            .iter()
            .all(|d| d.attribute_scores.dim() == attr_dim));
        Self {
            image_id: image_id.into(),
            attr_dim,
            detections,
        }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    fn with_detections(&self, detections: Vec<Detection>) -> Self {
        Self {
            image_id: self.image_id.clone(),
            attr_dim: self.attr_dim,
            detections,
        }
    }
}

/// Descending score, then ascending index.
pub(crate) fn by_score_desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Indices of `dets` by descending category score; ties keep index order.
pub fn ranked_indices(dets: &[Detection]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&a, &b| by_score_desc(dets[a].category_score, dets[b].category_score));
    idx
}

/// Keeps detections scoring strictly above `threshold`, in their original order.
pub fn filter_by_score(set: &DetectionSet, threshold: f64) -> DetectionSet {
    set.with_detections(
        set.detections
            .iter()
            .filter(|d| d.category_score > threshold)
            .cloned()
            .collect(),
    )
}

/// The `k` highest-scoring detections in rank order; earlier index wins ties.
pub fn top_k(set: &DetectionSet, k: usize) -> DetectionSet {
    set.with_detections(
        ranked_indices(&set.detections)
            .into_iter()
            .take(k)
            .map(|i| set.detections[i].clone())
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeAggregator {
    #[default]
    And,
    Or,
    /// Positive when more than half of the merged detections are positive.
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub ioa_threshold: f64,
    pub attr_threshold: f64,
    pub aggregator: MergeAggregator,
    pub ioa_denominator: IoaDenominator,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            ioa_threshold: 0.7,
            attr_threshold: 0.5,
            aggregator: MergeAggregator::And,
            ioa_denominator: IoaDenominator::Candidate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedAttributes {
    pub vector: AttrVector,
    /// Number of detections that took part in the merge, including the top one.
    pub members: usize,
    /// Set when the image had no detections; `vector` is then all zeros.
    pub empty: bool,
}

/// One attribute prediction per image: the top-scoring detection `d*` plus
/// every detection whose IoA over `d*` is strictly above the threshold are
/// binarized and combined element-wise.
pub fn merge_attributes(set: &DetectionSet, config: &MergeConfig) -> MergedAttributes {
    let dets = &set.detections;
    let Some(top) = top_index(dets) else {
        return MergedAttributes {
            vector: AttrVector::zeros(set.attr_dim),
            members: 0,
            empty: true,
        };
    };
    let anchor = dets[top].bbox;
    let members: Vec<&Detection> = dets
        .iter()
        .enumerate()
        .filter(|(i, d)| {
            *i == top || ioa_with(&d.bbox, &anchor, config.ioa_denominator) > config.ioa_threshold
        })
        .map(|(_, d)| d)
        .collect();

    let binarized = members
        .iter()
        .map(|d| d.attribute_scores.binarize(config.attr_threshold));
    let vector = match config.aggregator {
        MergeAggregator::And => binarized.fold(AttrVector::ones(set.attr_dim), |mut acc, v| {
            acc.and_assign(&v);
            acc
        }),
        MergeAggregator::Or => binarized.fold(AttrVector::zeros(set.attr_dim), |mut acc, v| {
            acc.or_assign(&v);
            acc
        }),
        MergeAggregator::Majority => {
            let mut counts = vec![0usize; set.attr_dim];
            for v in binarized {
                for id in v.positives() {
                    counts[id] += 1;
                }
            }
            let mut out = AttrVector::zeros(set.attr_dim);
            for (id, &c) in counts.iter().enumerate() {
                if 2 * c > members.len() {
                    out.set(id, true);
                }
            }
            out
        }
    };
    MergedAttributes {
        vector,
        members: members.len(),
        empty: false,
    }
}

/// Highest category score, lowest index on ties.
fn top_index(dets: &[Detection]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, d) in dets.iter().enumerate() {
        match best {
            Some(b) if dets[b].category_score >= d.category_score => {}
            _ => best = Some(i),
        }
    }
    best
}
