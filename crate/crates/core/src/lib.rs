//! Dataset cleaning, proposal labeling and evaluation for fashion attribute
//! detectors.
//!
//! Groundtruth is JSONL with one image per line; detections use the same
//! layout with scored boxes and sparse attribute scores. [`evaluate::Evaluator`]
//! computes weighted mAP (AP over labels pooled across classes), CorLoc over
//! each image's top detections and per-attribute precision/recall on merged
//! attribute vectors, and [`report::ReportDocument`] holds the results.

pub mod annotations;
pub mod detections;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod metrics;
pub mod postprocess;
pub mod proposals;
pub mod report;
pub mod synthetic;

pub use annotations::{
    AttrVector, AttributeEntry, AttributeType, AttributeVocabulary, CategoryEntry,
    CategoryVocabulary, Dataset, GroundTruthObject, ImageRecord, ValidationMode,
};
pub use error::{Error, Result};
pub use evaluate::{Evaluator, Protocol};
pub use geometry::{ioa, iou, BBox, BoxError, IoaDenominator};
pub use postprocess::{AttrScores, Detection, DetectionSet};
pub use proposals::{Proposal, ProposalLabel};
pub use report::{EvaluationReport, ReportDocument};
