//! Detection JSONL format: one line per image,
//! `{"image_id", "detections": [{"box", "category_id", "category_score", "attribute_scores": [[id, score], ...]}]}`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;
use crate::postprocess::{top_k, AttrScores, Detection, DetectionSet};

/// Default cap on detections per image.
pub const DEFAULT_MAX_DETECTIONS: usize = 300;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionLine {
    image_id: String,
    #[serde(default)]
    detections: Vec<DetectionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    category_id: usize,
    category_score: f64,
    #[serde(default)]
    attribute_scores: Vec<(u32, f64)>,
}

/// Limits a parsed line is checked against.
#[derive(Debug, Clone, Copy)]
pub struct DetectionSchema {
    pub num_categories: usize,
    pub num_attributes: usize,
    /// `None` disables the cap.
    pub max_detections: Option<usize>,
    /// Over-cap sets are an error when true, otherwise cut to the top scores.
    pub strict_cap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDetections {
    pub set: DetectionSet,
    /// Detections dropped by the cap.
    pub truncated: usize,
}

/// Parses and validates one JSONL line. Errors carry no location; the caller
/// adds the line number.
pub fn parse_detection_line(
    text: &str,
    schema: &DetectionSchema,
) -> Result<ParsedDetections, String> {
    let line: DetectionLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut detections = Vec::with_capacity(line.detections.len());
    for (k, d) in line.detections.into_iter().enumerate() {
        let bbox = BBox::try_from(d.bbox).map_err(|e| format!("detection {k}: {e}"))?;
        if d.category_id >= schema.num_categories {
            return Err(format!(
                "detection {k}: category_id {} not in vocabulary of {} categories",
                d.category_id, schema.num_categories
            ));
        }
        if !(0.0..=1.0).contains(&d.category_score) {
            return Err(format!(
                "detection {k}: category_score {} outside [0, 1]",
                d.category_score
            ));
        }
        let attribute_scores = AttrScores::from_pairs(schema.num_attributes, d.attribute_scores)
            .map_err(|e| format!("detection {k}: {e}"))?;
        detections.push(Detection {
            bbox,
            category_id: d.category_id,
            category_score: d.category_score,
            attribute_scores,
        });
    }
    let mut set = DetectionSet::new(line.image_id, schema.num_attributes, detections);
    let mut truncated = 0;
    if let Some(cap) = schema.max_detections {
        if set.len() > cap {
            if schema.strict_cap {
                return Err(format!(
                    "image {:?} has {} detections, more than the cap of {cap}",
                    set.image_id,
                    set.len()
                ));
            }
            truncated = set.len() - cap;
            set = top_k(&set, cap);
        }
    }
    Ok(ParsedDetections { set, truncated })
}

/// Writes one detection set as a JSONL line.
pub fn write_detection_line<W: Write>(w: &mut W, set: &DetectionSet) -> std::io::Result<()> {
    let line = DetectionLine {
        image_id: set.image_id.clone(),
        detections: set
            .detections
            .iter()
            .map(|d| DetectionRecord {
                bbox: d.bbox.to_array(),
                category_id: d.category_id,
                category_score: d.category_score,
                attribute_scores: d.attribute_scores.pairs().to_vec(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut *w, &line)?;
    w.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: DetectionSchema = DetectionSchema {
        num_categories: 3,
        num_attributes: 5,
        max_detections: Some(2),
        strict_cap: false,
    };

    #[test]
    fn parse_sparse_attributes() {
        let text = r#"{"image_id":"a","detections":[{"box":[0,0,10,10],"category_id":2,"category_score":0.75,"attribute_scores":[[4,0.9],[1,0.2]]}]}"#;
        let p = parse_detection_line(text, &SCHEMA).unwrap();
        let d = &p.set.detections[0];
        assert_eq!(d.attribute_scores.get(4), 0.9);
        assert_eq!(d.attribute_scores.get(0), 0.0);
        assert_eq!(p.set.attr_dim, 5);
    }

    #[test]
    fn rejects_bad_values() {
        let bad_cat = r#"{"image_id":"a","detections":[{"box":[0,0,10,10],"category_id":3,"category_score":0.5}]}"#;
        assert!(parse_detection_line(bad_cat, &SCHEMA)
            .unwrap_err()
            .contains("category_id 3"));
        let bad_attr = r#"{"image_id":"a","detections":[{"box":[0,0,10,10],"category_id":0,"category_score":0.5,"attribute_scores":[[5,0.1]]}]}"#;
        assert!(parse_detection_line(bad_attr, &SCHEMA)
            .unwrap_err()
            .contains("attribute id 5"));
        let bad_score = r#"{"image_id":"a","detections":[{"box":[0,0,10,10],"category_id":0,"category_score":1.5}]}"#;
        assert!(parse_detection_line(bad_score, &SCHEMA).is_err());
        let bad_box = r#"{"image_id":"a","detections":[{"box":[0,0,0,10],"category_id":0,"category_score":0.5}]}"#;
        assert!(parse_detection_line(bad_box, &SCHEMA).is_err());
    }

    #[test]
    fn cap_truncates_or_fails() {
        let text = r#"{"image_id":"a","detections":[
            {"box":[0,0,1,1],"category_id":0,"category_score":0.1},
            {"box":[0,0,2,2],"category_id":0,"category_score":0.9},
            {"box":[0,0,3,3],"category_id":0,"category_score":0.5}]}"#
            .replace('\n', "");
        let p = parse_detection_line(&text, &SCHEMA).unwrap();
        assert_eq!(p.truncated, 1);
        assert_eq!(
            p.set
                .detections
                .iter()
                .map(|d| d.category_score)
                .collect::<Vec<_>>(),
            vec![0.9, 0.5]
        );
        let strict = DetectionSchema {
            strict_cap: true,
            ..SCHEMA
        };
        assert!(parse_detection_line(&text, &strict).is_err());
    }

    #[test]
    fn write_then_parse() {
        let text = r#"{"image_id":"a","detections":[{"box":[0.5,0.0,10.0,10.0],"category_id":1,"category_score":0.75,"attribute_scores":[[1,0.2],[4,0.9]]}]}"#;
        let p = parse_detection_line(text, &SCHEMA).unwrap();
        let mut out = Vec::new();
        write_detection_line(&mut out, &p.set).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{text}\n"));
    }
}
