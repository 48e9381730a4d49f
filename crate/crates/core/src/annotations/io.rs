//! JSONL readers and writers for groundtruth and vocabulary files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AttrVector, AttributeEntry, AttributeVocabulary, CategoryEntry, CategoryVocabulary, Dataset,
    GroundTruthObject, ImageRecord,
};
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// How out-of-image boxes are handled while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Out-of-image boxes are fatal.
    Strict,
    /// Out-of-image boxes are clipped with a warning; boxes with no area left
    /// inside the image are dropped.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadWarning {
    pub line: usize,
    pub image_id: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthLine {
    image_id: String,
    width: u32,
    height: u32,
    #[serde(default)]
    domain_tag: String,
    #[serde(default)]
    objects: Vec<ObjectLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    person_boxes: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectLine {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    category_id: usize,
    #[serde(default)]
    attributes: Vec<usize>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Iterates non-blank lines as `(1-based line number, text)`.
fn for_each_line<R: BufRead>(
    reader: R,
    source_name: &str,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        f(idx + 1, trimmed)?;
    }
    Ok(())
}

pub fn parse_attribute_vocabulary<R: BufRead>(
    reader: R,
    source_name: &str,
) -> Result<AttributeVocabulary> {
    let mut entries = Vec::new();
    for_each_line(reader, source_name, |line, text| {
        let e: AttributeEntry = serde_json::from_str(text)
            .map_err(|e| Error::record(source_name, line, e.to_string()))?;
        entries.push(e);
        Ok(())
    })?;
    AttributeVocabulary::new(entries)
}

pub fn parse_category_vocabulary<R: BufRead>(
    reader: R,
    source_name: &str,
) -> Result<CategoryVocabulary> {
    let mut entries = Vec::new();
    for_each_line(reader, source_name, |line, text| {
        let e: CategoryEntry = serde_json::from_str(text)
            .map_err(|e| Error::record(source_name, line, e.to_string()))?;
        entries.push(e);
        Ok(())
    })?;
    CategoryVocabulary::new(entries)
}

pub fn load_attribute_vocabulary(path: &Path) -> Result<AttributeVocabulary> {
    parse_attribute_vocabulary(open(path)?, &path.display().to_string())
}

pub fn load_category_vocabulary(path: &Path) -> Result<CategoryVocabulary> {
    parse_category_vocabulary(open(path)?, &path.display().to_string())
}

struct BoxCheck<'a> {
    source_name: &'a str,
    line: usize,
    image_id: &'a str,
    width: f64,
    height: f64,
    mode: ValidationMode,
}

impl BoxCheck<'_> {
    /// `Ok(None)` means the box was dropped in lenient mode.
    fn check(
        &self,
        raw: [f64; 4],
        what: &str,
        warnings: &mut Vec<LoadWarning>,
    ) -> Result<Option<BBox>> {
        let b = BBox::try_from(raw)
            .map_err(|e| Error::record(self.source_name, self.line, format!("{what}: {e}")))?;
        if b.is_within(self.width, self.height) {
            return Ok(Some(b));
        }
        match self.mode {
            ValidationMode::Strict => Err(Error::record(
                self.source_name,
                self.line,
                format!(
                    "{what} {b} lies outside the {}x{} image",
                    self.width, self.height
                ),
            )),
            ValidationMode::Lenient => {
                let clipped = b.clip(self.width, self.height);
                let message = match clipped {
                    Some(c) => format!("{what} {b} clipped to {c}"),
                    None => format!("{what} {b} has no area inside the image; dropped"),
                };
                log::warn!("{}:{}: {message}", self.source_name, self.line);
                warnings.push(LoadWarning {
                    line: self.line,
                    image_id: self.image_id.to_string(),
                    message,
                });
                Ok(clipped)
            }
        }
    }
}

/// Parses a groundtruth JSONL stream against already-loaded vocabularies.
pub fn parse_groundtruth<R: BufRead>(
    reader: R,
    source_name: &str,
    attributes: &AttributeVocabulary,
    categories: &CategoryVocabulary,
    mode: ValidationMode,
) -> Result<(Vec<ImageRecord>, Vec<LoadWarning>)> {
    let mut images = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for_each_line(reader, source_name, |line, text| {
        let rec: GroundTruthLine = serde_json::from_str(text)
            .map_err(|e| Error::record(source_name, line, e.to_string()))?;
        if rec.width == 0 || rec.height == 0 {
            return Err(Error::record(
                source_name,
                line,
                format!("image {:?} has zero width or height", rec.image_id),
            ));
        }
        if !seen.insert(rec.image_id.clone()) {
            return Err(Error::record(
                source_name,
                line,
                format!("duplicate image_id {:?}", rec.image_id),
            ));
        }
        let check = BoxCheck {
            source_name,
            line,
            image_id: &rec.image_id,
            width: f64::from(rec.width),
            height: f64::from(rec.height),
            mode,
        };
        let mut objects = Vec::with_capacity(rec.objects.len());
        for (k, obj) in rec.objects.iter().enumerate() {
            if obj.category_id >= categories.len() {
                return Err(Error::record(
                    source_name,
                    line,
                    format!(
                        "object {k}: category_id {} not in vocabulary of {} categories",
                        obj.category_id,
                        categories.len()
                    ),
                ));
            }
            let attrs =
                AttrVector::from_positive_ids(attributes.len(), &obj.attributes).map_err(|id| {
                    Error::record(
                        source_name,
                        line,
                        format!(
                            "object {k}: attribute id {id} outside vocabulary of {} attributes",
                            attributes.len()
                        ),
                    )
                })?;
            if let Some(bbox) = check.check(obj.bbox, &format!("object {k} box"), &mut warnings)? {
                objects.push(GroundTruthObject {
                    bbox,
                    category_id: obj.category_id,
                    attributes: attrs,
                });
            }
        }
        let person_boxes = match &rec.person_boxes {
            None => None,
            Some(raw) => {
                let mut out = Vec::with_capacity(raw.len());
                for (k, b) in raw.iter().enumerate() {
                    if let Some(b) = check.check(*b, &format!("person box {k}"), &mut warnings)? {
                        out.push(b);
                    }
                }
                Some(out)
            }
        };
        images.push(ImageRecord {
            image_id: rec.image_id,
            width: rec.width,
            height: rec.height,
            domain_tag: rec.domain_tag,
            objects,
            person_boxes,
        });
        Ok(())
    })?;
    Ok((images, warnings))
}

/// Loads and validates a groundtruth file together with its vocabularies.
pub fn load_dataset(
    groundtruth: &Path,
    attribute_vocab: &Path,
    category_vocab: &Path,
    mode: ValidationMode,
) -> Result<(Dataset, Vec<LoadWarning>)> {
    let attributes = load_attribute_vocabulary(attribute_vocab)?;
    let categories = load_category_vocabulary(category_vocab)?;
    let (images, warnings) = parse_groundtruth(
        open(groundtruth)?,
        &groundtruth.display().to_string(),
        &attributes,
        &categories,
        mode,
    )?;
    Ok((
        Dataset {
            attributes,
            categories,
            images,
        },
        warnings,
    ))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_groundtruth(path: &Path, images: &[ImageRecord]) -> Result<()> {
    write_jsonl(
        path,
        images.iter().map(|img| GroundTruthLine {
            image_id: img.image_id.clone(),
            width: img.width,
            height: img.height,
            domain_tag: img.domain_tag.clone(),
            objects: img
                .objects
                .iter()
                .map(|o| ObjectLine {
                    bbox: o.bbox.to_array(),
                    category_id: o.category_id,
                    attributes: o.attributes.positives().collect(),
                })
                .collect(),
            person_boxes: img
                .person_boxes
                .as_ref()
                .map(|v| v.iter().map(|b| b.to_array()).collect()),
        }),
    )
}

pub fn write_attribute_vocabulary(path: &Path, vocab: &AttributeVocabulary) -> Result<()> {
    write_jsonl(path, vocab.entries().iter())
}

pub fn write_category_vocabulary(path: &Path, vocab: &CategoryVocabulary) -> Result<()> {
    write_jsonl(path, vocab.entries().iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::AttributeType;

    fn vocabs() -> (AttributeVocabulary, CategoryVocabulary) {
        let attrs = parse_attribute_vocabulary(
            concat!(
                "{\"id\":0,\"name\":\"floral\",\"type\":\"texture\"}\n",
                "{\"id\":1,\"name\":\"cotton\",\"type\":\"fabric\"}\n",
                "\n",
                "{\"id\":2,\"name\":\"maxi\",\"type\":3}\n",
            )
            .as_bytes(),
            "attrs",
        )
        .unwrap();
        let cats = parse_category_vocabulary(
            "{\"id\":0,\"name\":\"Dress\"}\n{\"id\":1,\"name\":\"Skirt\"}\n".as_bytes(),
            "cats",
        )
        .unwrap();
        (attrs, cats)
    }

    fn parse(text: &str, mode: ValidationMode) -> Result<(Vec<ImageRecord>, Vec<LoadWarning>)> {
        let (a, c) = vocabs();
        parse_groundtruth(text.as_bytes(), "gt.jsonl", &a, &c, mode)
    }

    #[test]
    fn empty_file_gives_empty_dataset() {
        let (images, warnings) = parse("", ValidationMode::Strict).unwrap();
        assert!(images.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn deepfashion_style_record() {
        let line = r#"{"image_id":"img/Floral_Dress/img_00000001.jpg","width":300,"height":300,"domain_tag":"shop","objects":[{"box":[72,79,232,273],"category_id":0,"attributes":[0,2]}],"person_boxes":[[40,10,260,300]]}"#;
        let (images, _) = parse(line, ValidationMode::Strict).unwrap();
        assert_eq!(images.len(), 1);
        let img = &images[0];
        assert_eq!(img.domain_tag, "shop");
        assert_eq!(img.objects.len(), 1);
        assert_eq!(
            img.objects[0].bbox,
            BBox::new(72.0, 79.0, 232.0, 273.0).unwrap()
        );
        assert_eq!(
            img.objects[0].attributes.to_bools(),
            vec![true, false, true]
        );
        assert_eq!(img.person_boxes().len(), 1);
    }

    #[test]
    fn attribute_out_of_vocab_reports_line() {
        let text = concat!(
            "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"objects\":[]}\n",
            "{\"image_id\":\"b\",\"width\":10,\"height\":10,\"objects\":[{\"box\":[0,0,5,5],\"category_id\":0,\"attributes\":[3]}]}\n",
        );
        let err = parse(text, ValidationMode::Lenient).unwrap_err();
        match err {
            Error::Record { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("attribute id 3"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_image_id_is_fatal() {
        let text = "{\"image_id\":\"a\",\"width\":10,\"height\":10}\n{\"image_id\":\"a\",\"width\":10,\"height\":10}\n";
        let err = parse(text, ValidationMode::Lenient).unwrap_err();
        assert!(
            err.to_string().contains("gt.jsonl:2: duplicate image_id"),
            "{err}"
        );
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = parse(
            "{\"image_id\":\"a\",\"width\":10,\"height\":10}\n{oops",
            ValidationMode::Strict,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("gt.jsonl:2:"), "{err}");
    }

    #[test]
    fn unknown_category_rejected() {
        let text = "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"objects\":[{\"box\":[0,0,5,5],\"category_id\":7}]}";
        assert!(parse(text, ValidationMode::Lenient)
            .unwrap_err()
            .to_string()
            .contains("category_id 7"));
    }

    #[test]
    fn out_of_bounds_strict_vs_lenient() {
        let text = "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"objects\":[{\"box\":[5,5,15,8],\"category_id\":0},{\"box\":[20,20,30,30],\"category_id\":1}]}";
        assert!(parse(text, ValidationMode::Strict).is_err());
        let (images, warnings) = parse(text, ValidationMode::Lenient).unwrap();
        assert_eq!(images[0].objects.len(), 1);
        assert_eq!(
            images[0].objects[0].bbox,
            BBox::new(5.0, 5.0, 10.0, 8.0).unwrap()
        );
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn degenerate_box_always_rejected() {
        let text = "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"objects\":[{\"box\":[5,5,5,8],\"category_id\":0}]}";
        assert!(parse(text, ValidationMode::Lenient).is_err());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let (attrs, cats) = vocabs();
        let text = "{\"image_id\":\"a\",\"width\":100,\"height\":80,\"domain_tag\":\"runway\",\"objects\":[{\"box\":[1.5,2,50,60],\"category_id\":1,\"attributes\":[2,1]}]}\n";
        let (images, _) = parse(text, ValidationMode::Strict).unwrap();
        let gt = dir.path().join("gt.jsonl");
        let av = dir.path().join("attrs.jsonl");
        let cv = dir.path().join("cats.jsonl");
        write_groundtruth(&gt, &images).unwrap();
        write_attribute_vocabulary(&av, &attrs).unwrap();
        write_category_vocabulary(&cv, &cats).unwrap();
        let (ds, _) = load_dataset(&gt, &av, &cv, ValidationMode::Strict).unwrap();
        assert_eq!(ds.images, images);
        assert_eq!(ds.attributes.type_of(2), Some(AttributeType::Shape));
        let written = std::fs::read_to_string(&gt).unwrap();
        assert_eq!(
            written,
            "{\"image_id\":\"a\",\"width\":100,\"height\":80,\"domain_tag\":\"runway\",\"objects\":[{\"box\":[1.5,2.0,50.0,60.0],\"category_id\":1,\"attributes\":[1,2]}]}\n"
        );
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_attribute_vocabulary(Path::new("/nonexistent/attrs.jsonl")).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/attrs.jsonl"));
    }
}
