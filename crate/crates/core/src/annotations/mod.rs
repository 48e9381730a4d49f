//! Groundtruth data model: vocabularies, attribute vectors, image records.

mod cleaning;
mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub use cleaning::{
    clean_attributes, clean_boxes, remap_groundtruth, AttributeRemap, CleaningConfig, RemovalEntry,
    RemovalLog, RemovalRule,
};
pub use io::{
    load_attribute_vocabulary, load_category_vocabulary, load_dataset, parse_attribute_vocabulary,
    parse_category_vocabulary, parse_groundtruth, write_attribute_vocabulary,
    write_category_vocabulary, write_groundtruth, LoadWarning, ValidationMode,
};

/// Collapses runs of whitespace and lowercases, so `" Abstract  Geo"` and
/// `"abstract geo"` name the same attribute.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The five attribute groups; each has its own score branch in the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "AttributeTypeRepr")]
pub enum AttributeType {
    Texture,
    Fabric,
    Shape,
    Part,
    Style,
}

impl AttributeType {
    pub const ALL: [AttributeType; 5] = [
        AttributeType::Texture,
        AttributeType::Fabric,
        AttributeType::Shape,
        AttributeType::Part,
        AttributeType::Style,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttributeType::Texture => "texture",
            AttributeType::Fabric => "fabric",
            AttributeType::Shape => "shape",
            AttributeType::Part => "part",
            AttributeType::Style => "style",
        }
    }

    /// 1-based code as used by DeepFashion's attribute list.
    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == lower)
            .ok_or_else(|| format!("unknown attribute type {s:?}"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AttributeTypeRepr {
    Code(u8),
    Name(String),
}

impl TryFrom<AttributeTypeRepr> for AttributeType {
    type Error = String;

    fn try_from(v: AttributeTypeRepr) -> Result<Self, Self::Error> {
        match v {
            AttributeTypeRepr::Code(c) => AttributeType::from_code(c)
                .ok_or_else(|| format!("attribute type code {c} not in 1..=5")),
            AttributeTypeRepr::Name(s) => s.parse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeEntry {
    pub id: usize,
    pub name: String,
    #[serde(rename = "type")]
    pub attr_type: AttributeType,
}

/// Attribute names with dense ids `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeVocabulary {
    entries: Vec<AttributeEntry>,
    by_name: HashMap<String, usize>,
}

impl AttributeVocabulary {
    /// Validates and sorts by id. Ids must cover `0..N` exactly and names must
    /// be unique after [`normalize_name`].
    pub fn new(mut entries: Vec<AttributeEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        let by_name = index_names(entries.iter().map(|e| (e.id, e.name.as_str())), "attribute")?;
        Ok(Self { entries, by_name })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AttributeEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&AttributeEntry> {
        self.entries.get(id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(&normalize_name(name)).copied()
    }

    pub fn type_of(&self, id: usize) -> Option<AttributeType> {
        self.get(id).map(|e| e.attr_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryVocabulary {
    entries: Vec<CategoryEntry>,
    by_name: HashMap<String, usize>,
}

impl CategoryVocabulary {
    pub fn new(mut entries: Vec<CategoryEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        let by_name = index_names(entries.iter().map(|e| (e.id, e.name.as_str())), "category")?;
        Ok(Self { entries, by_name })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CategoryEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&CategoryEntry> {
        self.entries.get(id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(&normalize_name(name)).copied()
    }
}

fn index_names<'a>(
    sorted: impl Iterator<Item = (usize, &'a str)>,
    kind: &str,
) -> Result<HashMap<String, usize>> {
    let mut by_name = HashMap::new();
    for (expected, (id, name)) in sorted.enumerate() {
        if id != expected {
            return Err(Error::Vocabulary(format!(
                "{kind} ids must be dense 0..N-1; expected id {expected}, found {id}"
            )));
        }
        let key = normalize_name(name);
        if key.is_empty() {
            return Err(Error::Vocabulary(format!("{kind} {id} has an empty name")));
        }
        if let Some(prev) = by_name.insert(key, id) {
            return Err(Error::Vocabulary(format!(
                "{kind} name {name:?} (id {id}) duplicates id {prev}"
            )));
        }
    }
    Ok(by_name)
}

/// Dense binary vector over an attribute vocabulary.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AttrVector(BitVec<u64, Lsb0>);

impl AttrVector {
    pub fn zeros(len: usize) -> Self {
        AttrVector(bitvec![u64, Lsb0; 0; len])
    }

    pub fn ones(len: usize) -> Self {
        AttrVector(bitvec![u64, Lsb0; 1; len])
    }

    /// Builds a vector from a sparse list of positive ids. Fails on the first
    /// id outside `0..len`.
    pub fn from_positive_ids(len: usize, ids: &[usize]) -> Result<Self, usize> {
        let mut v = Self::zeros(len);
        for &id in ids {
            if id >= len {
                return Err(id);
            }
            v.0.set(id, true);
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        AttrVector(bits.iter().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: usize) -> bool {
        self.0.get(id).map(|b| *b).unwrap_or(false)
    }

    pub fn set(&mut self, id: usize, value: bool) {
        self.0.set(id, value);
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn any(&self) -> bool {
        self.0.any()
    }

    /// Ids of the positive entries, ascending.
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter_ones()
    }

    pub fn and_assign(&mut self, other: &AttrVector) {
        assert_eq!(self.len(), other.len(), "attribute vector length mismatch");
        self.0 &= &other.0;
    }

    pub fn or_assign(&mut self, other: &AttrVector) {
        assert_eq!(self.len(), other.len(), "attribute vector length mismatch");
        self.0 |= &other.0;
    }

    /// Element-wise `self <= other`.
    pub fn is_subset_of(&self, other: &AttrVector) -> bool {
        self.len() == other.len() && self.positives().all(|i| other.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.0.iter().map(|b| *b).collect()
    }
}

impl fmt::Debug for AttrVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AttrVector(len={}, ones={:?})",
            self.len(),
            self.positives().collect::<Vec<_>>()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthObject {
    pub bbox: BBox,
    pub category_id: usize,
    pub attributes: AttrVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    /// Free-form domain such as `shop`, `consumer`, `runway` or `sketch`.
    pub domain_tag: String,
    pub objects: Vec<GroundTruthObject>,
    /// `None` when the source record carried no `person_boxes` field.
    pub person_boxes: Option<Vec<BBox>>,
}

impl ImageRecord {
    pub fn person_boxes(&self) -> &[BBox] {
        self.person_boxes.as_deref().unwrap_or(&[])
    }

    /// OR of all object attribute vectors; the per-image groundtruth used by
    /// attribute evaluation.
    pub fn attribute_union(&self, vocab_len: usize) -> AttrVector {
        let mut acc = AttrVector::zeros(vocab_len);
        for obj in &self.objects {
            acc.or_assign(&obj.attributes);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attributes: AttributeVocabulary,
    pub categories: CategoryVocabulary,
    pub images: Vec<ImageRecord>,
}

impl Dataset {
    pub fn object_count(&self) -> usize {
        self.images.iter().map(|i| i.objects.len()).sum()
    }

    pub fn image_index(&self) -> HashMap<&str, usize> {
        self.images
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.as_str(), i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(id: usize, name: &str, t: AttributeType) -> AttributeEntry {
        AttributeEntry {
            id,
            name: name.into(),
            attr_type: t,
        }
    }

    #[test]
    fn normalization() {
        assert_eq!(
            normalize_name("  Abstract   GEO\tprint "),
            "abstract geo print"
        );
    }

    #[test]
    fn vocabulary_requires_dense_ids() {
        let err = AttributeVocabulary::new(vec![
            attr(0, "a", AttributeType::Texture),
            attr(2, "b", AttributeType::Texture),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("dense"), "{err}");
    }

    #[test]
    fn vocabulary_rejects_normalized_duplicates() {
        let err = AttributeVocabulary::new(vec![
            attr(0, "Floral", AttributeType::Texture),
            attr(1, "floral ", AttributeType::Texture),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("duplicates"), "{err}");
    }

    #[test]
    fn vocabulary_lookup_is_normalized() {
        let v = AttributeVocabulary::new(vec![
            attr(1, "geo print", AttributeType::Texture),
            attr(0, "floral", AttributeType::Texture),
        ])
        .unwrap();
        assert_eq!(v.id_of("Geo  Print"), Some(1));
        assert_eq!(v.entries()[0].name, "floral");
    }

    #[test]
    fn attribute_type_from_code_or_name() {
        let e: AttributeEntry = serde_json::from_str(r#"{"id":0,"name":"x","type":3}"#).unwrap();
        assert_eq!(e.attr_type, AttributeType::Shape);
        let e: AttributeEntry =
            serde_json::from_str(r#"{"id":0,"name":"x","type":"Style"}"#).unwrap();
        assert_eq!(e.attr_type, AttributeType::Style);
        assert!(serde_json::from_str::<AttributeEntry>(r#"{"id":0,"name":"x","type":6}"#).is_err());
        assert_eq!(
            serde_json::to_string(&AttributeType::Part).unwrap(),
            "\"part\""
        );
    }

    #[test]
    fn attr_vector_ops() {
        let mut a = AttrVector::from_positive_ids(4, &[0, 2]).unwrap();
        let b = AttrVector::from_positive_ids(4, &[2, 3]).unwrap();
        assert_eq!(AttrVector::from_positive_ids(4, &[4]), Err(4));
        let mut o = a.clone();
        o.or_assign(&b);
        assert_eq!(o.positives().collect::<Vec<_>>(), vec![0, 2, 3]);
        a.and_assign(&b);
        assert_eq!(a.positives().collect::<Vec<_>>(), vec![2]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
    }
}
