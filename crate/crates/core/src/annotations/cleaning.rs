//! Box filters and attribute vocabulary cleanup.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_name, AttrVector, AttributeEntry, AttributeVocabulary, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{area_fraction, aspect_ratio};

/// Cleaning thresholds plus the attribute removal and merge lists.
///
/// Read from TOML; see `docs/formats.md` for the file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub min_aspect: f64,
    pub max_aspect: f64,
    pub min_area_fraction: f64,
    pub removed_attributes: Vec<String>,
    /// alias name -> canonical name
    pub merge: BTreeMap<String, String>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            min_aspect: 0.2,
            max_aspect: 5.0,
            min_area_fraction: 0.0021,
            removed_attributes: Vec::new(),
            merge: BTreeMap::new(),
        }
    }
}

impl CleaningConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: CleaningConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_aspect > 0.0
            && self.min_aspect < self.max_aspect
            && self.max_aspect.is_finite())
        {
            return Err(Error::Config(format!(
                "need 0 < min_aspect < max_aspect, got {} and {}",
                self.min_aspect, self.max_aspect
            )));
        }
        if !(self.min_area_fraction > 0.0 && self.min_area_fraction < 1.0) {
            return Err(Error::Config(format!(
                "min_area_fraction must be in (0, 1), got {}",
                self.min_area_fraction
            )));
        }
        for (alias, canonical) in &self.merge {
            let (a, c) = (normalize_name(alias), normalize_name(canonical));
            if a == c {
                return Err(Error::Config(format!(
                    "attribute {alias:?} is merged into itself"
                )));
            }
            if self.merge.keys().any(|k| normalize_name(k) == c) {
                return Err(Error::Config(format!(
                    "merge target {canonical:?} is itself an alias; aliases must map directly to canonical names"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalRule {
    AspectBelowMin,
    AspectAboveMax,
    AreaBelowMin,
}

impl RemovalRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            RemovalRule::AspectBelowMin => "aspect_below_min",
            RemovalRule::AspectAboveMax => "aspect_above_max",
            RemovalRule::AreaBelowMin => "area_below_min",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalEntry {
    pub image_id: String,
    /// Index into the image's object list before cleaning.
    pub object_index: usize,
    pub rule: RemovalRule,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalLog {
    pub entries: Vec<RemovalEntry>,
    /// Images that had objects before cleaning and none after.
    pub emptied_images: Vec<String>,
}

impl RemovalLog {
    pub fn count_by_rule(&self) -> BTreeMap<RemovalRule, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.rule).or_insert(0) += 1;
        }
        counts
    }
}

/// First rule an object violates, in the order aspect-low, aspect-high, area.
/// All comparisons are strict so boundary values survive.
fn violated_rule(aspect: f64, fraction: f64, config: &CleaningConfig) -> Option<RemovalRule> {
    if aspect < config.min_aspect {
        Some(RemovalRule::AspectBelowMin)
    } else if aspect > config.max_aspect {
        Some(RemovalRule::AspectAboveMax)
    } else if fraction < config.min_area_fraction {
        Some(RemovalRule::AreaBelowMin)
    } else {
        None
    }
}

/// Drops objects with extreme aspect ratio or tiny area. Images are never
/// dropped, even when they lose every object.
pub fn clean_boxes(dataset: &Dataset, config: &CleaningConfig) -> Result<(Dataset, RemovalLog)> {
    config.validate()?;
    let mut log = RemovalLog::default();
    let mut images = Vec::with_capacity(dataset.images.len());
    for img in &dataset.images {
        let mut kept = Vec::with_capacity(img.objects.len());
        for (index, obj) in img.objects.iter().enumerate() {
            let fraction = area_fraction(&obj.bbox, f64::from(img.width), f64::from(img.height))?;
            match violated_rule(aspect_ratio(&obj.bbox), fraction, config) {
                Some(rule) => log.entries.push(RemovalEntry {
                    image_id: img.image_id.clone(),
                    object_index: index,
                    rule,
                }),
                None => kept.push(obj.clone()),
            }
        }
        if kept.is_empty() && !img.objects.is_empty() {
            log.emptied_images.push(img.image_id.clone());
        }
        let mut cleaned = img.clone();
        cleaned.objects = kept;
        images.push(cleaned);
    }
    Ok((
        Dataset {
            attributes: dataset.attributes.clone(),
            categories: dataset.categories.clone(),
            images,
        },
        log,
    ))
}

/// Old attribute id -> new attribute id, `None` for removed attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeRemap {
    old_to_new: Vec<Option<usize>>,
    new_len: usize,
}

impl AttributeRemap {
    pub fn identity(len: usize) -> Self {
        Self {
            old_to_new: (0..len).map(Some).collect(),
            new_len: len,
        }
    }

    pub fn old_len(&self) -> usize {
        self.old_to_new.len()
    }

    pub fn new_len(&self) -> usize {
        self.new_len
    }

    pub fn get(&self, old: usize) -> Option<usize> {
        self.old_to_new.get(old).copied().flatten()
    }

    /// `new[j]` is the OR of `old[i]` over every `i` mapping to `j`.
    pub fn apply(&self, old: &AttrVector) -> AttrVector {
        assert_eq!(
            old.len(),
            self.old_len(),
            "attribute vector does not match remap"
        );
        let mut out = AttrVector::zeros(self.new_len);
        for i in old.positives() {
            if let Some(j) = self.old_to_new[i] {
                out.set(j, true);
            }
        }
        out
    }
}

/// Removes and merges attributes, producing a dense vocabulary and the id
/// remap. Aliases must share their canonical's attribute type.
pub fn clean_attributes(
    vocab: &AttributeVocabulary,
    config: &CleaningConfig,
) -> Result<(AttributeVocabulary, AttributeRemap)> {
    config.validate()?;
    let lookup = |name: &str| {
        vocab
            .id_of(name)
            .ok_or_else(|| Error::Config(format!("unknown attribute {name:?}")))
    };

    let mut removed = vec![false; vocab.len()];
    for name in &config.removed_attributes {
        removed[lookup(name)?] = true;
    }

    let mut alias_of: HashMap<usize, usize> = HashMap::new();
    for (alias, canonical) in &config.merge {
        let a = lookup(alias)?;
        let c = lookup(canonical)?;
        if removed[c] {
            return Err(Error::Config(format!(
                "alias {alias:?} merges into {canonical:?}, which is removed"
            )));
        }
        if removed[a] {
            return Err(Error::Config(format!(
                "attribute {alias:?} is both removed and merged"
            )));
        }
        let (ta, tc) = (vocab.entries()[a].attr_type, vocab.entries()[c].attr_type);
        if ta != tc {
            return Err(Error::Config(format!(
                "cannot merge {alias:?} ({ta}) into {canonical:?} ({tc}): attribute types differ"
            )));
        }
        alias_of.insert(a, c);
    }

    let mut old_to_new = vec![None; vocab.len()];
    let mut entries = Vec::new();
    for e in vocab.entries() {
        if removed[e.id] || alias_of.contains_key(&e.id) {
            continue;
        }
        old_to_new[e.id] = Some(entries.len());
        entries.push(AttributeEntry {
            id: entries.len(),
            name: e.name.clone(),
            attr_type: e.attr_type,
        });
    }
    for (&a, &c) in &alias_of {
        old_to_new[a] = old_to_new[c];
    }
    let new_len = entries.len();
    Ok((
        AttributeVocabulary::new(entries)?,
        AttributeRemap {
            old_to_new,
            new_len,
        },
    ))
}

/// Rewrites every object's attribute vector through `remap`.
pub fn remap_groundtruth(
    dataset: &Dataset,
    new_vocab: &AttributeVocabulary,
    remap: &AttributeRemap,
) -> Result<Dataset> {
    if remap.old_len() != dataset.attributes.len() || remap.new_len() != new_vocab.len() {
        return Err(Error::Vocabulary(format!(
            "remap {} -> {} does not fit vocabularies of {} and {} attributes",
            remap.old_len(),
            remap.new_len(),
            dataset.attributes.len(),
            new_vocab.len()
        )));
    }
    let mut out = dataset.clone();
    out.attributes = new_vocab.clone();
    for img in &mut out.images {
        for obj in &mut img.objects {
            obj.attributes = remap.apply(&obj.attributes);
        }
    }
    Ok(out)
}
