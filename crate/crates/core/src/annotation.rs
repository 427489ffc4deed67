//! Structured per-image annotations: types, JSONL parsing, validation.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed semantic-category vocabulary. Unknown categories map to `Other`
/// at parse time via `from_loose`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticCategory {
    Animal,
    Vehicle,
    Food,
    Appliance,
    Electronic,
    Clothing,
    Household,
    Plant,
    SportEquipment,
    Structure,
    LandscapeFeature,
    Other,
}

impl SemanticCategory {
    pub const ALL: [SemanticCategory; 12] = [
        SemanticCategory::Animal,
        SemanticCategory::Vehicle,
        SemanticCategory::Food,
        SemanticCategory::Appliance,
        SemanticCategory::Electronic,
        SemanticCategory::Clothing,
        SemanticCategory::Household,
        SemanticCategory::Plant,
        SemanticCategory::SportEquipment,
        SemanticCategory::Structure,
        SemanticCategory::LandscapeFeature,
        SemanticCategory::Other,
    ];

    /// Lenient mapping for annotator output; anything unrecognized is `Other`.
    pub fn from_loose(s: &str) -> SemanticCategory {
        match s.trim().to_lowercase().as_str() {
            "animal" => SemanticCategory::Animal,
            "vehicle" => SemanticCategory::Vehicle,
            "food" => SemanticCategory::Food,
            "appliance" => SemanticCategory::Appliance,
            "electronic" | "electronics" => SemanticCategory::Electronic,
            "clothing" => SemanticCategory::Clothing,
            "household" => SemanticCategory::Household,
            "plant" => SemanticCategory::Plant,
            "sport-equipment" | "sport equipment" | "sport" => SemanticCategory::SportEquipment,
            "structure" => SemanticCategory::Structure,
            "landscape-feature" | "landscape feature" | "landscape" => {
                SemanticCategory::LandscapeFeature
            }
            _ => SemanticCategory::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SemanticCategory::Animal => "animal",
            SemanticCategory::Vehicle => "vehicle",
            SemanticCategory::Food => "food",
            SemanticCategory::Appliance => "appliance",
            SemanticCategory::Electronic => "electronic",
            SemanticCategory::Clothing => "clothing",
            SemanticCategory::Household => "household",
            SemanticCategory::Plant => "plant",
            SemanticCategory::SportEquipment => "sport-equipment",
            SemanticCategory::Structure => "structure",
            SemanticCategory::LandscapeFeature => "landscape-feature",
            SemanticCategory::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialPosition {
    Foreground,
    Background,
    Unknown,
}

impl Default for SpatialPosition {
    fn default() -> Self {
        SpatialPosition::Unknown
    }
}

/// One salient object. `count` is signed so that malformed annotator
/// output survives construction and gets flagged by `validate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub label: String,
    pub count: i64,
    pub semantic_category: SemanticCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default)]
    pub position: SpatialPosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub verb: String,
    pub object_label: String,
    /// Set when the object label does not resolve against the annotation's
    /// object list.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unresolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PersonEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<Interaction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneSetting {
    Indoor,
    Outdoor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub setting: SceneSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationSource {
    AnnotatorA,
    AnnotatorB,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image_id: String,
    #[serde(default)]
    pub objects: Vec<ObjectEntry>,
    #[serde(default)]
    pub persons: Vec<PersonEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneEntry>,
    pub source: AnnotationSource,
}

impl ImageAnnotation {
    pub fn object(&self, label: &str) -> Option<&ObjectEntry> {
        self.objects.iter().find(|o| o.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Malformed,
}

/// Unvalidated annotator response; malformed records never enter a
/// validated collection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub image_id: String,
    pub raw_text: String,
    pub parse_status: ParseStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectReport {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub annotations: Vec<ImageAnnotation>,
    pub rejects: Vec<RejectReport>,
}

/// Parse line-delimited JSON annotations. Malformed lines are collected
/// as rejects, not fatal. Duplicate object labels within one record are
/// aggregated by summing counts (first occurrence keeps its attributes).
pub fn parse_annotations<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ImageAnnotation>(&line) {
            Ok(mut a) => {
                aggregate_duplicate_labels(&mut a.objects);
                out.annotations.push(a);
            }
            Err(e) => out.rejects.push(RejectReport {
                line: lineno,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn aggregate_duplicate_labels(objects: &mut Vec<ObjectEntry>) {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut merged: Vec<ObjectEntry> = Vec::with_capacity(objects.len());
    for obj in objects.drain(..) {
        match seen.get(&obj.label) {
            Some(&i) => merged[i].count += obj.count,
            None => {
                seen.insert(obj.label.clone(), merged.len());
                merged.push(obj);
            }
        }
    }
    *objects = merged;
}

/// Serialize a collection back to JSONL.
pub fn write_annotations<W: std::io::Write>(
    mut w: W,
    annotations: &[ImageAnnotation],
) -> Result<()> {
    for a in annotations {
        let line = serde_json::to_string(a).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<stream>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub field: String,
    pub rule: String,
}

impl ValidationIssue {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        ValidationIssue {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

/// Check every type invariant; an empty issue list means the record is valid.
pub fn validate_annotation(a: &ImageAnnotation) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if a.image_id.is_empty() {
        issues.push(ValidationIssue::new("image_id", "image_id non-empty"));
    }
    let mut labels = std::collections::BTreeSet::new();
    for obj in &a.objects {
        if obj.label.is_empty() {
            issues.push(ValidationIssue::new("objects.label", "label non-empty"));
        }
        if obj.count < 0 {
            issues.push(ValidationIssue::new(
                format!("objects[{}].count", obj.label),
                "count >= 0",
            ));
        }
        if !labels.insert(obj.label.clone()) {
            issues.push(ValidationIssue::new(
                format!("objects[{}]", obj.label),
                "object labels unique within one annotation",
            ));
        }
    }
    for (i, person) in a.persons.iter().enumerate() {
        if let Some(inter) = &person.interaction {
            let resolved = a.objects.iter().any(|o| o.label == inter.object_label);
            if !resolved && !inter.unresolved {
                issues.push(ValidationIssue::new(
                    format!("persons[{i}].interaction.object_label"),
                    "unresolved interaction target",
                ));
            }
        }
    }
    if let Some(scene) = &a.scene {
        if let Some(loc) = &scene.location {
            if loc.trim().is_empty() {
                issues.push(ValidationIssue::new(
                    "scene.location",
                    "location non-empty when present",
                ));
            }
        }
    }
    issues
}
