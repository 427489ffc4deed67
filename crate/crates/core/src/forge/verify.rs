use crate::annotation::{AnnotationSource, ImageAnnotation};
use crate::error::{Error, Result};

/// One object dropped during count verification, for the discard log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountDiscard {
    pub image_id: String,
    pub label: String,
    pub count_a: Option<i64>,
    pub count_b: Option<i64>,
}

/// Cross-annotator count verification: an object survives only when both
/// annotators report exactly the same count and that count is non-zero in
/// both. Everything else is discarded and logged. Persons and scene are
/// taken from annotator A (counts are the only cross-checked fields).
pub fn verify_counts(
    a: &ImageAnnotation,
    b: &ImageAnnotation,
) -> Result<(ImageAnnotation, Vec<CountDiscard>)> {
    if a.image_id != b.image_id {
        return Err(Error::Data(format!(
            "image_id mismatch: {} vs {}",
            a.image_id, b.image_id
        )));
    }
    let mut merged_objects = Vec::new();
    let mut discards = Vec::new();
    for obj in &a.objects {
        let other = b.object(&obj.label);
        match other {
            Some(o) if o.count == obj.count && obj.count > 0 => {
                merged_objects.push(obj.clone());
            }
            _ => discards.push(CountDiscard {
                image_id: a.image_id.clone(),
                label: obj.label.clone(),
                count_a: Some(obj.count),
                count_b: other.map(|o| o.count),
            }),
        }
    }
    for obj in &b.objects {
        if a.object(&obj.label).is_none() {
            discards.push(CountDiscard {
                image_id: a.image_id.clone(),
                label: obj.label.clone(),
                count_a: None,
                count_b: Some(obj.count),
            });
        }
    }
    let merged = ImageAnnotation {
        image_id: a.image_id.clone(),
        objects: merged_objects,
        persons: a.persons.clone(),
        scene: a.scene.clone(),
        source: AnnotationSource::Merged,
    };
    Ok((merged, discards))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{ObjectEntry, SemanticCategory, SpatialPosition};

    fn ann(id: &str, source: AnnotationSource, objects: &[(&str, i64)]) -> ImageAnnotation {
        ImageAnnotation {
            image_id: id.into(),
            objects: objects
                .iter()
                .map(|(label, count)| ObjectEntry {
                    label: (*label).into(),
                    count: *count,
                    semantic_category: SemanticCategory::Other,
                    color: None,
                    position: SpatialPosition::Unknown,
                })
                .collect(),
            persons: vec![],
            scene: None,
            source,
        }
    }

    #[test]
    fn agreeing_counts_survive() {
        let a = ann("img1", AnnotationSource::AnnotatorA, &[("dog", 2)]);
        let b = ann("img1", AnnotationSource::AnnotatorB, &[("dog", 2)]);
        let (merged, discards) = verify_counts(&a, &b).unwrap();
        assert_eq!(merged.objects.len(), 1);
        assert_eq!(merged.objects[0].count, 2);
        assert_eq!(merged.source, AnnotationSource::Merged);
        assert!(discards.is_empty());
    }

    #[test]
    fn disagreeing_counts_are_discarded() {
        let a = ann("img1", AnnotationSource::AnnotatorA, &[("dog", 2)]);
        let b = ann("img1", AnnotationSource::AnnotatorB, &[("dog", 3)]);
        let (merged, discards) = verify_counts(&a, &b).unwrap();
        assert!(merged.objects.is_empty());
        assert_eq!(discards.len(), 1);
        assert_eq!(discards[0].count_b, Some(3));
    }

    #[test]
    fn zero_count_fails_presence_check() {
        let a = ann(
            "img1",
            AnnotationSource::AnnotatorA,
            &[("cat", 1), ("dog", 0)],
        );
        let b = ann(
            "img1",
            AnnotationSource::AnnotatorB,
            &[("cat", 1), ("dog", 1)],
        );
        let (merged, discards) = verify_counts(&a, &b).unwrap();
        let labels: Vec<_> = merged.objects.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels, vec!["cat"]);
        assert_eq!(discards.len(), 1);
        assert_eq!(discards[0].label, "dog");
    }

    #[test]
    fn mismatched_image_ids_error() {
        let a = ann("img1", AnnotationSource::AnnotatorA, &[]);
        let b = ann("img2", AnnotationSource::AnnotatorB, &[]);
        assert!(verify_counts(&a, &b).is_err());
    }

    #[test]
    fn objects_only_in_b_are_logged() {
        let a = ann("img1", AnnotationSource::AnnotatorA, &[]);
        let b = ann("img1", AnnotationSource::AnnotatorB, &[("cat", 1)]);
        let (merged, discards) = verify_counts(&a, &b).unwrap();
        assert!(merged.objects.is_empty());
        assert_eq!(discards[0].count_a, None);
    }
}
