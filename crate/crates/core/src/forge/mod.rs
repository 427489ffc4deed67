//! Dataset forging: count verification, label merging, template-based QA
//! generation, targeted negatives, and the support/skew filters.

mod filters;
mod generate;
mod merge;
mod stats;
mod templates;
mod verify;

pub use filters::{balance_skew, enforce_support, SkewMode};
pub use generate::{expected_answer, generate_negatives, generate_qa, LabelVocab};
pub use merge::{merge_labels, LabelMap};
pub use stats::{dataset_stats, CategoryHistogram};
pub use templates::{Template, TemplateSet};
pub use verify::{verify_counts, CountDiscard};

use crate::annotation::ImageAnnotation;
use crate::dataset::{sort_canonical, QaPair};
use crate::error::Result;

pub const DEFAULT_MIN_SUPPORT: usize = 50;
pub const DEFAULT_MAX_SHARE: f64 = 0.70;
pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.90;
pub const DEFAULT_NEG_RATIO: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ForgeParams {
    pub merge_threshold: f64,
    pub min_support: usize,
    pub max_share: f64,
    pub neg_ratio: f64,
    pub seed: u64,
    pub skew_mode: SkewMode,
}

impl Default for ForgeParams {
    fn default() -> Self {
        ForgeParams {
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            min_support: DEFAULT_MIN_SUPPORT,
            max_share: DEFAULT_MAX_SHARE,
            neg_ratio: DEFAULT_NEG_RATIO,
            seed: 0,
            skew_mode: SkewMode::Downsample,
        }
    }
}

/// Run the full forge pipeline over verified, label-mapped annotations.
/// Output order is canonical regardless of worker scheduling.
pub fn forge_dataset(
    annotations: &[ImageAnnotation],
    templates: &TemplateSet,
    params: &ForgeParams,
) -> Result<Vec<QaPair>> {
    use rayon::prelude::*;

    let mut pairs: Vec<QaPair> = annotations
        .par_iter()
        .map(|a| generate_qa(a, templates, params.seed))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let vocab = LabelVocab::from_annotations(annotations);
    let negatives = generate_negatives(
        &pairs,
        annotations,
        &vocab,
        templates,
        params.seed,
        params.neg_ratio,
    )?;
    pairs.extend(negatives);

    let pairs = balance_skew(pairs, params.max_share, params.skew_mode, params.seed);
    let mut pairs = enforce_support(pairs, params.min_support);
    sort_canonical(&mut pairs);
    Ok(pairs)
}
