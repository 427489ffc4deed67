use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{QaPair, QuestionCategory};

/// Per-category instance counts and answer-frequency distributions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CategoryHistogram {
    pub counts: BTreeMap<QuestionCategory, usize>,
    pub answer_freq: BTreeMap<QuestionCategory, BTreeMap<String, f64>>,
    pub total: usize,
}

pub fn dataset_stats(dataset: &[QaPair]) -> CategoryHistogram {
    let mut counts: BTreeMap<QuestionCategory, usize> = BTreeMap::new();
    let mut answers: BTreeMap<QuestionCategory, BTreeMap<String, usize>> = BTreeMap::new();
    for pair in dataset {
        *counts.entry(pair.category).or_default() += 1;
        *answers
            .entry(pair.category)
            .or_default()
            .entry(pair.answer.clone())
            .or_default() += 1;
    }
    let answer_freq = answers
        .into_iter()
        .map(|(cat, map)| {
            let n = counts[&cat] as f64;
            (
                cat,
                map.into_iter().map(|(a, c)| (a, c as f64 / n)).collect(),
            )
        })
        .collect();
    CategoryHistogram {
        counts,
        answer_freq,
        total: dataset.len(),
    }
}
