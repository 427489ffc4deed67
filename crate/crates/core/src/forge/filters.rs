use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::dataset::{QaPair, QuestionCategory};
use crate::util::derive_rng;

/// What to do with a category whose dominant answer exceeds the share cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewMode {
    /// Down-sample the dominant answer until its share fits (default).
    Downsample,
    /// Drop the whole category.
    DropCategory,
}

/// Remove every category with fewer than `min_support` instances
/// (strictly fewer; a category at exactly the threshold survives).
pub fn enforce_support(dataset: Vec<QaPair>, min_support: usize) -> Vec<QaPair> {
    let mut counts: BTreeMap<QuestionCategory, usize> = BTreeMap::new();
    for pair in &dataset {
        *counts.entry(pair.category).or_default() += 1;
    }
    dataset
        .into_iter()
        .filter(|p| counts[&p.category] >= min_support)
        .collect()
}

/// Rebalance categories where a single answer dominates more than
/// `max_share` of instances. Non-dominant answers are never removed.
pub fn balance_skew(
    dataset: Vec<QaPair>,
    max_share: f64,
    mode: SkewMode,
    seed: u64,
) -> Vec<QaPair> {
    let mut by_category: BTreeMap<QuestionCategory, Vec<QaPair>> = BTreeMap::new();
    for pair in dataset {
        by_category.entry(pair.category).or_default().push(pair);
    }

    let mut out = Vec::new();
    for (category, mut pairs) in by_category {
        let mut answer_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &pairs {
            *answer_counts.entry(p.answer.as_str()).or_default() += 1;
        }
        let (&dominant, &dom_count) = answer_counts
            .iter()
            .max_by_key(|(answer, count)| (**count, std::cmp::Reverse(**answer)))
            .expect("category nonempty");
        let total = pairs.len();
        let share = dom_count as f64 / total as f64;
        if share <= max_share {
            out.append(&mut pairs);
            continue;
        }
        if mode == SkewMode::DropCategory {
            continue;
        }
        // largest dominant count k with k/(k + rest) <= max_share
        let rest = total - dom_count;
        let keep = ((max_share * rest as f64) / (1.0 - max_share)).floor() as usize;
        let dominant = dominant.to_string();
        let mut dominant_pairs: Vec<QaPair> = Vec::new();
        for p in pairs {
            if p.answer == dominant {
                dominant_pairs.push(p);
            } else {
                out.push(p);
            }
        }
        // seeded uniform choice of which dominant-answer pairs survive;
        // sorted first so the choice is order-independent
        dominant_pairs.sort_by(|a, b| a.question_id.cmp(&b.question_id));
        let mut rng = derive_rng(seed, &format!("skew/{}", category.id()));
        dominant_pairs.shuffle(&mut rng);
        out.extend(dominant_pairs.into_iter().take(keep));
    }
    out
}
