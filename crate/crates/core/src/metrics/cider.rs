//! Plain CIDEr: TF-IDF n-gram vectors (orders 1..4), cosine consensus
//! against each reference, averaged over orders and images, x10 scaling.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

type Counts = HashMap<Vec<String>, f64>;

fn ngram_counts(tokens: &[String], n: usize) -> Counts {
    let mut counts = Counts::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.to_vec()).or_default() += 1.0;
        }
    }
    counts
}

/// Document frequencies per order: number of images in whose reference
/// set an n-gram appears.
fn document_frequencies(reference_sets: &[Vec<Vec<String>>]) -> Vec<Counts> {
    let mut dfs = vec![Counts::new(); MAX_ORDER];
    for refs in reference_sets {
        for (n, df) in dfs.iter_mut().enumerate() {
            let mut seen: HashMap<Vec<String>, ()> = HashMap::new();
            for r in refs {
                for gram in ngram_counts(r, n + 1).into_keys() {
                    seen.entry(gram).or_insert(());
                }
            }
            for gram in seen.into_keys() {
                *df.entry(gram).or_default() += 1.0;
            }
        }
    }
    dfs
}

fn tfidf(tokens: &[String], n: usize, df: &Counts, n_images: f64) -> Counts {
    let counts = ngram_counts(tokens, n);
    let total: f64 = counts.values().sum();
    if total == 0.0 {
        return Counts::new();
    }
    counts
        .into_iter()
        .map(|(gram, c)| {
            let d = df.get(&gram).copied().unwrap_or(0.0).max(1.0);
            let idf = (n_images / d).ln();
            (gram, (c / total) * idf)
        })
        .collect()
}

fn cosine(a: &Counts, b: &Counts) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(gram, x)| b.get(gram).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Corpus CIDEr. Document frequencies come from the full reference corpus.
pub fn cider(hypotheses: &[Vec<String>], reference_sets: &[Vec<Vec<String>>]) -> Result<f64> {
    if reference_sets.is_empty() || reference_sets.iter().all(|r| r.is_empty()) {
        return Err(Error::Data("cider: empty reference corpus".into()));
    }
    if hypotheses.len() != reference_sets.len() {
        return Err(Error::Data(format!(
            "cider: {} hypotheses vs {} reference sets",
            hypotheses.len(),
            reference_sets.len()
        )));
    }
    let n_images = reference_sets.len() as f64;
    let dfs = document_frequencies(reference_sets);

    let mut total = 0.0;
    for (hyp, refs) in hypotheses.iter().zip(reference_sets) {
        let mut image_score = 0.0;
        for (n, df) in dfs.iter().enumerate() {
            let hyp_vec = tfidf(hyp, n + 1, df, n_images);
            let mean_cos: f64 = refs
                .iter()
                .map(|r| cosine(&hyp_vec, &tfidf(r, n + 1, df, n_images)))
                .sum::<f64>()
                / refs.len().max(1) as f64;
            image_score += mean_cos;
        }
        total += (10.0 / MAX_ORDER as f64) * image_score;
    }
    Ok(total / hypotheses.len() as f64)
}
