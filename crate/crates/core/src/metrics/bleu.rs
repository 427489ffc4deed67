//! Corpus-level BLEU with modified n-gram precision, clipping, and the
//! closest-reference brevity penalty.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_default() += 1;
        }
    }
    counts
}

/// BLEU-1..max_n on a corpus of hypotheses with multi-reference sets.
/// Scores are in [0,1]; reports conventionally multiply by 100.
pub fn bleu(
    hypotheses: &[Vec<String>],
    references: &[Vec<Vec<String>>],
    max_n: usize,
) -> Result<Vec<f64>> {
    if hypotheses.is_empty() {
        return Err(Error::Data("bleu: empty corpus".into()));
    }
    if hypotheses.len() != references.len() {
        return Err(Error::Data(format!(
            "bleu: {} hypotheses vs {} reference sets",
            hypotheses.len(),
            references.len()
        )));
    }

    let mut clipped = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;

    for (hyp, refs) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len();
        // effective reference length: closest to the hypothesis, ties to
        // the shorter reference
        let closest = refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| (l.abs_diff(hyp.len()), l))
            .unwrap_or(0);
        ref_len += closest;

        for n in 1..=max_n {
            let hyp_counts = ngram_counts(hyp, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in refs {
                for (gram, count) in ngram_counts(r, n) {
                    let entry = max_ref.entry(gram).or_default();
                    *entry = (*entry).max(count);
                }
            }
            for (gram, count) in &hyp_counts {
                totals[n - 1] += *count;
                clipped[n - 1] += (*count).min(max_ref.get(gram).copied().unwrap_or(0));
            }
        }
    }

    let bp = if hyp_len >= ref_len || hyp_len == 0 {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    let precisions: Vec<f64> = (0..max_n)
        .map(|i| {
            if totals[i] == 0 {
                0.0
            } else {
                clipped[i] as f64 / totals[i] as f64
            }
        })
        .collect();

    Ok((1..=max_n)
        .map(|n| {
            if precisions[..n].iter().any(|&p| p == 0.0) {
                0.0
            } else {
                let log_mean =
                    precisions[..n].iter().map(|p| p.ln()).sum::<f64>() / n as f64;
                bp * log_mean.exp()
            }
        })
        .collect())
}
