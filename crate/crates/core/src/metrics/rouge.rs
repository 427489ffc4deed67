//! ROUGE-L: longest-common-subsequence F-measure, recall-weighted.

pub const DEFAULT_BETA: f64 = 1.2;

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Sentence-level ROUGE-L against one reference.
pub fn rouge_l_single(hypothesis: &[String], reference: &[String], beta: f64) -> f64 {
    if hypothesis.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(hypothesis, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / hypothesis.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Multi-reference: max over references.
pub fn rouge_l(hypothesis: &[String], references: &[Vec<String>], beta: f64) -> f64 {
    references
        .iter()
        .map(|r| rouge_l_single(hypothesis, r, beta))
        .fold(0.0, f64::max)
}

/// Corpus score: mean over hypothesis/reference-set pairs.
pub fn rouge_l_corpus(
    hypotheses: &[Vec<String>],
    references: &[Vec<Vec<String>>],
    beta: f64,
) -> f64 {
    if hypotheses.is_empty() {
        return 0.0;
    }
    hypotheses
        .iter()
        .zip(references)
        .map(|(h, rs)| rouge_l(h, rs, beta))
        .sum::<f64>()
        / hypotheses.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn identical_sentences_score_one() {
        let h = toks("a b c d");
        assert!((rouge_l_single(&h, &h, DEFAULT_BETA) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_common_token_scores_zero() {
        assert_eq!(rouge_l_single(&toks("x y"), &toks("a b"), DEFAULT_BETA), 0.0);
    }

    #[test]
    fn hand_computed_lcs_case() {
        // hyp "a b c" vs ref "a c d": LCS 2, P = R = 2/3, F = 2/3 at any beta
        let f = rouge_l_single(&toks("a b c"), &toks("a c d"), DEFAULT_BETA);
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn multi_reference_takes_max() {
        let h = toks("a b c");
        let refs = vec![toks("x y z"), toks("a b c")];
        assert!((rouge_l(&h, &refs, DEFAULT_BETA) - 1.0).abs() < 1e-12);
    }
}
