//! METEOR without the synonym stage: exact and stem unigram alignment,
//! recall-weighted harmonic mean, fragmentation penalty.

use super::stem::stem;

/// Matching stage order: exact surface form first, then shared stem.
fn align(hypothesis: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut matched_ref = vec![false; reference.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut matched_hyp = vec![false; hypothesis.len()];

    // stage 1: exact, leftmost-first
    for (i, h) in hypothesis.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            if !matched_ref[j] && h == r {
                matched_ref[j] = true;
                matched_hyp[i] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    // stage 2: stem
    for (i, h) in hypothesis.iter().enumerate() {
        if matched_hyp[i] {
            continue;
        }
        let hs = stem(h);
        for (j, r) in reference.iter().enumerate() {
            if !matched_ref[j] && hs == stem(r) {
                matched_ref[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    let mut chunks = 1;
    for w in pairs.windows(2) {
        let (h0, r0) = w[0];
        let (h1, r1) = w[1];
        if h1 != h0 + 1 || r1 != r0 + 1 {
            chunks += 1;
        }
    }
    chunks
}

/// Sentence-level score: F_mean = 10PR/(R+9P), penalty 0.5*(chunks/m)^3.
pub fn meteor_lite(hypothesis: &[String], reference: &[String]) -> f64 {
    if hypothesis.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let pairs = align(hypothesis, reference);
    let m = pairs.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let p = m / hypothesis.len() as f64;
    let r = m / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let chunks = count_chunks(&pairs) as f64;
    let penalty = 0.5 * (chunks / m).powi(3);
    f_mean * (1.0 - penalty)
}

/// Corpus score: mean over pairs; multi-reference takes the max.
pub fn meteor_lite_corpus(hypotheses: &[Vec<String>], references: &[Vec<Vec<String>>]) -> f64 {
    if hypotheses.is_empty() {
        return 0.0;
    }
    hypotheses
        .iter()
        .zip(references)
        .map(|(h, rs)| {
            rs.iter()
                .map(|r| meteor_lite(h, r))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / hypotheses.len() as f64
}
