use crate::error::{Error, Result};

use super::normalize::normalize_answer;

/// Exact match after normalization: 1 or 0.
pub fn exact_match_accuracy(pred: &str, gold: &str) -> f64 {
    if normalize_answer(pred) == normalize_answer(gold) {
        1.0
    } else {
        0.0
    }
}

/// VQA consensus accuracy against exactly 10 human answers: the mean over
/// the 10 leave-one-out 9-answer subsets of min(matches/3, 1).
pub fn vqa_consensus_accuracy(pred: &str, human_answers: &[String]) -> Result<f64> {
    if human_answers.len() != 10 {
        return Err(Error::Data(format!(
            "vqa consensus needs exactly 10 reference answers, got {}",
            human_answers.len()
        )));
    }
    let pred_norm = normalize_answer(pred).joined();
    let matches: Vec<bool> = human_answers
        .iter()
        .map(|a| normalize_answer(a).joined() == pred_norm)
        .collect();
    let mut total = 0.0;
    for leave_out in 0..10 {
        let subset_matches = matches
            .iter()
            .enumerate()
            .filter(|(i, m)| *i != leave_out && **m)
            .count();
        total += (subset_matches as f64 / 3.0).min(1.0);
    }
    Ok(total / 10.0)
}
