//! Scoring a prediction run against a dataset: record-level accuracy,
//! micro/macro aggregation, and the corpus text-generation metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::dataset::{QaPair, QuestionCategory};
use crate::error::{Error, Result};

use super::accuracy::exact_match_accuracy;
use super::bleu::bleu;
use super::cider::cider;
use super::meteor::meteor_lite_corpus;
use super::normalize::tokenize_caption;
use super::rouge::{rouge_l_corpus, DEFAULT_BETA};

/// A model's answers to a dataset, keyed by question id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRun {
    pub run_id: String,
    pub subject_id: String,
    pub records: BTreeMap<String, String>,
}

impl PredictionRun {
    pub fn read_records<R: BufRead>(
        run_id: &str,
        subject_id: &str,
        reader: R,
    ) -> Result<PredictionRun> {
        #[derive(Deserialize)]
        struct Line {
            question_id: String,
            prediction: String,
        }
        let mut records = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<stream>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::Record {
                line: idx + 1,
                message: e.to_string(),
            })?;
            records.insert(parsed.question_id, parsed.prediction);
        }
        Ok(PredictionRun {
            run_id: run_id.to_string(),
            subject_id: subject_id.to_string(),
            records,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Accuracy,
    Bleu,
    RougeL,
    Meteor,
    Cider,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::Bleu,
        Metric::RougeL,
        Metric::Meteor,
        Metric::Cider,
    ];

    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        s.split(',')
            .map(|item| match item.trim() {
                "accuracy" => Ok(Metric::Accuracy),
                "bleu" => Ok(Metric::Bleu),
                "rouge-l" | "rouge" => Ok(Metric::RougeL),
                "meteor" => Ok(Metric::Meteor),
                "cider" => Ok(Metric::Cider),
                other => Err(Error::Config(format!("unknown metric {other:?}"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordScore {
    pub question_id: String,
    pub category: QuestionCategory,
    pub accuracy: f64,
    pub missing: bool,
}

/// Overall, per-category, and record-level scores for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_id: String,
    pub subject_id: String,
    /// metric name -> overall score. Accuracy appears as both
    /// `accuracy` (micro) and `accuracy_macro` (mean of category means).
    pub overall: BTreeMap<String, f64>,
    pub per_category: BTreeMap<QuestionCategory, BTreeMap<String, f64>>,
    pub records: Vec<RecordScore>,
    pub missing: Vec<String>,
}

/// Score a run. Predictions missing from the run score 0 and are flagged;
/// predictions for unknown question ids are an error.
pub fn evaluate_run(
    run: &PredictionRun,
    dataset: &[QaPair],
    metrics: &[Metric],
) -> Result<EvalReport> {
    let known: BTreeSet<&str> = dataset.iter().map(|p| p.question_id.as_str()).collect();
    for qid in run.records.keys() {
        if !known.contains(qid.as_str()) {
            return Err(Error::Data(format!(
                "prediction for unknown question_id {qid:?}"
            )));
        }
    }

    let mut records = Vec::with_capacity(dataset.len());
    let mut missing = Vec::new();
    let mut by_category: BTreeMap<QuestionCategory, Vec<usize>> = BTreeMap::new();
    let mut hyps: Vec<Vec<String>> = Vec::new();
    let mut refs: Vec<Vec<Vec<String>>> = Vec::new();

    for (idx, pair) in dataset.iter().enumerate() {
        let pred = run.records.get(&pair.question_id).map(String::as_str);
        let accuracy = match pred {
            Some(p) => exact_match_accuracy(p, &pair.answer),
            None => {
                missing.push(pair.question_id.clone());
                0.0
            }
        };
        records.push(RecordScore {
            question_id: pair.question_id.clone(),
            category: pair.category,
            accuracy,
            missing: pred.is_none(),
        });
        by_category.entry(pair.category).or_default().push(idx);
        hyps.push(tokenize_caption(pred.unwrap_or("")));
        refs.push(vec![tokenize_caption(&pair.answer)]);
    }

    let mut overall = BTreeMap::new();
    let mut per_category: BTreeMap<QuestionCategory, BTreeMap<String, f64>> = BTreeMap::new();

    let corpus_scores = |idxs: &[usize], out: &mut BTreeMap<String, f64>| -> Result<()> {
        let sub_hyps: Vec<Vec<String>> = idxs.iter().map(|&i| hyps[i].clone()).collect();
        let sub_refs: Vec<Vec<Vec<String>>> = idxs.iter().map(|&i| refs[i].clone()).collect();
        for metric in metrics {
            match metric {
                Metric::Accuracy => {
                    let mean = idxs.iter().map(|&i| records[i].accuracy).sum::<f64>()
                        / idxs.len().max(1) as f64;
                    out.insert("accuracy".into(), mean);
                }
                Metric::Bleu => {
                    let scores = bleu(&sub_hyps, &sub_refs, 4)?;
                    for (n, s) in scores.iter().enumerate() {
                        out.insert(format!("bleu-{}", n + 1), *s);
                    }
                }
                Metric::RougeL => {
                    out.insert("rouge-l".into(), rouge_l_corpus(&sub_hyps, &sub_refs, DEFAULT_BETA));
                }
                Metric::Meteor => {
                    out.insert("meteor".into(), meteor_lite_corpus(&sub_hyps, &sub_refs));
                }
                Metric::Cider => {
                    out.insert("cider".into(), cider(&sub_hyps, &sub_refs)?);
                }
            }
        }
        Ok(())
    };

    let all_idxs: Vec<usize> = (0..dataset.len()).collect();
    corpus_scores(&all_idxs, &mut overall)?;
    for (category, idxs) in &by_category {
        let mut scores = BTreeMap::new();
        corpus_scores(idxs, &mut scores)?;
        per_category.insert(*category, scores);
    }

    if metrics.contains(&Metric::Accuracy) && !per_category.is_empty() {
        let macro_acc = per_category
            .values()
            .map(|m| m["accuracy"])
            .sum::<f64>()
            / per_category.len() as f64;
        overall.insert("accuracy_macro".into(), macro_acc);
    }

    Ok(EvalReport {
        run_id: run.run_id.clone(),
        subject_id: run.subject_id.clone(),
        overall,
        per_category,
        records,
        missing,
    })
}
