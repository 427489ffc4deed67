//! The masking campaign: sample a mask, draw a stimulus batch, query the
//! external predictions provider, and score per category. The neural
//! model itself lives behind the provider contract.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Deserialize;

use crate::dataset::{QaPair, QuestionCategory};
use crate::error::{Error, Result};
use crate::metrics::exact_match_accuracy;
use crate::util::derive_rng;

use super::ledger::{LedgerMeta, MaskTrial, TrialLedger};
use super::mask::{sample_mask, MaskVector};

/// External predictions source: given an inclusion mask and a stimulus
/// list, produce an answer per question id.
pub trait PredictionsProvider: Sync {
    fn predict(&self, mask: &MaskVector, stimuli: &[String]) -> Result<BTreeMap<String, String>>;
}

#[derive(Debug, Clone)]
pub struct CampaignParams {
    pub clusters: usize,
    pub n_trials: usize,
    pub n_stimuli: usize,
    pub density: f64,
    pub seed: u64,
    pub subject: String,
    /// When set, every trial scores the same seeded stimulus subset
    /// instead of resampling per trial.
    pub fixed_stimuli: bool,
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub trial_id: u64,
    pub message: String,
}

pub struct CampaignOutcome {
    pub ledger: TrialLedger,
    pub failures: Vec<TrialFailure>,
}

/// Run `n_trials` masking trials. Trials run in parallel; RNG streams are
/// derived per trial so the ledger is independent of scheduling. Failed
/// provider calls are dropped and logged, never imputed.
pub fn run_masking_campaign(
    dataset: &[QaPair],
    provider: &dyn PredictionsProvider,
    params: &CampaignParams,
) -> Result<CampaignOutcome> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot run a campaign on an empty dataset".into()));
    }
    let mut image_ids: Vec<&str> = dataset
        .iter()
        .map(|p| p.image_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    image_ids.sort_unstable();
    let n_stimuli = params.n_stimuli.min(image_ids.len());
    let categories: BTreeSet<QuestionCategory> = dataset.iter().map(|p| p.category).collect();
    let by_image: BTreeMap<&str, Vec<&QaPair>> = {
        let mut m: BTreeMap<&str, Vec<&QaPair>> = BTreeMap::new();
        for p in dataset {
            m.entry(p.image_id.as_str()).or_default().push(p);
        }
        m
    };

    let fixed_subset: Option<Vec<String>> = params.fixed_stimuli.then(|| {
        let mut rng = derive_rng(params.seed, "stimuli/fixed");
        let mut pool = image_ids.clone();
        pool.shuffle(&mut rng);
        pool.truncate(n_stimuli);
        pool.sort_unstable();
        pool.into_iter().map(String::from).collect()
    });

    let results: Vec<std::result::Result<MaskTrial, TrialFailure>> = (0..params.n_trials as u64)
        .into_par_iter()
        .map(|trial_id| {
            let mut rng = derive_rng(params.seed, &format!("trial/{trial_id}"));
            let mask = sample_mask(&mut rng, params.clusters, params.density)
                .map_err(|e| TrialFailure {
                    trial_id,
                    message: e.to_string(),
                })?;
            let stimuli: Vec<String> = match &fixed_subset {
                Some(fixed) => fixed.clone(),
                None => {
                    let mut pool = image_ids.clone();
                    pool.shuffle(&mut rng);
                    pool.truncate(n_stimuli);
                    pool.sort_unstable();
                    pool.into_iter().map(String::from).collect()
                }
            };
            let predictions =
                provider
                    .predict(&mask, &stimuli)
                    .map_err(|e| TrialFailure {
                        trial_id,
                        message: e.to_string(),
                    })?;
            let questions: Vec<&QaPair> = stimuli
                .iter()
                .flat_map(|id| by_image.get(id.as_str()).into_iter().flatten().copied())
                .collect();
            let scores = score_by_category(&questions, &predictions, &categories);
            Ok(MaskTrial::new(trial_id, &mask, scores))
        })
        .collect();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(trial) => trials.push(trial),
            Err(failure) => failures.push(failure),
        }
    }
    trials.sort_by_key(|t| t.trial_id);

    let ledger = TrialLedger {
        meta: LedgerMeta {
            seed: params.seed,
            density: params.density,
            n_stimuli,
            subject: params.subject.clone(),
            n_attempted: params.n_trials,
            n_completed: trials.len(),
        },
        trials,
    };
    ledger.check()?;
    Ok(CampaignOutcome { ledger, failures })
}

/// Per-category exact-match accuracy over the batch. Categories with no
/// questions in the batch score 0; missing predictions score 0.
fn score_by_category(
    questions: &[&QaPair],
    predictions: &BTreeMap<String, String>,
    categories: &BTreeSet<QuestionCategory>,
) -> BTreeMap<QuestionCategory, f64> {
    let mut sums: BTreeMap<QuestionCategory, (f64, usize)> = BTreeMap::new();
    for q in questions {
        let score = predictions
            .get(&q.question_id)
            .map(|p| exact_match_accuracy(p, &q.answer))
            .unwrap_or(0.0);
        let entry = sums.entry(q.category).or_insert((0.0, 0));
        entry.0 += score;
        entry.1 += 1;
    }
    categories
        .iter()
        .map(|cat| {
            let score = sums
                .get(cat)
                .map(|(sum, n)| sum / *n as f64)
                .unwrap_or(0.0);
            (*cat, score)
        })
        .collect()
}

static EXEC_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Provider backed by an external executable, invoked as
/// `command <mask-file> <stimuli-file> <output-file>`. The mask file holds
/// the 0/1 bit string; the stimulus file one image id per line; the output
/// must be JSONL records {question_id, prediction}.
pub struct ExecProvider {
    pub command: String,
}

impl PredictionsProvider for ExecProvider {
    fn predict(&self, mask: &MaskVector, stimuli: &[String]) -> Result<BTreeMap<String, String>> {
        let id = EXEC_COUNTER.fetch_add(1, Ordering::SeqCst);
        let dir = std::env::temp_dir().join(format!(
            "vqakit-provider-{}-{id}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mask_path = dir.join("mask.txt");
        let stimuli_path = dir.join("stimuli.txt");
        let out_path = dir.join("predictions.jsonl");
        std::fs::write(&mask_path, mask.to_bit_string()).map_err(|e| Error::io(&mask_path, e))?;
        {
            let mut f =
                std::fs::File::create(&stimuli_path).map_err(|e| Error::io(&stimuli_path, e))?;
            for s in stimuli {
                writeln!(f, "{s}").map_err(|e| Error::io(&stimuli_path, e))?;
            }
        }
        let status = std::process::Command::new(&self.command)
            .arg(&mask_path)
            .arg(&stimuli_path)
            .arg(&out_path)
            .status()
            .map_err(|e| Error::Provider(format!("spawn {}: {e}", self.command)))?;
        if !status.success() {
            let _ = std::fs::remove_dir_all(&dir);
            return Err(Error::Provider(format!(
                "provider exited with {status}"
            )));
        }
        let out = read_prediction_file(&out_path);
        let _ = std::fs::remove_dir_all(&dir);
        out
    }
}

fn read_prediction_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    #[derive(Deserialize)]
    struct Line {
        question_id: String,
        prediction: String,
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let parsed: Line = serde_json::from_str(line)
            .map_err(|e| Error::Provider(format!("provider output: {e}")))?;
        out.insert(parsed.question_id, parsed.prediction);
    }
    Ok(out)
}

/// Provider behind an HTTP endpoint: POST {mask, stimuli} and expect
/// {"predictions": {question_id: answer}}.
pub struct HttpProvider {
    pub endpoint: String,
    pub client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: String, timeout_secs: u64) -> Result<HttpProvider> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(HttpProvider { endpoint, client })
    }
}

impl PredictionsProvider for HttpProvider {
    fn predict(&self, mask: &MaskVector, stimuli: &[String]) -> Result<BTreeMap<String, String>> {
        #[derive(Deserialize)]
        struct Reply {
            predictions: BTreeMap<String, String>,
        }
        let body = serde_json::json!({
            "mask": mask.to_bit_string(),
            "stimuli": stimuli,
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .map_err(|e| Error::Provider(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(Error::Provider(format!("http {}", resp.status())));
        }
        let reply: Reply = resp.json().map_err(|e| Error::Provider(e.to_string()))?;
        Ok(reply.predictions)
    }
}
