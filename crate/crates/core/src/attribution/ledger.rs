//! Masking-trial ledger: trial records, file format, and the design
//! matrices for the contribution regression.

use std::collections::BTreeMap;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::QuestionCategory;
use crate::error::{Error, Result};

use super::mask::MaskVector;

/// One masking trial: the inclusion vector and the per-category accuracy
/// measured on that trial's stimulus batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskTrial {
    pub trial_id: u64,
    pub mask: String,
    pub scores: BTreeMap<QuestionCategory, f64>,
}

impl MaskTrial {
    pub fn new(trial_id: u64, mask: &MaskVector, scores: BTreeMap<QuestionCategory, f64>) -> Self {
        MaskTrial {
            trial_id,
            mask: mask.to_bit_string(),
            scores,
        }
    }

    pub fn mask_vector(&self) -> Result<MaskVector> {
        MaskVector::from_bit_string(&self.mask)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerMeta {
    pub seed: u64,
    pub density: f64,
    pub n_stimuli: usize,
    pub subject: String,
    pub n_attempted: usize,
    pub n_completed: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialLedger {
    pub meta: LedgerMeta,
    pub trials: Vec<MaskTrial>,
}

impl TrialLedger {
    /// Structural invariants: declared count, uniform mask width, scores
    /// in [0,1], identical category sets across trials.
    pub fn check(&self) -> Result<()> {
        if self.trials.len() != self.meta.n_completed {
            return Err(Error::Data(format!(
                "ledger declares {} completed trials but holds {}",
                self.meta.n_completed,
                self.trials.len()
            )));
        }
        let Some(first) = self.trials.first() else {
            return Ok(());
        };
        let width = first.mask.len();
        let categories: Vec<QuestionCategory> = first.scores.keys().copied().collect();
        for trial in &self.trials {
            if trial.mask.len() != width {
                return Err(Error::Data(format!(
                    "trial {} mask width {} != {width}",
                    trial.trial_id,
                    trial.mask.len()
                )));
            }
            let cats: Vec<QuestionCategory> = trial.scores.keys().copied().collect();
            if cats != categories {
                return Err(Error::Data(format!(
                    "trial {} has a different category set",
                    trial.trial_id
                )));
            }
            for (cat, score) in &trial.scores {
                if !(0.0..=1.0).contains(score) {
                    return Err(Error::Data(format!(
                        "trial {} score for {cat} out of [0,1]: {score}",
                        trial.trial_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// File format: first line is the metadata record, then one trial per
    /// line.
    pub fn write<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::json!({"meta": self.meta});
        writeln!(w, "{meta}").map_err(|e| Error::io("<stream>", e))?;
        for trial in &self.trials {
            let line = serde_json::to_string(trial).map_err(|e| Error::Data(e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| Error::io("<stream>", e))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<TrialLedger> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty ledger file".into()))?
            .map_err(|e| Error::io("<stream>", e))?;
        #[derive(Deserialize)]
        struct Header {
            meta: LedgerMeta,
        }
        let header: Header = serde_json::from_str(&header)
            .map_err(|e| Error::Data(format!("ledger header: {e}")))?;
        let mut trials = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<stream>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let trial: MaskTrial = serde_json::from_str(&line).map_err(|e| Error::Record {
                line: idx + 2,
                message: e.to_string(),
            })?;
            trials.push(trial);
        }
        let ledger = TrialLedger {
            meta: header.meta,
            trials,
        };
        ledger.check()?;
        Ok(ledger)
    }
}

/// Trial-order design matrix of mask bits and per-category score matrix.
pub fn assemble_design(
    ledger: &TrialLedger,
) -> Result<(DMatrix<f64>, BTreeMap<QuestionCategory, DVector<f64>>)> {
    if ledger.trials.is_empty() {
        return Err(Error::Data("ledger has no trials".into()));
    }
    ledger.check()?;
    let n = ledger.trials.len();
    let k = ledger.trials[0].mask.len();
    let mut x = DMatrix::zeros(n, k);
    for (i, trial) in ledger.trials.iter().enumerate() {
        let mask = trial.mask_vector()?;
        for (j, &bit) in mask.bits().iter().enumerate() {
            x[(i, j)] = if bit { 1.0 } else { 0.0 };
        }
    }
    let mut y = BTreeMap::new();
    for cat in ledger.trials[0].scores.keys() {
        let v = DVector::from_fn(n, |i, _| ledger.trials[i].scores[cat]);
        y.insert(*cat, v);
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(id: u64, mask: &str, score: f64) -> MaskTrial {
        let mut scores = BTreeMap::new();
        scores.insert(QuestionCategory::Counting, score);
        scores.insert(QuestionCategory::Scene, 1.0 - score);
        MaskTrial {
            trial_id: id,
            mask: mask.into(),
            scores,
        }
    }

    fn ledger(trials: Vec<MaskTrial>) -> TrialLedger {
        let meta = LedgerMeta {
            seed: 1,
            density: 0.5,
            n_stimuli: 3,
            subject: "1".into(),
            n_attempted: trials.len(),
            n_completed: trials.len(),
        };
        TrialLedger { meta, trials }
    }

    #[test]
    fn single_trial_design_shape() {
        let l = ledger(vec![trial(0, "1010", 0.5)]);
        let (x, y) = assemble_design(&l).unwrap();
        assert_eq!(x.shape(), (1, 4));
        assert_eq!(y.len(), 2);
        assert_eq!(x[(0, 0)], 1.0);
        assert_eq!(x[(0, 1)], 0.0);
    }

    #[test]
    fn row_order_follows_trial_order() {
        let l1 = ledger(vec![trial(0, "10", 0.2), trial(1, "01", 0.8)]);
        let l2 = ledger(vec![trial(1, "01", 0.8), trial(0, "10", 0.2)]);
        let (x1, _) = assemble_design(&l1).unwrap();
        let (x2, _) = assemble_design(&l2).unwrap();
        assert_eq!(x1.row(0), x2.row(1));
    }

    #[test]
    fn inconsistent_category_sets_rejected() {
        let mut t2 = trial(1, "10", 0.5);
        t2.scores.remove(&QuestionCategory::Scene);
        let l = ledger(vec![trial(0, "10", 0.5), t2]);
        assert!(assemble_design(&l).is_err());
    }

    #[test]
    fn ledger_file_round_trips() {
        let l = ledger(vec![trial(0, "1010", 0.25), trial(1, "0110", 0.75)]);
        let mut buf = Vec::new();
        l.write(&mut buf).unwrap();
        let back = TrialLedger::read(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn out_of_range_scores_rejected() {
        let l = ledger(vec![trial(0, "10", 1.5)]);
        assert!(l.check().is_err());
    }
}
