//! Cross-subject aggregation and paired bootstrap significance testing.

pub mod render;

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};

/// Mean and sample standard deviation across subjects.
///
/// The std uses the n-1 denominator and is absent for a single subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub std: Option<f64>,
    pub n: usize,
}

impl Aggregate {
    /// "73.78 ± 0.92"-style cell, two decimals. Single subject renders the
    /// bare mean.
    pub fn cell(&self) -> String {
        match self.std {
            Some(s) => format!("{:.2} ± {:.2}", self.mean, s),
            None => format!("{:.2}", self.mean),
        }
    }
}

/// Aggregate per-subject scalar scores into mean ± sample std.
pub fn aggregate_subjects(scores: &BTreeMap<String, f64>) -> Result<Aggregate> {
    if scores.is_empty() {
        return Err(Error::Data("aggregate_subjects: empty subject set".into()));
    }
    for (subject, v) in scores {
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "aggregate_subjects: non-finite score for subject {subject}"
            )));
        }
    }
    let n = scores.len();
    let mean = scores.values().sum::<f64>() / n as f64;
    let std = if n >= 2 {
        let ss = scores.values().map(|v| (v - mean).powi(2)).sum::<f64>();
        Some((ss / (n - 1) as f64).sqrt())
    } else {
        None
    };
    Ok(Aggregate { mean, std, n })
}

/// Two per-question score sequences aligned by question id. `a` is the
/// candidate system, `b` the baseline.
#[derive(Debug, Clone)]
pub struct PairedSamples {
    pub keys: Vec<String>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PairedSamples {
    pub fn from_aligned(
        a: &BTreeMap<String, f64>,
        b: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if a.len() != b.len() || a.keys().ne(b.keys()) {
            return Err(Error::Data(
                "paired samples: question ids do not align".into(),
            ));
        }
        if a.is_empty() {
            return Err(Error::Data("paired samples: empty".into()));
        }
        Ok(Self {
            keys: a.keys().cloned().collect(),
            a: a.values().copied().collect(),
            b: b.values().copied().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// One-sided paired bootstrap p-value for "candidate is no better than
/// baseline": resample question indices with replacement `n_boot` times and
/// count resamples where mean(A*) < mean(B*) (exact ties count half, so two
/// identical systems land at p ~= 0.5), with add-one smoothing
/// (count + 1) / (n_boot + 1).
pub fn paired_bootstrap<R: Rng>(p: &PairedSamples, n_boot: usize, rng: &mut R) -> f64 {
    let n = p.len();
    let mut count = 0.0f64;
    for _ in 0..n_boot {
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            sum_a += p.a[i];
            sum_b += p.b[i];
        }
        if sum_a < sum_b {
            count += 1.0;
        } else if sum_a == sum_b {
            count += 0.5;
        }
    }
    (count + 1.0) / (n_boot + 1) as f64
}

pub const DEFAULT_N_BOOT: usize = 10_000;

/// Standard deviation of the bootstrap distribution of the mean.
pub fn bootstrap_std<R: Rng>(scores: &[f64], n_boot: usize, rng: &mut R) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::Data(
            "bootstrap_std: need at least 2 records".into(),
        ));
    }
    if n_boot < 100 {
        return Err(Error::Config(
            "bootstrap_std: n_boot must be >= 100".into(),
        ));
    }
    let n = scores.len();
    let mut means = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += scores[rng.gen_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    let grand = means.iter().sum::<f64>() / n_boot as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / n_boot as f64;
    Ok(var.sqrt())
}
