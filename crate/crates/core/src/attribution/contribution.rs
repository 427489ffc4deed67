//! Per-category marginal-contribution estimates: one ridge fit per
//! category over the shared trial design, plus the voxelwise export that
//! feeds external surface plotting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::QuestionCategory;
use crate::error::{Error, Result};

use super::ledger::{assemble_design, TrialLedger};
use super::ridge::ridge_fit;

pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryContribution {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Cluster coefficients per category. Bit 1 = included, so a positive
/// coefficient reads as a positive contribution to decoding accuracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContributionMap {
    pub lambda: f64,
    pub clusters: usize,
    pub categories: BTreeMap<QuestionCategory, CategoryContribution>,
}

pub fn contribution_map(ledger: &TrialLedger, lambda: f64) -> Result<ContributionMap> {
    let (x, targets) = assemble_design(ledger)?;
    let clusters = x.ncols();
    let mut categories = BTreeMap::new();
    for (cat, y) in targets {
        let fit = ridge_fit(&x, &y, lambda, true)?;
        let coefficients: Vec<f64> = fit.coefficients.iter().copied().collect();
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Data(format!("non-finite coefficients for {cat}")));
        }
        categories.insert(
            cat,
            CategoryContribution {
                coefficients,
                intercept: fit.intercept,
            },
        );
    }
    Ok(ContributionMap {
        lambda,
        clusters,
        categories,
    })
}

/// Hold-out validation sweep over a log grid of lambda values; returns
/// the lambda minimizing mean squared error across categories.
pub fn sweep_lambda(ledger: &TrialLedger, grid: &[f64], holdout: f64, seed: u64) -> Result<f64> {
    use rand::seq::SliceRandom;

    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let (x, targets) = assemble_design(ledger)?;
    let n = x.nrows();
    let n_holdout = ((n as f64) * holdout).round() as usize;
    if n_holdout == 0 || n_holdout >= n {
        return Err(Error::Config(format!(
            "holdout fraction {holdout} leaves no train or no validation rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::util::derive_rng(seed, "lambda-sweep"));
    let (val_idx, train_idx) = order.split_at(n_holdout);

    let x_train = x.select_rows(train_idx);
    let x_val = x.select_rows(val_idx);

    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in grid {
        let mut mse = 0.0;
        for y in targets.values() {
            let y_train = y.select_rows(train_idx);
            let y_val = y.select_rows(val_idx);
            let fit = ridge_fit(&x_train, &y_train, lambda, true)?;
            let pred = (&x_val * &fit.coefficients).add_scalar(fit.intercept);
            mse += (pred - y_val).norm_squared() / val_idx.len() as f64;
        }
        if mse < best.0 {
            best = (mse, lambda);
        }
    }
    Ok(best.1)
}

/// Expand cluster coefficients to voxels: every voxel carries its
/// cluster's coefficient. Returns per-category rows (voxel_id, value).
pub fn export_contributions(
    map: &ContributionMap,
    cluster_table: &BTreeMap<usize, Vec<String>>,
) -> Result<BTreeMap<QuestionCategory, Vec<(String, f64)>>> {
    for cluster in 0..map.clusters {
        if !cluster_table.contains_key(&cluster) {
            return Err(Error::Data(format!("cluster {cluster} missing from cluster table")));
        }
    }
    let mut out = BTreeMap::new();
    for (cat, contribution) in &map.categories {
        let mut rows = Vec::new();
        for cluster in 0..map.clusters {
            let value = contribution.coefficients[cluster];
            for voxel in &cluster_table[&cluster] {
                rows.push((voxel.clone(), value));
            }
        }
        out.insert(*cat, rows);
    }
    Ok(out)
}
