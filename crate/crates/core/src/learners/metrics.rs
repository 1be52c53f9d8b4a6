//! Cross-dataset summary metrics for comparing classifiers.
//!
//! For an accuracy table `y[i][j]` (dataset `i`, model `j`):
//! `P90_j` and `P95_j` are the fractions of datasets where model `j` is within
//! 90% / 95% of the best accuracy, `PMA_j` is the mean of `y_ij / max_j y_ij`,
//! and the Friedman rank is the mean per-dataset rank (1 = best, ties averaged).

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mean: Vec<f64>,
    /// Sample standard deviation over datasets (0 for a single dataset).
    pub std: Vec<f64>,
    pub p90: Vec<f64>,
    pub p95: Vec<f64>,
    pub pma: Vec<f64>,
    pub friedman: Vec<f64>,
}

/// Ranks in descending order of value, 1-based, ties get their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn summarize_metrics(table: &[Vec<f64>]) -> Result<MetricsReport> {
    let models = table.first().map_or(0, Vec::len);
    if table.is_empty() || models == 0 {
        return Err(Error::Empty("accuracy table".into()));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != models {
            return Err(Error::Shape(format!("row {} has {} models, expected {models}", i + 1, row.len())));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParam(format!("accuracy {v} in row {} is outside [0, 1]", i + 1)));
        }
    }
    let n = table.len() as f64;
    let mut r = MetricsReport {
        mean: vec![0.0; models],
        std: vec![0.0; models],
        p90: vec![0.0; models],
        p95: vec![0.0; models],
        pma: vec![0.0; models],
        friedman: vec![0.0; models],
    };
    for row in table {
        let best = row.iter().copied().fold(0.0f64, f64::max);
        let ranks = average_ranks(row);
        for j in 0..models {
            let y = row[j];
            r.mean[j] += y / n;
            r.p90[j] += f64::from(u8::from(y >= 0.9 * best)) / n;
            r.p95[j] += f64::from(u8::from(y >= 0.95 * best)) / n;
            // every model scores 0 on this dataset: all are tied with the best
            r.pma[j] += if best > 0.0 { y / best } else { 1.0 } / n;
            r.friedman[j] += ranks[j] / n;
        }
    }
    if table.len() > 1 {
        for j in 0..models {
            let ss: f64 = table.iter().map(|row| (row[j] - r.mean[j]).powi(2)).sum();
            r.std[j] = (ss / (n - 1.0)).sqrt();
        }
    }
    Ok(r)
}
