//! Evaluation of prediction records: zero-intercept regression gradients,
//! wrap-aware RMSE, per-class percentile summaries and per-location error
//! curves. All errors are in physical units; circular `what' classes use
//! the minimal wrap distance.

use serde::{Deserialize, Serialize};

use crate::data::{circular_diff, CIRCULAR_PERIOD};
use crate::error::{Result, TactileError};

/// Which classifier produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Knn,
    Prob,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Knn => write!(f, "knn"),
            Method::Prob => write!(f, "prob"),
        }
    }
}

/// One classified tap: true and predicted labels plus the method tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub true_loc_index: usize,
    pub true_id_index: usize,
    pub true_loc_value: f64,
    pub true_id_value: f64,
    pub pred_loc_index: usize,
    pub pred_id_index: usize,
    pub pred_loc_value: f64,
    pub pred_id_value: f64,
    pub method: Method,
}

/// Axis selector for evaluation quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Loc,
    Id,
}

impl PredictionRecord {
    fn actual(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Loc => self.true_loc_value,
            Axis::Id => self.true_id_value,
        }
    }

    fn predicted(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Loc => self.pred_loc_value,
            Axis::Id => self.pred_id_value,
        }
    }
}

/// Gradient of the zero-intercept linear fit of predicted vs actual
/// physical values: sum(pred * actual) / sum(actual^2).
pub fn regression_gradient(records: &[PredictionRecord], axis: Axis) -> Result<f64> {
    if records.is_empty() {
        return Err(TactileError::EmptyDataset);
    }
    let denom: f64 = records.iter().map(|r| r.actual(axis).powi(2)).sum();
    if denom == 0.0 {
        return Err(TactileError::AllZeroActuals);
    }
    let num: f64 = records
        .iter()
        .map(|r| r.predicted(axis) * r.actual(axis))
        .sum();
    Ok(num / denom)
}

fn what_error(r: &PredictionRecord, circular_what: bool) -> f64 {
    if circular_what {
        circular_diff(r.pred_id_value, r.true_id_value, CIRCULAR_PERIOD)
    } else {
        (r.pred_id_value - r.true_id_value).abs()
    }
}

/// Root-mean-square `what' value error in physical units.
pub fn what_rmse(records: &[PredictionRecord], circular_what: bool) -> Result<f64> {
    if records.is_empty() {
        return Err(TactileError::EmptyDataset);
    }
    let mse: f64 = records
        .iter()
        .map(|r| what_error(r, circular_what).powi(2))
        .sum::<f64>()
        / records.len() as f64;
    Ok(mse.sqrt())
}

/// Median / 25th / 75th percentile of the predictions in one actual class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub class_index: usize,
    pub class_value: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

/// Percentile summary of predicted values grouped by the actual class on
/// `axis` (the data behind predicted-vs-actual plots).
pub fn percentile_summary(records: &[PredictionRecord], axis: Axis) -> Result<Vec<PercentileRow>> {
    if records.is_empty() {
        return Err(TactileError::EmptyDataset);
    }
    let mut classes: Vec<(usize, f64)> = Vec::new();
    for r in records {
        let key = match axis {
            Axis::Loc => (r.true_loc_index, r.true_loc_value),
            Axis::Id => (r.true_id_index, r.true_id_value),
        };
        if !classes.contains(&key) {
            classes.push(key);
        }
    }
    classes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut out = Vec::with_capacity(classes.len());
    for (idx, value) in classes {
        let mut preds: Vec<f64> = records
            .iter()
            .filter(|r| match axis {
                Axis::Loc => r.true_loc_index == idx,
                Axis::Id => r.true_id_index == idx,
            })
            .map(|r| r.predicted(axis))
            .collect();
        if preds.is_empty() {
            return Err(TactileError::EmptyGroup(format!("class {idx}")));
        }
        preds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(PercentileRow {
            class_index: idx,
            class_value: value,
            p25: percentile(&preds, 25.0),
            median: percentile(&preds, 50.0),
            p75: percentile(&preds, 75.0),
        });
    }
    Ok(out)
}

/// Linear interpolation between order statistics; `sorted` must be sorted.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean absolute `what' error per location, ordered by loc_index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationError {
    pub loc_index: usize,
    pub loc_value: f64,
    pub mean_abs_what_error: f64,
}

pub fn error_by_location(
    records: &[PredictionRecord],
    circular_what: bool,
) -> Vec<LocationError> {
    let mut locs: Vec<(usize, f64)> = Vec::new();
    for r in records {
        let key = (r.true_loc_index, r.true_loc_value);
        if !locs.contains(&key) {
            locs.push(key);
        }
    }
    locs.sort_by(|a, b| a.0.cmp(&b.0));
    locs.into_iter()
        .map(|(idx, value)| {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.true_loc_index == idx)
                .map(|r| what_error(r, circular_what))
                .collect();
            LocationError {
                loc_index: idx,
                loc_value: value,
                mean_abs_what_error: errs.iter().sum::<f64>() / errs.len() as f64,
            }
        })
        .collect()
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(TactileError::BadParameter(
            "spearman needs two equal-length series of at least 2 points".into(),
        ));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..ra.len() {
        num += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean).powi(2);
        vb += (rb[i] - mean).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(TactileError::BadParameter(
            "spearman undefined for a constant series".into(),
        ));
    }
    Ok(num / (va * vb).sqrt())
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}
