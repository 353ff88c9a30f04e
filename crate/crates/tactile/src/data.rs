//! Tap segments, class labels and systematic where/what dataset grids.
//!
//! A dataset is a grid of discrete taps. Each tap is a matrix of sensor
//! dimensions by time samples, labelled with a `where' location class and a
//! `what' identity class. Classes carry both a 1-based grid index and the
//! physical value (mm or degrees) so classifiers work on indices while
//! errors are reported in physical units.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TactileError};

/// Period used for circular `what' classes (orientation in degrees).
pub const CIRCULAR_PERIOD: f64 = 360.0;

/// A (where, what) class label: 1-based grid indices plus physical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub loc_index: usize,
    pub id_index: usize,
    pub loc_value: f64,
    pub id_value: f64,
}

impl ClassLabel {
    /// Lexicographic (loc_index, id_index) key used for deterministic tie
    /// breaking throughout the pipeline.
    pub fn key(&self) -> (usize, usize) {
        (self.loc_index, self.id_index)
    }
}

/// One tap: N_dims rows of deflection time series, N_samples columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileSegment {
    pub samples: Array2<f64>,
    pub label: ClassLabel,
}

impl TactileSegment {
    pub fn n_dims(&self) -> usize {
        self.samples.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }
}

/// Units, ranges and increments for both class axes, plus the sensor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub sensor: String,
    pub loc_unit: String,
    pub id_unit: String,
    pub loc_range: (f64, f64),
    pub id_range: (f64, f64),
    pub loc_increment: f64,
    pub id_increment: f64,
}

/// The full systematic collection of segments over N_id x N_loc classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetGrid {
    pub segments: Vec<TactileSegment>,
    pub n_id: usize,
    pub n_loc: usize,
    pub n_dims: usize,
    pub nominal_samples: usize,
    /// Physical spacing between adjacent identity classes (equals
    /// `meta.id_increment`; kept separately because sensitivity
    /// normalisation depends on it).
    pub what_increment: f64,
    /// True when identity classes wrap (orientation 0..360 degrees).
    pub circular_what: bool,
    pub meta: GridMeta,
}

impl DatasetGrid {
    pub fn n_classes(&self) -> usize {
        self.n_id * self.n_loc
    }

    /// Physical difference between two `what' values, wrap-aware when the
    /// grid is circular.
    pub fn what_diff(&self, a: f64, b: f64) -> f64 {
        if self.circular_what {
            circular_diff(a, b, CIRCULAR_PERIOD)
        } else {
            (a - b).abs()
        }
    }
}

/// Row-major matrix wrapper with a stable JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Array2Ser {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Array2Ser {
    pub fn from_array(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().cloned().collect(),
        }
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone()).unwrap()
    }
}

/// Minimal circular distance between two values on a ring of `period`.
pub fn circular_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).abs() % period;
    d.min(period - d)
}

/// Outcome of [`filter_abnormal_taps`]: which segments were dropped and why.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    /// Indices (into the input grid) of dropped segments.
    pub dropped: Vec<usize>,
    /// Set when two sample counts were equally frequent; holds the counts
    /// that tied (the larger one was kept).
    pub ambiguous_mode: Option<Vec<usize>>,
}

/// Drop taps whose time-sample count differs from the modal count of the
/// grid, along with any tap containing non-finite values. The surviving
/// grid is rectangular: every segment has `nominal_samples` columns.
pub fn filter_abnormal_taps(grid: &DatasetGrid) -> Result<(DatasetGrid, FilterReport)> {
    if grid.segments.is_empty() {
        return Err(TactileError::EmptyDataset);
    }

    let mut counts: Vec<(usize, usize)> = Vec::new(); // (sample_count, frequency)
    for seg in &grid.segments {
        let c = seg.sample_count();
        match counts.iter_mut().find(|(sc, _)| *sc == c) {
            Some((_, f)) => *f += 1,
            None => counts.push((c, 1)),
        }
    }
    let max_freq = counts.iter().map(|&(_, f)| f).max().unwrap();
    let mut modal: Vec<usize> = counts
        .iter()
        .filter(|&&(_, f)| f == max_freq)
        .map(|&(sc, _)| sc)
        .collect();
    modal.sort_unstable();
    // Tie rule: keep the larger count.
    let mode = *modal.last().unwrap();

    let mut report = FilterReport::default();
    if modal.len() > 1 {
        report.ambiguous_mode = Some(modal);
    }

    let mut kept = Vec::with_capacity(grid.segments.len());
    for (i, seg) in grid.segments.iter().enumerate() {
        if seg.sample_count() == mode && seg.is_finite() {
            kept.push(seg.clone());
        } else {
            report.dropped.push(i);
        }
    }

    let mut out = grid.clone();
    out.segments = kept;
    out.nominal_samples = mode;
    Ok((out, report))
}

/// Subtract the mean of each sensor-dimension time series within the tap.
pub fn center_segment(segment: &TactileSegment) -> Result<TactileSegment> {
    if !segment.is_finite() {
        return Err(TactileError::InvalidSample(format!(
            "non-finite value in segment (loc {}, id {})",
            segment.label.loc_index, segment.label.id_index
        )));
    }
    let mut samples = segment.samples.clone();
    let n = samples.ncols() as f64;
    for mut row in samples.rows_mut() {
        let mean = row.sum() / n;
        row.mapv_inplace(|v| v - mean);
    }
    Ok(TactileSegment {
        samples,
        label: segment.label,
    })
}

/// Center every segment of a grid (preprocessing step before PCA).
pub fn center_grid(grid: &DatasetGrid) -> Result<DatasetGrid> {
    let mut out = grid.clone();
    out.segments = grid
        .segments
        .iter()
        .map(center_segment)
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn label(l: usize, i: usize) -> ClassLabel {
        ClassLabel {
            loc_index: l,
            id_index: i,
            loc_value: l as f64,
            id_value: i as f64,
        }
    }

    fn seg(cols: usize, fill: f64) -> TactileSegment {
        TactileSegment {
            samples: Array2::from_elem((2, cols), fill),
            label: label(1, 1),
        }
    }

    fn grid_of(segments: Vec<TactileSegment>) -> DatasetGrid {
        DatasetGrid {
            segments,
            n_id: 1,
            n_loc: 1,
            n_dims: 2,
            nominal_samples: 0,
            what_increment: 1.0,
            circular_what: false,
            meta: GridMeta {
                sensor: "test".into(),
                loc_unit: "mm".into(),
                id_unit: "mm".into(),
                loc_range: (1.0, 1.0),
                id_range: (1.0, 1.0),
                loc_increment: 1.0,
                id_increment: 1.0,
            },
        }
    }

    #[test]
    fn filter_keeps_modal_count() {
        // 99 segments of 46 samples plus one 12-sample outlier.
        let mut segs: Vec<_> = (0..99).map(|_| seg(46, 1.0)).collect();
        segs.insert(40, seg(12, 1.0));
        let grid = grid_of(segs);
        let (out, report) = filter_abnormal_taps(&grid).unwrap();
        assert_eq!(out.segments.len(), 99);
        assert_eq!(out.nominal_samples, 46);
        assert_eq!(report.dropped, vec![40]);
        assert!(report.ambiguous_mode.is_none());
    }

    #[test]
    fn filter_identity_when_all_counts_equal() {
        let grid = grid_of(vec![seg(10, 1.0), seg(10, 2.0), seg(10, 3.0)]);
        let (out, report) = filter_abnormal_taps(&grid).unwrap();
        assert_eq!(out.segments, grid.segments);
        assert_eq!(out.nominal_samples, 10);
        assert!(report.dropped.is_empty());
    }

    #[test]
    fn filter_empty_grid_errors() {
        let grid = grid_of(vec![]);
        assert!(matches!(
            filter_abnormal_taps(&grid),
            Err(TactileError::EmptyDataset)
        ));
    }

    #[test]
    fn filter_tie_picks_larger_count() {
        let grid = grid_of(vec![seg(5, 1.0), seg(8, 1.0)]);
        let (out, report) = filter_abnormal_taps(&grid).unwrap();
        assert_eq!(out.nominal_samples, 8);
        assert_eq!(report.dropped, vec![0]);
        assert_eq!(report.ambiguous_mode, Some(vec![5, 8]));
    }

    #[test]
    fn filter_drops_non_finite_modal_segment() {
        let mut bad = seg(10, 1.0);
        bad.samples[[0, 3]] = f64::NAN;
        let grid = grid_of(vec![seg(10, 1.0), bad, seg(10, 2.0)]);
        let (out, report) = filter_abnormal_taps(&grid).unwrap();
        assert_eq!(out.segments.len(), 2);
        assert_eq!(report.dropped, vec![1]);
    }

    #[test]
    fn center_subtracts_row_means() {
        let s = TactileSegment {
            samples: array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]],
            label: label(1, 1),
        };
        let c = center_segment(&s).unwrap();
        assert_eq!(c.samples, array![[-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        assert_eq!(c.label, s.label);
    }

    #[test]
    fn center_rejects_non_finite() {
        let s = TactileSegment {
            samples: array![[1.0, f64::INFINITY]],
            label: label(1, 1),
        };
        assert!(matches!(
            center_segment(&s),
            Err(TactileError::InvalidSample(_))
        ));
    }

    #[test]
    fn center_is_idempotent() {
        let s = TactileSegment {
            samples: array![[0.3, -1.7, 2.9, 0.05], [10.0, 11.5, 9.25, -3.0]],
            label: label(2, 3),
        };
        let once = center_segment(&s).unwrap();
        let twice = center_segment(&once).unwrap();
        for (a, b) in once.samples.iter().zip(twice.samples.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_diff_wraps() {
        assert_eq!(circular_diff(0.0, 348.0, 360.0), 12.0);
        assert_eq!(circular_diff(348.0, 0.0, 360.0), 12.0);
        assert_eq!(circular_diff(10.0, 20.0, 360.0), 10.0);
        assert_eq!(circular_diff(0.0, 360.0, 360.0), 0.0);
    }
}
