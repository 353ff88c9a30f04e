//! Per-datum sensitivity over the PC manifold and the fixation point.
//!
//! Sensitivity of a projected tap is the distance to nearby taps of a
//! different `what' class divided by the physical `what' value difference:
//! how far the manifold moves per unit change in stimulus identity. Points
//! are sorted along the first PC, split into overlapping sections, and each
//! point's distance is the median length of up to five opposite-label
//! neighbour vectors confined to a cone around the shortest one, taking the
//! minimum with the value from the neighbouring section when the point
//! appears in both. The fixation point is the location whose filtered
//! minimum and maximum sensitivities over identities rank highest overall.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{circular_diff, Array2Ser, DatasetGrid, CIRCULAR_PERIOD};
use crate::error::{Result, TactileError};
use crate::pca::PcVector;

/// Tunables of the sectioned neighbour search and the location ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgParams {
    /// Section count b.
    pub sections: usize,
    /// Cone half-angle in radians.
    pub theta_threshold: f64,
    /// Neighbour vectors collected per point.
    pub n_neighbours: usize,
    /// Fraction of a section shared with its neighbour.
    pub overlap_fraction: f64,
    /// Moving-median window (odd) applied over locations before ranking.
    pub filter_window: usize,
}

impl Default for AlgParams {
    fn default() -> Self {
        Self {
            sections: 10,
            theta_threshold: std::f64::consts::PI / 18.0,
            n_neighbours: 5,
            overlap_fraction: 0.5,
            filter_window: 5,
        }
    }
}

impl AlgParams {
    pub fn validate(&self) -> Result<()> {
        if self.sections < 2 {
            return Err(TactileError::BadParameter("sections must be >= 2".into()));
        }
        if !(self.theta_threshold > 0.0 && self.theta_threshold < std::f64::consts::FRAC_PI_2) {
            return Err(TactileError::BadParameter(
                "theta_threshold must lie in (0, pi/2)".into(),
            ));
        }
        if self.n_neighbours == 0 {
            return Err(TactileError::BadParameter(
                "n_neighbours must be >= 1".into(),
            ));
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction < 1.0) {
            return Err(TactileError::BadParameter(
                "overlap_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.filter_window == 0 || self.filter_window % 2 == 0 {
            return Err(TactileError::BadParameter(
                "filter_window must be odd".into(),
            ));
        }
        Ok(())
    }
}

/// Grid shape the manifold was produced from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub n_loc: usize,
    pub n_id: usize,
    pub what_increment: f64,
    pub circular_what: bool,
}

impl From<&DatasetGrid> for GridShape {
    fn from(g: &DatasetGrid) -> Self {
        Self {
            n_loc: g.n_loc,
            n_id: g.n_id,
            what_increment: g.what_increment,
            circular_what: g.circular_what,
        }
    }
}

/// Distance of one point to its opposite-label neighbourhood, with the
/// physical `what' difference of the neighbour realizing the median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDistance {
    pub distance: f64,
    pub what_diff: f64,
}

/// Neighbour-vector distance for every point of one section.
///
/// For each point: vectors to every point with a different `what' label,
/// shortest first; further vectors must lie within `theta_threshold` of the
/// shortest one's direction; up to `n_neighbours` are collected and the
/// (lower) median length is the point's distance.
pub fn compute_distance(
    batch: &[PcVector],
    circular_what: bool,
    params: &AlgParams,
) -> Result<Vec<PointDistance>> {
    params.validate()?;
    let first_id = match batch.first() {
        Some(p) => p.label.id_index,
        None => return Err(TactileError::IndistinguishableBatch),
    };
    if batch.iter().all(|p| p.label.id_index == first_id) {
        return Err(TactileError::IndistinguishableBatch);
    }

    let cos_threshold = params.theta_threshold.cos();
    let mut out = Vec::with_capacity(batch.len());
    for q in batch {
        // (length, what diff, displacement) for every opposite-label point,
        // in batch order so equal lengths resolve deterministically.
        let mut candidates: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        for other in batch {
            if other.label.id_index == q.label.id_index {
                continue;
            }
            let v: Vec<f64> = other
                .components
                .iter()
                .zip(&q.components)
                .map(|(a, b)| a - b)
                .collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dw = if circular_what {
                circular_diff(other.label.id_value, q.label.id_value, CIRCULAR_PERIOD)
            } else {
                (other.label.id_value - q.label.id_value).abs()
            };
            candidates.push((len, dw, v));
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let shortest = &candidates[0];
        let dir: Option<Vec<f64>> = if shortest.0 > 0.0 {
            Some(shortest.2.iter().map(|x| x / shortest.0).collect())
        } else {
            None
        };
        let mut collected: Vec<(f64, f64)> = vec![(shortest.0, shortest.1)];
        for (len, dw, v) in candidates.iter().skip(1) {
            if collected.len() >= params.n_neighbours {
                break;
            }
            let passes = match &dir {
                None => true, // degenerate shortest vector: no cone to apply
                Some(d) => {
                    if *len == 0.0 {
                        true
                    } else {
                        let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                        dot / len > cos_threshold
                    }
                }
            };
            if passes {
                collected.push((*len, *dw));
            }
        }
        // Lower median so a single collected neighbour realizes it.
        let (distance, what_diff) = collected[(collected.len() - 1) / 2];
        out.push(PointDistance {
            distance,
            what_diff,
        });
    }
    Ok(out)
}

/// Per-(location, identity) sensitivity values and the fixation choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMap {
    /// n_loc x n_id raw sensitivities (median over the cell's points).
    pub values: Array2Ser,
    /// `values` scaled by the `what' class increment.
    pub normalized: Array2Ser,
    pub loc_values: Vec<f64>,
    pub id_values: Vec<f64>,
    pub fixation_loc_index: usize,
    pub fixation_loc_value: f64,
    pub per_location: Vec<LocationRank>,
}

/// Filtered extrema and the rank sum behind the fixation choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationRank {
    pub loc_index: usize,
    pub loc_value: f64,
    pub min_filtered: f64,
    pub max_filtered: f64,
    pub rank_sum: usize,
}

/// Sensitivity per grid cell plus the fixation location.
pub fn sensitivity_map(
    manifold: &[PcVector],
    shape: &GridShape,
    params: &AlgParams,
) -> Result<SensitivityMap> {
    params.validate()?;
    if shape.n_id < 2 {
        return Err(TactileError::TooFewWhatClasses(shape.n_id));
    }
    if manifold.is_empty() {
        return Err(TactileError::EmptyDataset);
    }
    for loc in 1..=shape.n_loc {
        for id in 1..=shape.n_id {
            if !manifold
                .iter()
                .any(|p| p.label.loc_index == loc && p.label.id_index == id)
            {
                return Err(TactileError::MissingClass { loc, id });
            }
        }
    }

    // Canonical order: first PC, then the full component vector, then the
    // label, so shuffled input produces identical results.
    let mut sorted: Vec<&PcVector> = manifold.iter().collect();
    sorted.sort_by(|a, b| {
        a.components
            .partial_cmp(&b.components)
            .unwrap()
            .then(a.label.key().cmp(&b.label.key()))
    });

    let n = sorted.len();
    let base = n.div_ceil(params.sections);
    let size = ((base as f64) * (1.0 + params.overlap_fraction)).ceil() as usize;

    // Left-to-right over sections; a point seen twice keeps the smaller
    // distance (Algorithm 2's cross-section minimum).
    let mut best: Vec<Option<PointDistance>> = vec![None; n];
    for s in 0..params.sections {
        let start = s * base;
        if start >= n {
            break;
        }
        let end = (start + size).min(n);
        let batch: Vec<PcVector> = sorted[start..end].iter().map(|p| (*p).clone()).collect();
        // A trailing sliver can hold a single `what' label; its points are
        // covered by the overlapping neighbour, so the section is skipped.
        let first_id = batch[0].label.id_index;
        if batch.iter().all(|p| p.label.id_index == first_id) {
            continue;
        }
        let dists = compute_distance(&batch, shape.circular_what, params)?;
        for (offset, d) in dists.into_iter().enumerate() {
            let idx = start + offset;
            best[idx] = Some(match best[idx] {
                Some(prev) if prev.distance <= d.distance => prev,
                _ => d,
            });
        }
    }

    // Cell values: median sensitivity of the cell's points.
    let mut per_cell: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); shape.n_id]; shape.n_loc];
    let mut loc_values = vec![0.0; shape.n_loc];
    let mut id_values = vec![0.0; shape.n_id];
    for (p, d) in sorted.iter().zip(&best) {
        // A point left uncovered means every section containing it was
        // single-label, i.e. the manifold is locally indistinguishable.
        let d = d.ok_or(TactileError::IndistinguishableBatch)?;
        let s = if d.what_diff > 0.0 {
            d.distance / d.what_diff
        } else {
            0.0
        };
        let (l, i) = (p.label.loc_index - 1, p.label.id_index - 1);
        per_cell[l][i].push(s);
        loc_values[l] = p.label.loc_value;
        id_values[i] = p.label.id_value;
    }
    let mut values = Array2::<f64>::zeros((shape.n_loc, shape.n_id));
    for l in 0..shape.n_loc {
        for i in 0..shape.n_id {
            values[[l, i]] = median(&mut per_cell[l][i]);
        }
    }
    let normalized = &values * shape.what_increment;

    let ranking = fixation_point(&values, params);
    let fixation_loc_index = ranking.0;
    let per_location = ranking
        .1
        .into_iter()
        .enumerate()
        .map(|(l, (mn, mx, rank_sum))| LocationRank {
            loc_index: l + 1,
            loc_value: loc_values[l],
            min_filtered: mn,
            max_filtered: mx,
            rank_sum,
        })
        .collect();

    Ok(SensitivityMap {
        values: Array2Ser::from_array(&values),
        normalized: Array2Ser::from_array(&normalized),
        loc_values: loc_values.clone(),
        id_values,
        fixation_loc_index,
        fixation_loc_value: loc_values[fixation_loc_index - 1],
        per_location,
    })
}

/// Rank locations by their filtered sensitivity extrema.
///
/// Per identity class the map is median-filtered over locations (window
/// truncated at the edges); per location the minimum and maximum over
/// identities are ranked ascending and the location with the largest rank
/// sum wins, lowest index on ties. Returns the 1-based fixation index and
/// per-location (min, max, rank_sum).
pub fn fixation_point(values: &Array2<f64>, params: &AlgParams) -> (usize, Vec<(f64, f64, usize)>) {
    let (n_loc, n_id) = values.dim();
    let half = params.filter_window / 2;

    let mut filtered = Array2::<f64>::zeros((n_loc, n_id));
    for i in 0..n_id {
        for l in 0..n_loc {
            let lo = l.saturating_sub(half);
            let hi = (l + half + 1).min(n_loc);
            let mut window: Vec<f64> = (lo..hi).map(|ll| values[[ll, i]]).collect();
            filtered[[l, i]] = median(&mut window);
        }
    }

    let mut mins = vec![f64::INFINITY; n_loc];
    let mut maxs = vec![f64::NEG_INFINITY; n_loc];
    for l in 0..n_loc {
        for i in 0..n_id {
            mins[l] = mins[l].min(filtered[[l, i]]);
            maxs[l] = maxs[l].max(filtered[[l, i]]);
        }
    }

    let rank = |vals: &[f64], l: usize| 1 + vals.iter().filter(|&&v| v < vals[l]).count();
    let mut stats = Vec::with_capacity(n_loc);
    let mut best = (0usize, 0usize); // (rank_sum, index), index tie -> lowest
    for l in 0..n_loc {
        let rank_sum = rank(&mins, l) + rank(&maxs, l);
        stats.push((mins[l], maxs[l], rank_sum));
        if rank_sum > best.0 {
            best = (rank_sum, l);
        }
    }
    (best.1 + 1, stats)
}

/// Interpolated median; 0 for an empty slice.
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
