//! Class inference over the PC manifold.
//!
//! Two classifiers: a 1-nearest-neighbour exhaustive search and a
//! histogram-likelihood model whose per-class log likelihood is the mean of
//! the per-component log bin probabilities. The `what' decision marginalises
//! the likelihood over locations; a symmetric `where' decision marginalises
//! over identities.

use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::error::{Result, TactileError};
use crate::pca::PcVector;

pub const DEFAULT_N_BINS: usize = 20;
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Training range of each component is expanded by this fraction per side.
const RANGE_EXPANSION: f64 = 0.05;

/// Which label field a classifier predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Loc,
    Id,
}

/// Exhaustive-search nearest-neighbour model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub vectors: Vec<PcVector>,
    pub target: Target,
    /// Recorded for forward compatibility; only k = 1 is implemented.
    pub k: usize,
}

impl KnnModel {
    pub fn new(vectors: Vec<PcVector>, target: Target) -> Result<Self> {
        if vectors.is_empty() {
            return Err(TactileError::EmptyModel);
        }
        let len = vectors[0].components.len();
        if vectors.iter().any(|v| v.components.len() != len) {
            return Err(TactileError::ShapeMismatch(
                "training vectors have mixed lengths".into(),
            ));
        }
        Ok(Self {
            vectors,
            target,
            k: 1,
        })
    }
}

/// Label of the training vector nearest to `p` in Euclidean distance.
/// Ties break towards the lowest (loc_index, id_index) pair.
pub fn knn_predict(model: &KnnModel, p: &PcVector) -> Result<ClassLabel> {
    if model.vectors.is_empty() {
        return Err(TactileError::EmptyModel);
    }
    if p.components.len() != model.vectors[0].components.len() {
        return Err(TactileError::ShapeMismatch(format!(
            "query has {} components, model expects {}",
            p.components.len(),
            model.vectors[0].components.len()
        )));
    }
    let mut best: Option<(f64, (usize, usize), &ClassLabel)> = None;
    for v in &model.vectors {
        let d2: f64 = v
            .components
            .iter()
            .zip(&p.components)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let key = v.label.key();
        let better = match best {
            None => true,
            Some((bd, bk, _)) => d2 < bd || (d2 == bd && key < bk),
        };
        if better {
            best = Some((d2, key, &v.label));
        }
    }
    Ok(*best.unwrap().2)
}

/// Histogram likelihood model: shared uniform bin edges per PC component,
/// smoothed per-class bin probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistModel {
    pub n_loc: usize,
    pub n_id: usize,
    pub n_bins: usize,
    pub epsilon: f64,
    /// (lo, hi) per PC component, training range expanded 5% per side.
    pub ranges: Vec<(f64, f64)>,
    /// One entry per (loc, id) class in loc-major order.
    pub classes: Vec<ClassHist>,
}

/// Smoothed bin probabilities of one class: `probs[r][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHist {
    pub loc_index: usize,
    pub id_index: usize,
    pub loc_value: f64,
    pub id_value: f64,
    pub probs: Vec<Vec<f64>>,
}

impl HistModel {
    pub fn n_reduced(&self) -> usize {
        self.ranges.len()
    }

    pub fn class(&self, loc: usize, id: usize) -> Result<&ClassHist> {
        self.classes
            .iter()
            .find(|c| c.loc_index == loc && c.id_index == id)
            .ok_or(TactileError::UnknownClass { loc, id })
    }
}

/// Values outside the range clamp into the nearest edge bin.
fn bin_of(x: f64, lo: f64, hi: f64, n_bins: usize) -> usize {
    let t = (x - lo) / (hi - lo);
    ((t * n_bins as f64).floor() as isize).clamp(0, n_bins as isize - 1) as usize
}

/// Fit per-class histograms over a labelled PC vector collection covering
/// every (loc, id) pair of an `n_loc` x `n_id` grid.
pub fn hist_fit(
    pcs: &[PcVector],
    n_loc: usize,
    n_id: usize,
    n_bins: usize,
    epsilon: f64,
) -> Result<HistModel> {
    if pcs.is_empty() {
        return Err(TactileError::EmptyModel);
    }
    if n_bins < 2 {
        return Err(TactileError::BadParameter("n_bins must be >= 2".into()));
    }
    if epsilon < 0.0 {
        return Err(TactileError::BadParameter("epsilon must be >= 0".into()));
    }
    let n_reduced = pcs[0].components.len();
    if pcs.iter().any(|p| p.components.len() != n_reduced) {
        return Err(TactileError::ShapeMismatch(
            "training vectors have mixed lengths".into(),
        ));
    }

    let mut ranges = Vec::with_capacity(n_reduced);
    for r in 0..n_reduced {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in pcs {
            lo = lo.min(p.components[r]);
            hi = hi.max(p.components[r]);
        }
        let width = hi - lo;
        // Keep a positive bin width even for a constant component.
        let pad = RANGE_EXPANSION * width + 1e-12;
        ranges.push((lo - pad, hi + pad));
    }

    let mut classes = Vec::with_capacity(n_loc * n_id);
    for loc in 1..=n_loc {
        for id in 1..=n_id {
            let members: Vec<&PcVector> = pcs
                .iter()
                .filter(|p| p.label.loc_index == loc && p.label.id_index == id)
                .collect();
            if members.is_empty() {
                return Err(TactileError::MissingClass { loc, id });
            }
            let count = members.len() as f64;
            let mut probs = Vec::with_capacity(n_reduced);
            for (r, &(lo, hi)) in ranges.iter().enumerate() {
                let mut bins = vec![0.0f64; n_bins];
                for p in &members {
                    bins[bin_of(p.components[r], lo, hi, n_bins)] += 1.0;
                }
                let denom = count + n_bins as f64 * epsilon;
                for b in bins.iter_mut() {
                    *b = (*b + epsilon) / denom;
                }
                probs.push(bins);
            }
            classes.push(ClassHist {
                loc_index: loc,
                id_index: id,
                loc_value: members[0].label.loc_value,
                id_value: members[0].label.id_value,
                probs,
            });
        }
    }

    Ok(HistModel {
        n_loc,
        n_id,
        n_bins,
        epsilon,
        ranges,
        classes,
    })
}

/// Mean over components of the log bin probability of `p` under class
/// (loc, id).
pub fn log_likelihood(model: &HistModel, p: &PcVector, loc: usize, id: usize) -> Result<f64> {
    if p.components.len() != model.n_reduced() {
        return Err(TactileError::ShapeMismatch(format!(
            "query has {} components, model expects {}",
            p.components.len(),
            model.n_reduced()
        )));
    }
    let class = model.class(loc, id)?;
    let n = model.n_reduced() as f64;
    let mut total = 0.0;
    for (r, &(lo, hi)) in model.ranges.iter().enumerate() {
        let b = bin_of(p.components[r], lo, hi, model.n_bins);
        total += class.probs[r][b].ln();
    }
    Ok(total / n)
}

/// Most likely `what' class: argmax over identities of the likelihood
/// summed over locations. Ties break towards the lowest id_index.
pub fn map_what(model: &HistModel, p: &PcVector) -> Result<(usize, f64)> {
    marginal_argmax(model, p, Target::Id)
}

/// Most likely `where' class by the symmetric marginalisation over
/// identities.
pub fn map_where(model: &HistModel, p: &PcVector) -> Result<(usize, f64)> {
    marginal_argmax(model, p, Target::Loc)
}

/// Returns (class index, physical class value) of the argmax.
fn marginal_argmax(model: &HistModel, p: &PcVector, target: Target) -> Result<(usize, f64)> {
    let (outer, inner) = match target {
        Target::Id => (model.n_id, model.n_loc),
        Target::Loc => (model.n_loc, model.n_id),
    };
    let mut lls = Vec::with_capacity(outer * inner);
    for o in 1..=outer {
        for i in 1..=inner {
            let (loc, id) = match target {
                Target::Id => (i, o),
                Target::Loc => (o, i),
            };
            lls.push(log_likelihood(model, p, loc, id)?);
        }
    }
    // Shift by the max before exponentiating; the argmax is unchanged.
    let max_ll = lls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut best_idx = 1usize;
    let mut best_sum = f64::NEG_INFINITY;
    for o in 0..outer {
        let sum: f64 = (0..inner).map(|i| (lls[o * inner + i] - max_ll).exp()).sum();
        if sum > best_sum {
            best_sum = sum;
            best_idx = o + 1;
        }
    }
    let value = match target {
        Target::Id => {
            model
                .classes
                .iter()
                .find(|c| c.id_index == best_idx)
                .map(|c| c.id_value)
        }
        Target::Loc => {
            model
                .classes
                .iter()
                .find(|c| c.loc_index == best_idx)
                .map(|c| c.loc_value)
        }
    }
    .expect("argmax class exists in the model");
    Ok((best_idx, value))
}
