//! Two-stage PCA over tap grids.
//!
//! Stage 1 runs a temporal PCA independently for every sensor dimension,
//! keeping components up to the last normalised eigenvalue gap above
//! `gamma1`. The per-dimension projections are concatenated into a
//! time-compressed row per tap, on which stage 2 runs a spatial PCA with
//! threshold `gamma2`. The result is one low-dimensional PC vector per tap;
//! the labelled collection of those vectors is the manifold the classifiers
//! and the sensitivity analysis operate on.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, DatasetGrid, TactileSegment};
use crate::error::{Result, TactileError};
use crate::linalg::symmetric_eig;

pub const DEFAULT_GAMMA1: f64 = 0.05;
pub const DEFAULT_GAMMA2: f64 = 0.005;

/// Temporal PCA for one sensor dimension: column means over the training
/// grid and the kept eigenvector columns (`n_samples` x `kept`).
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Dim {
    pub means: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl Stage1Dim {
    pub fn kept(&self) -> usize {
        self.eigenvectors.ncols()
    }
}

/// Fitted two-stage projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub stage1: Vec<Stage1Dim>,
    pub n_total: usize,
    pub stage2_means: Array1<f64>,
    /// `n_total` x `n_reduced`.
    pub stage2_eigenvectors: Array2<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub nominal_samples: usize,
}

impl PcaModel {
    pub fn n_dims(&self) -> usize {
        self.stage1.len()
    }

    pub fn n_reduced(&self) -> usize {
        self.stage2_eigenvectors.ncols()
    }
}

/// One tap projected onto the manifold: `n_reduced` components plus label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcVector {
    pub components: Vec<f64>,
    pub label: ClassLabel,
}

/// Scree-gap cut: the largest 1-based index `j` whose normalised gap
/// (lambda_j - lambda_{j+1}) / sum(lambda) exceeds `gamma`, treating the
/// eigenvalue past the end of the list as zero. Returns 1 when no gap
/// qualifies, so a projection is never empty.
pub fn scree_cut(eigenvalues: &[f64], gamma: f64) -> Result<usize> {
    if eigenvalues.is_empty() {
        return Err(TactileError::DegenerateSpectrum);
    }
    let sum: f64 = eigenvalues.iter().sum();
    if sum <= 0.0 {
        return Err(TactileError::DegenerateSpectrum);
    }
    let mut cut = 1usize;
    for j in 0..eigenvalues.len() {
        let next = if j + 1 < eigenvalues.len() {
            eigenvalues[j + 1]
        } else {
            0.0
        };
        if (eigenvalues[j] - next) / sum > gamma {
            cut = j + 1;
        }
    }
    Ok(cut)
}

/// Fit the two-stage model on a preprocessed (filtered, centered) grid.
pub fn fit(grid: &DatasetGrid, gamma1: f64, gamma2: f64) -> Result<PcaModel> {
    let n = grid.segments.len();
    if n < 2 {
        return Err(TactileError::TooFewSegments { need: 2, got: n });
    }
    let n_samples = grid.nominal_samples;
    let n_dims = grid.n_dims;
    for seg in &grid.segments {
        if seg.sample_count() != n_samples || seg.n_dims() != n_dims {
            return Err(TactileError::ShapeMismatch(format!(
                "segment is {}x{}, grid expects {}x{}",
                seg.n_dims(),
                seg.sample_count(),
                n_dims,
                n_samples
            )));
        }
    }

    // All-identical data has nothing to decompose.
    let first = &grid.segments[0].samples;
    if grid.segments.iter().all(|s| s.samples == *first) {
        return Err(TactileError::ZeroVariance);
    }

    // Stage 1: temporal PCA per sensor dimension.
    let mut stage1 = Vec::with_capacity(n_dims);
    for k in 0..n_dims {
        let mut x = Array2::<f64>::zeros((n, n_samples));
        for (row, seg) in grid.segments.iter().enumerate() {
            x.row_mut(row).assign(&seg.samples.row(k));
        }
        let (means, cov) = centered_covariance(&x);
        let eig = symmetric_eig(&cov)?;
        let kept = scree_cut(eig.eigenvalues.as_slice().unwrap(), gamma1)?;
        let eigenvectors = eig.eigenvectors.slice(ndarray::s![.., ..kept]).to_owned();
        stage1.push(Stage1Dim {
            means,
            eigenvectors,
        });
    }
    let n_total: usize = stage1.iter().map(Stage1Dim::kept).sum();

    // Stage 2: spatial PCA over the time-compressed rows.
    let mut compressed = Array2::<f64>::zeros((n, n_total));
    for (row, seg) in grid.segments.iter().enumerate() {
        let t = stage1_project(&stage1, seg);
        compressed.row_mut(row).assign(&Array1::from(t));
    }
    let (stage2_means, cov2) = centered_covariance(&compressed);
    let eig2 = symmetric_eig(&cov2)?;
    let n_reduced = scree_cut(eig2.eigenvalues.as_slice().unwrap(), gamma2)?;
    let stage2_eigenvectors = eig2
        .eigenvectors
        .slice(ndarray::s![.., ..n_reduced])
        .to_owned();

    Ok(PcaModel {
        stage1,
        n_total,
        stage2_means,
        stage2_eigenvectors,
        gamma1,
        gamma2,
        nominal_samples: n_samples,
    })
}

/// Project one centered tap through both stages.
pub fn project(model: &PcaModel, segment: &TactileSegment) -> Result<PcVector> {
    if segment.n_dims() != model.n_dims() || segment.sample_count() != model.nominal_samples {
        return Err(TactileError::ShapeMismatch(format!(
            "segment is {}x{}, model expects {}x{}",
            segment.n_dims(),
            segment.sample_count(),
            model.n_dims(),
            model.nominal_samples
        )));
    }
    let t = Array1::from(stage1_project(&model.stage1, segment));
    let centered = &t - &model.stage2_means;
    let components = model.stage2_eigenvectors.t().dot(&centered).to_vec();
    Ok(PcVector {
        components,
        label: segment.label,
    })
}

/// Project every segment of a grid; the labelled result is the manifold.
pub fn project_grid(model: &PcaModel, grid: &DatasetGrid) -> Result<Vec<PcVector>> {
    grid.segments.iter().map(|s| project(model, s)).collect()
}

fn stage1_project(stage1: &[Stage1Dim], segment: &TactileSegment) -> Vec<f64> {
    let mut out = Vec::with_capacity(stage1.iter().map(Stage1Dim::kept).sum());
    for (k, dim) in stage1.iter().enumerate() {
        let row = segment.samples.row(k).to_owned();
        let centered = &row - &dim.means;
        out.extend(dim.eigenvectors.t().dot(&centered).to_vec());
    }
    out
}

/// Column means plus the (n-1)-normalised covariance of a data matrix.
fn centered_covariance(x: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = x.nrows() as f64;
    let means = x.sum_axis(ndarray::Axis(0)) / n;
    let centered = x - &means;
    let cov = centered.t().dot(&centered) / (n - 1.0);
    (means, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{center_grid, GridMeta};
    use ndarray::array;

    #[test]
    fn scree_rank_one() {
        assert_eq!(scree_cut(&[10.0, 0.0, 0.0], 0.05).unwrap(), 1);
    }

    #[test]
    fn scree_hand_case_interior_gaps() {
        // Gaps over the sum 10: 0.3, 0.2, 0.1, 0.0 -> last above 0.05 is j=3.
        assert_eq!(scree_cut(&[6.0, 3.0, 1.0, 0.0], 0.05).unwrap(), 3);
    }

    #[test]
    fn scree_hand_case_final_gap() {
        // Interior gaps are 0; final gap (4-0)/16 = 0.25 -> j=4.
        assert_eq!(scree_cut(&[4.0, 4.0, 4.0, 4.0], 0.05).unwrap(), 4);
    }

    #[test]
    fn scree_no_gap_returns_one() {
        assert_eq!(scree_cut(&[1.0, 1.0, 1.0], 0.5).unwrap(), 1);
    }

    #[test]
    fn scree_all_zero_errors() {
        assert!(matches!(
            scree_cut(&[0.0, 0.0], 0.05),
            Err(TactileError::DegenerateSpectrum)
        ));
    }

    fn toy_grid() -> DatasetGrid {
        // 6 segments, 2 dims, 4 samples, varied content.
        let data: [[[f64; 4]; 2]; 6] = [
            [[1.0, 2.0, 3.0, 4.0], [0.5, -0.5, 0.25, 1.0]],
            [[2.0, 1.0, 0.0, -1.0], [1.5, 2.5, -0.5, 0.0]],
            [[0.0, 3.0, 1.0, 2.0], [-1.0, 0.0, 1.0, 2.0]],
            [[4.0, 0.0, 2.0, 1.0], [2.0, 1.0, 0.0, -1.0]],
            [[-1.0, -2.0, 0.0, 3.0], [0.0, 0.5, 1.5, -0.5]],
            [[3.0, 1.0, -1.0, 0.0], [1.0, -1.0, 2.0, 0.5]],
        ];
        let segments = data
            .iter()
            .enumerate()
            .map(|(i, rows)| TactileSegment {
                samples: array![
                    [rows[0][0], rows[0][1], rows[0][2], rows[0][3]],
                    [rows[1][0], rows[1][1], rows[1][2], rows[1][3]],
                ],
                label: ClassLabel {
                    loc_index: i / 2 + 1,
                    id_index: i % 2 + 1,
                    loc_value: (i / 2 + 1) as f64,
                    id_value: (i % 2 + 1) as f64,
                },
            })
            .collect();
        DatasetGrid {
            segments,
            n_id: 2,
            n_loc: 3,
            n_dims: 2,
            nominal_samples: 4,
            what_increment: 1.0,
            circular_what: false,
            meta: GridMeta {
                sensor: "toy".into(),
                loc_unit: "mm".into(),
                id_unit: "mm".into(),
                loc_range: (1.0, 3.0),
                id_range: (1.0, 2.0),
                loc_increment: 1.0,
                id_increment: 1.0,
            },
        }
    }

    #[test]
    fn fit_rejects_identical_segments() {
        let mut grid = toy_grid();
        let s = grid.segments[0].clone();
        grid.segments = vec![s.clone(), s.clone(), s];
        assert!(matches!(
            fit(&grid, 0.05, 0.005),
            Err(TactileError::ZeroVariance)
        ));
    }

    #[test]
    fn fit_rejects_single_segment() {
        let mut grid = toy_grid();
        grid.segments.truncate(1);
        assert!(matches!(
            fit(&grid, 0.05, 0.005),
            Err(TactileError::TooFewSegments { .. })
        ));
    }

    #[test]
    fn stage1_matches_brute_force_oracle() {
        // Independent path: explicit covariance + nalgebra's symmetric
        // eigendecomposition, with the same sign convention.
        let grid = center_grid(&toy_grid()).unwrap();
        let model = fit(&grid, 0.05, 0.005).unwrap();
        for k in 0..grid.n_dims {
            let n = grid.segments.len();
            let cols = grid.nominal_samples;
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, cols);
            for (r, seg) in grid.segments.iter().enumerate() {
                for c in 0..cols {
                    m[(r, c)] = seg.samples[[k, c]];
                }
            }
            let mean = m.row_mean();
            for r in 0..n {
                for c in 0..cols {
                    m[(r, c)] -= mean[c];
                }
            }
            let cov = m.transpose() * &m / (n as f64 - 1.0);
            let se = nalgebra::SymmetricEigen::new(cov);
            // Sort descending, fix signs like the implementation does.
            let mut idx: Vec<usize> = (0..cols).collect();
            idx.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
            for (col, &src) in idx.iter().take(model.stage1[k].kept()).enumerate() {
                let v = se.eigenvectors.column(src);
                let mut best = 0;
                for r in 0..cols {
                    if v[r].abs() > v[best].abs() {
                        best = r;
                    }
                }
                let sign = if v[best] < 0.0 { -1.0 } else { 1.0 };
                for r in 0..cols {
                    let got = model.stage1[k].eigenvectors[[r, col]];
                    assert!(
                        (got - sign * v[r]).abs() < 1e-8,
                        "dim {k} pc {col} row {r}: {got} vs {}",
                        sign * v[r]
                    );
                }
            }
        }
    }

    #[test]
    fn training_segment_projects_to_training_vector_exactly() {
        let grid = center_grid(&toy_grid()).unwrap();
        let model = fit(&grid, 0.05, 0.005).unwrap();
        let manifold = project_grid(&model, &grid).unwrap();
        for (seg, pv) in grid.segments.iter().zip(&manifold) {
            let again = project(&model, seg).unwrap();
            assert_eq!(again.components, pv.components);
        }
    }

    #[test]
    fn projection_is_affine() {
        // project(a*s1 + b*s2) - offset must equal the same combination of
        // the offset-free projections.
        let grid = center_grid(&toy_grid()).unwrap();
        let model = fit(&grid, 0.05, 0.005).unwrap();
        let s1 = &grid.segments[0];
        let s2 = &grid.segments[1];
        let (a, b) = (0.7, -1.3);
        let combo = TactileSegment {
            samples: a * &s1.samples + b * &s2.samples,
            label: s1.label,
        };
        let zero = TactileSegment {
            samples: Array2::zeros((grid.n_dims, grid.nominal_samples)),
            label: s1.label,
        };
        let p0 = project(&model, &zero).unwrap().components;
        let p1 = project(&model, s1).unwrap().components;
        let p2 = project(&model, s2).unwrap().components;
        let pc = project(&model, &combo).unwrap().components;
        for r in 0..pc.len() {
            let expect = a * (p1[r] - p0[r]) + b * (p2[r] - p0[r]) + p0[r];
            assert!((pc[r] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn variance_ordering_of_components() {
        let grid = center_grid(&toy_grid()).unwrap();
        let model = fit(&grid, 0.05, 0.005).unwrap();
        let manifold = project_grid(&model, &grid).unwrap();
        let n = manifold.len() as f64;
        let mut vars = Vec::new();
        for r in 0..model.n_reduced() {
            let mean: f64 = manifold.iter().map(|p| p.components[r]).sum::<f64>() / n;
            let var: f64 = manifold
                .iter()
                .map(|p| (p.components[r] - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            vars.push(var);
        }
        for w in vars.windows(2) {
            assert!(w[0] >= w[1] - 1e-9);
        }
    }

    #[test]
    fn project_rejects_shape_mismatch() {
        let grid = center_grid(&toy_grid()).unwrap();
        let model = fit(&grid, 0.05, 0.005).unwrap();
        let bad = TactileSegment {
            samples: Array2::zeros((2, 7)),
            label: grid.segments[0].label,
        };
        assert!(matches!(
            project(&model, &bad),
            Err(TactileError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let grid = center_grid(&toy_grid()).unwrap();
        let a = fit(&grid, 0.05, 0.005).unwrap();
        let b = fit(&grid, 0.05, 0.005).unwrap();
        assert_eq!(a, b);
    }
}
