//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Small covariance matrices only (tens of rows), so a plain cyclic Jacobi
//! sweep is both adequate and easy to make deterministic. The sign of every
//! eigenvector is fixed (largest-magnitude entry positive, first such entry
//! on ties) so downstream projections and serialised models are stable.

use ndarray::{Array1, Array2};

use crate::error::{Result, TactileError};

/// Eigenvalues (descending) with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Array1<f64>,
    /// Column i is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Array2<f64>,
}

const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Decompose a symmetric matrix. Input must be square, finite and symmetric
/// within 1e-9; eigenvalues come out in non-increasing order.
pub fn symmetric_eig(m: &Array2<f64>) -> Result<EigenResult> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(TactileError::BadMatrix(format!(
            "expected non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(TactileError::BadMatrix("non-finite entry".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[[i, j]] - m[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(TactileError::BadMatrix(format!(
                    "entries ({i},{j}) and ({j},{i}) differ by more than {SYMMETRY_TOL}"
                )));
            }
        }
    }

    let mut a = m.clone();
    // Symmetrise exactly so rotations preserve symmetry to the last bit.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = avg;
            a[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-15 * scale;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_norm(&a);
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s) = jacobi_rotation(a[[p, p]], a[[q, q]], apq);
                apply_rotation(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    // Extract, sort descending (stable on ties), fix signs.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());

    let mut eigenvalues = Array1::<f64>::zeros(n);
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        eigenvalues[col] = a[[src, src]];
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for row in 0..n {
            let abs = v[[row, src]].abs();
            if abs > best_abs {
                best_abs = abs;
                best = row;
            }
        }
        let sign = if v[[best, src]] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            eigenvectors[[row, col]] = sign * v[[row, src]];
        }
    }

    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]] * a[[i, j]];
            }
        }
    }
    s.sqrt()
}

fn jacobi_rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c)
}

fn apply_rotation(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    let app = a[[p, p]];
    let aqq = a[[q, q]];
    let apq = a[[p, q]];

    a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = c * akp - s * akq;
        a[[p, k]] = a[[k, p]];
        a[[k, q]] = s * akp + c * akq;
        a[[q, k]] = a[[k, q]];
    }
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Residual and orthonormality checks used by tests and model validation.
pub fn gram_deviation(vectors: &Array2<f64>) -> f64 {
    let g = vectors.t().dot(vectors);
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn residual(m: &Array2<f64>, r: &EigenResult) -> f64 {
        let n = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            let v = r.eigenvectors.column(i);
            let mv = m.dot(&v);
            for k in 0..n {
                worst = worst.max((mv[k] - r.eigenvalues[i] * v[k]).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_matrix() {
        let m = Array2::<f64>::eye(3);
        let r = symmetric_eig(&m).unwrap();
        assert_eq!(r.eigenvalues.to_vec(), vec![1.0, 1.0, 1.0]);
        assert!(gram_deviation(&r.eigenvectors) < 1e-10);
    }

    #[test]
    fn diagonal_matrix_sorts_descending() {
        let m = Array2::from_diag(&array![5.0, 2.0, 9.0]);
        let r = symmetric_eig(&m).unwrap();
        assert_eq!(r.eigenvalues.to_vec(), vec![9.0, 5.0, 2.0]);
    }

    #[test]
    fn two_by_two_hand_case() {
        // [[2,1],[1,2]] has eigenpairs (3, [1,1]/sqrt2) and (1, [1,-1]/sqrt2).
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let r = symmetric_eig(&m).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!((r.eigenvectors[[0, 0]] - s).abs() < 1e-12);
        assert!((r.eigenvectors[[1, 0]] - s).abs() < 1e-12);
        // Sign rule: first largest-magnitude entry positive.
        assert!((r.eigenvectors[[0, 1]] - s).abs() < 1e-12);
        assert!((r.eigenvectors[[1, 1]] + s).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_non_finite() {
        let m = array![[1.0, 2.0], [0.5, 1.0]];
        assert!(matches!(symmetric_eig(&m), Err(TactileError::BadMatrix(_))));
        let m = array![[1.0, f64::NAN], [f64::NAN, 1.0]];
        assert!(matches!(symmetric_eig(&m), Err(TactileError::BadMatrix(_))));
    }

    #[test]
    fn random_matrices_meet_contract() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.random_range(2..=12);
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.random_range(-5.0..5.0);
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            let r = symmetric_eig(&m).unwrap();
            let lam1 = r.eigenvalues[0].abs().max(1.0);
            assert!(residual(&m, &r) < 1e-8 * lam1);
            assert!(gram_deviation(&r.eigenvectors) < 1e-10);
            for w in r.eigenvalues.to_vec().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }
}
