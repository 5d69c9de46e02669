//! Small dense linear algebra: Cholesky factorization, pivoted-QR rank,
//! LU determinants, and deterministic summation helpers.
//!
//! Everything here targets the tiny matrices of this crate (p is the number
//! of regression coefficients, usually single digits), so plain loops beat
//! any heavyweight backend.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    /// Factor a symmetric matrix. Fails with `CholeskyFailure` when a pivot
    /// is non-positive or non-finite, which downstream code treats as a
    /// log-determinant of negative infinity.
    pub fn factor(a: &ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[[i, j]];
                for k in 0..j {
                    sum -= l[[i, k]] * l[[j, k]];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::CholeskyFailure { pivot: i });
                    }
                    l[[i, j]] = sum.sqrt();
                } else {
                    l[[i, j]] = sum / l[[j, j]];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// log det A = 2 * sum of log diagonal entries of L.
    pub fn log_det(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            s += self.l[[i, i]].ln();
        }
        2.0 * s
    }

    /// Solve A x = b via the two triangular systems.
    pub fn solve(&self, b: &ArrayView1<f64>) -> Array1<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_owned();
        for i in 0..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= self.l[[i, k]] * x[k];
            }
            x[i] = sum / self.l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in i + 1..n {
                sum -= self.l[[k, i]] * x[k];
            }
            x[i] = sum / self.l[[i, i]];
        }
        x
    }

    /// Dense inverse, column by column.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut e = Array1::<f64>::zeros(n);
            e[j] = 1.0;
            let col = self.solve(&e.view());
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        inv
    }
}

/// Determinant by LU with partial pivoting; consumes the workspace in place.
pub fn det_in_place(a: &mut Array2<f64>) -> f64 {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if a[[i, k]].abs() > a[[piv, k]].abs() {
                piv = i;
            }
        }
        if a[[piv, k]] == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = a[[k, j]];
                a[[k, j]] = a[[piv, j]];
                a[[piv, j]] = tmp;
            }
            det = -det;
        }
        det *= a[[k, k]];
        for i in k + 1..n {
            let f = a[[i, k]] / a[[k, k]];
            for j in k + 1..n {
                a[[i, j]] -= f * a[[k, j]];
            }
        }
    }
    det
}

/// Numerical column rank via Householder QR with column pivoting.
///
/// A pivot column is counted toward the rank while its residual norm exceeds
/// `rel_tol` times the largest initial column norm.
pub fn pivoted_rank(x: &ArrayView2<f64>, rel_tol: f64) -> usize {
    let (n, p) = x.dim();
    if n == 0 || p == 0 {
        return 0;
    }
    let mut a = x.to_owned();
    let col_norm = |a: &Array2<f64>, j: usize, from: usize| -> f64 {
        let mut s = 0.0;
        for i in from..n {
            s += a[[i, j]] * a[[i, j]];
        }
        s.sqrt()
    };
    let max_norm = (0..p).map(|j| col_norm(&a, j, 0)).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return 0;
    }
    let tol = rel_tol * max_norm;
    let steps = n.min(p);
    let mut rank = 0;
    for k in 0..steps {
        // pick the column with the largest residual norm
        let (mut jmax, mut nmax) = (k, col_norm(&a, k, k));
        for j in k + 1..p {
            let nj = col_norm(&a, j, k);
            if nj > nmax {
                jmax = j;
                nmax = nj;
            }
        }
        if nmax <= tol {
            break;
        }
        if jmax != k {
            for i in 0..n {
                let tmp = a[[i, k]];
                a[[i, k]] = a[[i, jmax]];
                a[[i, jmax]] = tmp;
            }
        }
        // Householder reflector annihilating column k below the diagonal
        let alpha = -a[[k, k]].signum() * nmax;
        let mut v = Array1::<f64>::zeros(n - k);
        for i in k..n {
            v[i - k] = a[[i, k]];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for j in k..p {
                let mut dot = 0.0;
                for i in k..n {
                    dot += v[i - k] * a[[i, j]];
                }
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[[i, j]] -= f * v[i - k];
                }
            }
        }
        a[[k, k]] = alpha;
        for i in k + 1..n {
            a[[i, k]] = 0.0;
        }
        rank += 1;
    }
    rank
}

/// Deterministic pairwise summation; order-independent up to the fixed
/// recursive splitting, and more accurate than a running sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// log(sum exp(x_i)) with the usual max shift; returns -inf on an empty or
/// all -inf input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let chol = Cholesky::factor(&a.view()).unwrap();
        let b = array![1.0, 2.0];
        let x = chol.solve(&b.view());
        let ax = a.dot(&x);
        assert_abs_diff_eq!(ax[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ax[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chol.log_det(), (4.0f64 * 3.0 - 4.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            Cholesky::factor(&a.view()),
            Err(Error::CholeskyFailure { pivot: 1 })
        ));
    }

    #[test]
    fn det_matches_closed_form() {
        let mut a = array![[1.0, 2.0], [3.0, 4.0]];
        assert_abs_diff_eq!(det_in_place(&mut a), -2.0, epsilon = 1e-12);
        let mut s = array![[0.0, 1.0], [1.0, 0.0]];
        assert_abs_diff_eq!(det_in_place(&mut s), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_detects_proportional_columns() {
        let x = array![[1.0, 2.0], [2.0, 4.0]];
        assert_eq!(pivoted_rank(&x.view(), 1e-10), 1);
        let full = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert_eq!(pivoted_rank(&full.view(), 1e-10), 2);
    }

    #[test]
    fn log_sum_exp_handles_scale() {
        let xs = [-1000.0, -1000.0 + 2.0_f64.ln()];
        assert_abs_diff_eq!(log_sum_exp(&xs), -1000.0 + 3.0f64.ln(), epsilon = 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
