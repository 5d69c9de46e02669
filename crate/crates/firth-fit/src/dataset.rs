//! Dataset representation for grouped binomial responses.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::pivoted_rank;

/// Relative tolerance for the rank decision, against the largest column norm.
pub const RANK_REL_TOL: f64 = 1e-10;

/// One parsed input record: `y` successes out of `m` trials with covariates `x`.
#[derive(Debug, Clone)]
pub struct RawRow {
    pub y: f64,
    pub m: f64,
    pub x: Vec<f64>,
}

/// A validated design: n x p covariate matrix, success counts, trial counts.
///
/// Construction enforces 0 <= y_i <= m_i, m_i >= 1, and n >= p >= 1, and
/// records whether the design has full column rank. Fitting refuses
/// rank-deficient designs; construction does not.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<u64>,
    m: Vec<u64>,
    full_column_rank: bool,
}

impl Dataset {
    /// Validate raw records and build a dataset.
    pub fn validate(rows: &[RawRow]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        let p = rows[0].x.len();
        if p == 0 {
            return Err(Error::DimensionMismatch(
                "records carry no covariates".into(),
            ));
        }
        let n = rows.len();
        let mut y = Vec::with_capacity(n);
        let mut m = Vec::with_capacity(n);
        let mut flat = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            if row.x.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} covariates, expected {}",
                    i,
                    row.x.len(),
                    p
                )));
            }
            for &v in &row.x {
                if !v.is_finite() {
                    return Err(Error::NonFiniteInput("covariate value"));
                }
            }
            if !row.y.is_finite() || row.y.fract() != 0.0 {
                return Err(Error::NonIntegerCount {
                    row: i,
                    value: row.y,
                });
            }
            if !row.m.is_finite() || row.m.fract() != 0.0 {
                return Err(Error::NonIntegerCount {
                    row: i,
                    value: row.m,
                });
            }
            if row.y < 0.0 || row.m < 1.0 || row.y > row.m {
                return Err(Error::CountOutOfRange {
                    row: i,
                    y: row.y,
                    m: row.m,
                });
            }
            y.push(row.y as u64);
            m.push(row.m as u64);
            flat.extend_from_slice(&row.x);
        }
        let x = Array2::from_shape_vec((n, p), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(x, y, m)
    }

    /// Build from already-typed parts, enforcing the same invariants.
    pub fn new(x: Array2<f64>, y: Vec<u64>, m: Vec<u64>) -> Result<Dataset> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        if y.len() != n || m.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but y has {} and m has {}",
                n,
                y.len(),
                m.len()
            )));
        }
        if p == 0 || n < p {
            return Err(Error::DimensionMismatch(format!(
                "need n >= p >= 1, got n={}, p={}",
                n, p
            )));
        }
        for (i, (&yi, &mi)) in y.iter().zip(&m).enumerate() {
            if mi < 1 || yi > mi {
                return Err(Error::CountOutOfRange {
                    row: i,
                    y: yi as f64,
                    m: mi as f64,
                });
            }
        }
        let full_column_rank = pivoted_rank(&x.view(), RANK_REL_TOL) == p;
        Ok(Dataset {
            x,
            y,
            m,
            full_column_rank,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    pub fn full_column_rank(&self) -> bool {
        self.full_column_rank
    }

    /// Smallest Euclidean row norm of the design.
    pub fn min_row_norm(&self) -> f64 {
        (0..self.n())
            .map(|i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn raw(y: f64, m: f64, x: &[f64]) -> RawRow {
        RawRow {
            y,
            m,
            x: x.to_vec(),
        }
    }

    #[test]
    fn two_point_design_is_full_rank() {
        let ds = Dataset::validate(&[raw(1.0, 1.0, &[1.0]), raw(0.0, 1.0, &[-1.0])]).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.p(), 1);
        assert!(ds.full_column_rank());
    }

    #[test]
    fn success_count_above_trials_is_rejected() {
        let err = Dataset::validate(&[raw(2.0, 1.0, &[1.0])]).unwrap_err();
        assert!(matches!(err, Error::CountOutOfRange { row: 0, .. }));
    }

    #[test]
    fn proportional_columns_clear_rank_flag() {
        let ds = Dataset::new(
            array![[1.0, 2.0], [2.0, 4.0]],
            vec![1, 0],
            vec![1, 1],
        )
        .unwrap();
        assert!(!ds.full_column_rank());
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(matches!(Dataset::validate(&[]), Err(Error::EmptyData)));
        let err = Dataset::validate(&[raw(0.0, 1.0, &[1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err = Dataset::validate(&[raw(0.5, 1.0, &[1.0])]).unwrap_err();
        assert!(matches!(err, Error::NonIntegerCount { .. }));
        let err = Dataset::validate(&[raw(0.0, 0.0, &[1.0])]).unwrap_err();
        assert!(matches!(err, Error::CountOutOfRange { .. }));
        let err = Dataset::validate(&[
            raw(0.0, 1.0, &[1.0]),
            raw(1.0, 1.0, &[1.0, 2.0]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn min_row_norm_is_smallest_row() {
        let ds = Dataset::new(array![[3.0, 4.0], [0.1, 0.0]], vec![0, 1], vec![1, 1]).unwrap();
        assert!((ds.min_row_norm() - 0.1).abs() < 1e-15);
    }
}
