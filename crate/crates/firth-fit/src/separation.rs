//! Detection of complete and quasi-complete separation via a bounded
//! linear program.
//!
//! The program searches for a direction b with x_i'b >= 0 on all-success
//! rows, x_i'b <= 0 on all-failure rows, and x_i'b = 0 on rows with an
//! interior count, maximizing the total signed margin under box bounds
//! |b_j| <= 1. Any strictly positive optimum certifies separation; the
//! optimizer b is the certificate.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lp::{lp_solve, ConstraintSense, LpConstraint, LpProblem};

/// Residual tolerance for certificate checks and the separation verdict.
pub const SEPARATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationKind {
    None,
    QuasiComplete,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObsClass {
    OnHyperplane,
    CorrectlySided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    pub separated: bool,
    /// Certificate direction; the zero vector iff not separated.
    pub direction: Vec<f64>,
    /// Per-observation position relative to the certificate hyperplane.
    pub classification: Vec<ObsClass>,
    pub kind: SeparationKind,
    /// Optimal value of the detection program.
    pub optimum: f64,
}

/// Solve the detection program and classify the observations.
pub fn detect_separation(ds: &Dataset) -> Result<SeparationReport> {
    if !ds.full_column_rank() {
        return Err(Error::RankDeficient);
    }
    let (n, p) = (ds.n(), ds.p());

    // c_i = +1 on all-success rows, -1 on all-failure rows, 0 otherwise.
    let mut objective = vec![0.0; p];
    let mut constraints = Vec::with_capacity(n);
    for i in 0..n {
        let xi: Vec<f64> = ds.row(i).to_vec();
        let (sign, sense) = if ds.y()[i] == ds.m()[i] {
            (1.0, ConstraintSense::Ge)
        } else if ds.y()[i] == 0 {
            (-1.0, ConstraintSense::Le)
        } else {
            (0.0, ConstraintSense::Eq)
        };
        for j in 0..p {
            objective[j] += sign * xi[j];
        }
        constraints.push(LpConstraint {
            coeffs: xi,
            sense,
            rhs: 0.0,
        });
    }

    let problem = LpProblem {
        objective,
        constraints,
        bounds: vec![(-1.0, 1.0); p],
    };
    let solution = lp_solve(&problem)?;

    let separated = solution.value > SEPARATION_TOL;
    let direction = if separated {
        solution.x.clone()
    } else {
        vec![0.0; p]
    };

    let mut classification = Vec::with_capacity(n);
    let mut any_on_plane = false;
    for i in 0..n {
        let margin: f64 = ds
            .row(i)
            .iter()
            .zip(&direction)
            .map(|(x, b)| x * b)
            .sum();
        if margin.abs() <= SEPARATION_TOL {
            classification.push(ObsClass::OnHyperplane);
            any_on_plane = true;
        } else {
            classification.push(ObsClass::CorrectlySided);
        }
    }

    let kind = if !separated {
        SeparationKind::None
    } else if any_on_plane {
        SeparationKind::QuasiComplete
    } else {
        SeparationKind::Complete
    };

    Ok(SeparationReport {
        separated,
        direction,
        classification,
        kind,
        optimum: solution.value,
    })
}

/// Largest violation of the sign constraints by `direction`; a sound
/// certificate keeps this at or below `SEPARATION_TOL`.
pub fn certificate_violation(ds: &Dataset, direction: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..ds.n() {
        let margin: f64 = ds
            .row(i)
            .iter()
            .zip(direction)
            .map(|(x, b)| x * b)
            .sum();
        let violation = if ds.y()[i] == ds.m()[i] {
            (-margin).max(0.0)
        } else if ds.y()[i] == 0 {
            margin.max(0.0)
        } else {
            margin.abs()
        };
        worst = worst.max(violation);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn one_dimensional_complete_separation() {
        let ds = Dataset::new(array![[-1.0], [1.0]], vec![0, 1], vec![1, 1]).unwrap();
        let rep = detect_separation(&ds).unwrap();
        assert!(rep.separated);
        assert_eq!(rep.kind, SeparationKind::Complete);
        assert_abs_diff_eq!(rep.direction[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.optimum, 2.0, epsilon = 1e-9);
        assert!(certificate_violation(&ds, &rep.direction) <= SEPARATION_TOL);
    }

    #[test]
    fn shared_covariate_blocks_separation() {
        let ds = Dataset::new(array![[1.0], [1.0]], vec![0, 1], vec![1, 1]).unwrap();
        let rep = detect_separation(&ds).unwrap();
        assert!(!rep.separated);
        assert_eq!(rep.kind, SeparationKind::None);
        assert_eq!(rep.direction, vec![0.0]);
    }

    #[test]
    fn contradictory_sides_block_separation() {
        let ds = Dataset::new(
            array![[-1.0], [1.0], [-1.0], [1.0]],
            vec![0, 1, 1, 0],
            vec![1, 1, 1, 1],
        )
        .unwrap();
        let rep = detect_separation(&ds).unwrap();
        assert!(!rep.separated);
    }

    #[test]
    fn interior_counts_pin_the_direction() {
        // Rows with 0 < y < m spanning R^p force b = 0.
        let ds = Dataset::new(
            array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5]],
            vec![1, 1, 2, 0],
            vec![2, 2, 2, 1],
        )
        .unwrap();
        let rep = detect_separation(&ds).unwrap();
        assert!(!rep.separated);
    }

    #[test]
    fn tie_point_gives_quasi_complete() {
        let ds = Dataset::new(
            array![[-2.0], [-1.0], [0.0], [0.0], [1.0], [2.0]],
            vec![0, 0, 0, 1, 1, 1],
            vec![1, 1, 1, 1, 1, 1],
        )
        .unwrap();
        let rep = detect_separation(&ds).unwrap();
        assert!(rep.separated);
        assert_eq!(rep.kind, SeparationKind::QuasiComplete);
        assert!(certificate_violation(&ds, &rep.direction) <= SEPARATION_TOL);
        assert_eq!(rep.classification[2], ObsClass::OnHyperplane);
        assert_eq!(rep.classification[5], ObsClass::CorrectlySided);
    }

    #[test]
    fn rank_deficient_designs_are_refused() {
        let ds = Dataset::new(array![[1.0, 2.0], [2.0, 4.0]], vec![0, 1], vec![1, 1]).unwrap();
        assert!(matches!(detect_separation(&ds), Err(Error::RankDeficient)));
    }

    #[test]
    fn verdict_is_invariant_to_positive_row_scaling() {
        use crate::harness::rng::SeededRng;
        use ndarray::Array2;
        let mut rng = SeededRng::new(99);
        for trial in 0..30 {
            let (ds, _) = crate::testutil::random_dataset_and_beta(&mut rng, 1.0);
            let before = detect_separation(&ds).unwrap().separated;
            let mut x = Array2::zeros((ds.n(), ds.p()));
            for i in 0..ds.n() {
                let scale = rng.uniform(0.1, 10.0);
                for j in 0..ds.p() {
                    x[[i, j]] = ds.x()[[i, j]] * scale;
                }
            }
            let scaled = Dataset::new(x, ds.y().to_vec(), ds.m().to_vec()).unwrap();
            if !scaled.full_column_rank() {
                continue;
            }
            let after = detect_separation(&scaled).unwrap().separated;
            assert_eq!(before, after, "trial {trial}");
        }
    }
}
