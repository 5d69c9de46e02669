//! Existence experiments: generate datasets with controlled overlap
//! structure, fit them both ways under every link, and compare the
//! penalized optimum against far-away points on the sphere.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::fit::{fit_mle, fit_penalized, FitConfig, FitStatus};
use crate::harness::rng::SeededRng;
use crate::link::{sigmoid, LinkKind};
use crate::penalty::penalized_loglik;
use crate::separation::{detect_separation, SeparationKind};

/// Scenario families exercised by the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// The canonical two-point completely separated design.
    TwoPoint,
    /// Seeded completely separated binary data in dimension p.
    Separated { p: usize },
    /// Separation with tie points sitting on the hyperplane.
    QuasiSeparated,
    /// Well-overlapped grouped data.
    Overlapped { n: usize, m: u64 },
    /// Intercept-only, every response zero.
    AllZero { m: u64 },
    /// Intercept-only, every response at the trial count.
    AllMax { m: u64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    pub dataset: Dataset,
}

/// Deterministically generate a scenario dataset.
pub fn generate_scenario(kind: ScenarioKind, seed: u64) -> Scenario {
    let mut rng = SeededRng::new(seed).child(0x5ce9a210);
    let dataset = match kind {
        ScenarioKind::TwoPoint => Dataset::new(
            ndarray::array![[-1.0], [1.0]],
            vec![0, 1],
            vec![1, 1],
        )
        .expect("static two-point design"),
        ScenarioKind::Separated { p } => separated_dataset(&mut rng, p),
        ScenarioKind::QuasiSeparated => Dataset::new(
            ndarray::array![[-2.0], [-1.0], [0.0], [0.0], [1.0], [2.0]],
            vec![0, 0, 0, 1, 1, 1],
            vec![1, 1, 1, 1, 1, 1],
        )
        .expect("static quasi-separated design"),
        ScenarioKind::Overlapped { n, m } => overlapped_dataset(&mut rng, n, m),
        ScenarioKind::AllZero { m } => {
            Dataset::new(Array2::from_elem((1, 1), 1.0), vec![0], vec![m]).expect("intercept")
        }
        ScenarioKind::AllMax { m } => {
            Dataset::new(Array2::from_elem((1, 1), 1.0), vec![m], vec![m]).expect("intercept")
        }
    };
    Scenario {
        id: format!("{kind:?}#{seed}"),
        kind,
        dataset,
    }
}

/// Completely separated binary data: every row sits strictly on its class
/// side of a random hyperplane, with a margin so the separation is clean.
fn separated_dataset(rng: &mut SeededRng, p: usize) -> Dataset {
    loop {
        let direction = rng.unit_vector(p);
        let n_target = (2 * p + 4).max(6);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut ys: Vec<u64> = Vec::new();
        let mut attempts = 0;
        while rows.len() < n_target && attempts < 10_000 {
            attempts += 1;
            let x: Vec<f64> = (0..p).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let margin: f64 = x.iter().zip(direction.iter()).map(|(a, b)| a * b).sum();
            if margin.abs() < 0.5 {
                continue;
            }
            ys.push(if margin > 0.0 { 1 } else { 0 });
            rows.push(x);
        }
        if ys.iter().all(|&y| y == 1) || ys.iter().all(|&y| y == 0) {
            continue;
        }
        let n = rows.len();
        let mut x = Array2::<f64>::zeros((n, p));
        for (i, row) in rows.iter().enumerate() {
            for j in 0..p {
                x[[i, j]] = row[j];
            }
        }
        let Ok(ds) = Dataset::new(x, ys, vec![1; n]) else {
            continue;
        };
        if ds.full_column_rank() {
            return ds;
        }
    }
}

/// Grouped binomial data with mid-range counts almost surely present, which
/// rules out separation.
fn overlapped_dataset(rng: &mut SeededRng, n: usize, m: u64) -> Dataset {
    loop {
        let p = 2;
        let mut x = Array2::<f64>::zeros((n, p));
        for i in 0..n {
            x[[i, 0]] = 1.0;
            x[[i, 1]] = rng.uniform(-2.0, 2.0);
        }
        let beta = [rng.uniform(-0.4, 0.4), rng.uniform(-0.5, 0.5)];
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let eta = x[[i, 0]] * beta[0] + x[[i, 1]] * beta[1];
            y.push(rng.binomial(m, sigmoid(eta)));
        }
        let Ok(ds) = Dataset::new(x, y, vec![m; n]) else {
            continue;
        };
        if ds.full_column_rank() {
            return ds;
        }
    }
}

/// Outcome of both fits under one link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub link: LinkKind,
    pub mle_status: FitStatus,
    pub mle_beta_norm: f64,
    pub penalized_status: FitStatus,
    pub penalized_beta: Vec<f64>,
    pub penalized_beta_norm: f64,
    pub penalized_objective: f64,
    pub penalized_grad_norm: f64,
    /// l*(beta_hat) >= l*(0) and l*(beta_hat) > l*(50 u) for the seeded
    /// far directions.
    pub sphere_check_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub id: String,
    pub separated: bool,
    pub separation_kind: SeparationKind,
    pub outcomes: Vec<LinkOutcome>,
    /// Detector verdict, fit statuses, and sphere checks all agree with the
    /// expected pattern for this dataset.
    pub consistent: bool,
}

/// Number of far-away directions compared against the fitted optimum.
pub const SPHERE_CHECK_DIRECTIONS: usize = 100;
/// Radius of the far-away comparison points.
pub const SPHERE_CHECK_RADIUS: f64 = 50.0;

/// l*(beta_hat) >= l*(0) and l*(beta_hat) > l*(r u) over seeded directions.
pub fn sphere_restriction_check(
    ds: &Dataset,
    link: LinkKind,
    beta_hat: &Array1<f64>,
    seed: u64,
) -> bool {
    let p = ds.p();
    let opt = penalized_loglik(ds, link, &beta_hat.view());
    let at_zero = penalized_loglik(ds, link, &Array1::zeros(p).view());
    if !(opt >= at_zero - 1e-9) {
        return false;
    }
    let mut rng = SeededRng::new(seed).child(0x09e37701);
    for _ in 0..SPHERE_CHECK_DIRECTIONS {
        let far = rng.unit_vector(p).mapv(|t| t * SPHERE_CHECK_RADIUS);
        let value = penalized_loglik(ds, link, &far.view());
        if !(opt > value) {
            return false;
        }
    }
    true
}

/// Run the detector and both fits under every link for one scenario.
pub fn existence_experiment(scenario: &Scenario, seed: u64) -> Result<ExistenceReport> {
    let ds = &scenario.dataset;
    let sep = detect_separation(ds)?;
    let cfg = FitConfig::default();
    let mut outcomes = Vec::with_capacity(LinkKind::ALL.len());
    let mut consistent = true;
    for link in LinkKind::ALL {
        let mle = fit_mle(ds, link, &cfg)?;
        let pen = fit_penalized(ds, link, &cfg)?;
        let sphere_check_ok = sphere_restriction_check(ds, link, &pen.beta(), seed);

        if pen.status != FitStatus::Converged || !sphere_check_ok {
            consistent = false;
        }
        if sep.separated && mle.status != FitStatus::DivergenceSuspected {
            consistent = false;
        }
        if !sep.separated && mle.status != FitStatus::Converged {
            consistent = false;
        }

        outcomes.push(LinkOutcome {
            link,
            mle_status: mle.status,
            mle_beta_norm: mle.beta_norm(),
            penalized_status: pen.status,
            penalized_beta: pen.beta_hat.clone(),
            penalized_beta_norm: pen.beta_norm(),
            penalized_objective: pen.objective,
            penalized_grad_norm: pen.grad_norm,
            sphere_check_ok,
        });
    }
    Ok(ExistenceReport {
        id: scenario.id.clone(),
        separated: sep.separated,
        separation_kind: sep.kind,
        outcomes,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_experiment_recovers_log_five() {
        let scenario = generate_scenario(ScenarioKind::TwoPoint, 7);
        let report = existence_experiment(&scenario, 7).unwrap();
        assert!(report.separated);
        assert_eq!(report.separation_kind, SeparationKind::Complete);
        assert!(report.consistent);
        let logit = &report.outcomes[0];
        assert_eq!(logit.link, LinkKind::Logit);
        assert_eq!(logit.mle_status, FitStatus::DivergenceSuspected);
        assert_eq!(logit.penalized_status, FitStatus::Converged);
        assert_abs_diff_eq!(logit.penalized_beta[0], 5f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn all_zero_intercept_stays_finite() {
        let scenario = generate_scenario(ScenarioKind::AllZero { m: 5 }, 7);
        let report = existence_experiment(&scenario, 7).unwrap();
        assert!(report.separated);
        let logit = &report.outcomes[0];
        assert_eq!(logit.penalized_status, FitStatus::Converged);
        assert_abs_diff_eq!(logit.penalized_beta[0], -(11f64.ln()), epsilon = 1e-6);
        assert!(report.consistent);
    }

    #[test]
    fn overlapped_scenario_fits_agree() {
        let scenario = generate_scenario(ScenarioKind::Overlapped { n: 200, m: 20 }, 3);
        let report = existence_experiment(&scenario, 3).unwrap();
        assert!(!report.separated);
        assert!(report.consistent);
        let logit = &report.outcomes[0];
        assert_eq!(logit.mle_status, FitStatus::Converged);
        assert_eq!(logit.penalized_status, FitStatus::Converged);
    }

    #[test]
    fn separated_scenarios_have_margin_and_both_classes() {
        for p in 1..=3 {
            for seed in 0..5 {
                let scenario = generate_scenario(ScenarioKind::Separated { p }, seed);
                let ds = &scenario.dataset;
                assert!(ds.full_column_rank());
                let sep = detect_separation(ds).unwrap();
                assert!(sep.separated, "p={p} seed={seed}");
                assert_eq!(sep.kind, SeparationKind::Complete);
            }
        }
    }
}
