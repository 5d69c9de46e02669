//! Safeguarded ascent for the penalized and unpenalized log-likelihoods.
//!
//! Both fits run the same damped Newton iteration: the search direction is
//! A^{-1} g with A the expected information (always SPD on full-rank data
//! with live weights) and g the exact gradient of the objective; a
//! backtracking line search enforces the Armijo condition, and steps with a
//! non-finite objective are rejected by shrinking. The penalty Hessian is
//! deliberately not part of the curvature model.
//!
//! The unpenalized fit additionally watches for the signature of a
//! divergent maximum likelihood path: the parameter norm marching upward
//! while the objective plateaus, the norm overflowing a hard cap, or the
//! gradient collapsing together with the information matrix (in which case
//! the Newton step stays large even though the gradient is tiny).

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::link::LinkKind;
use crate::model::{fisher_info_at, log_likelihood_at, score_at, ModelState};
use crate::penalty::{hat_diagonals, penalized_loglik_at, penalty_at};

/// Solver configuration with the documented defaults.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Infinity-norm gradient tolerance.
    pub grad_tol: f64,
    /// Backtracking shrink factor in (0, 1).
    pub step_shrink: f64,
    /// Armijo sufficient-increase constant, < 1.
    pub armijo_c: f64,
    /// Starting point; zero vector when absent.
    pub beta0: Option<Array1<f64>>,
    /// Hard norm cap used only to flag a divergent unpenalized fit.
    pub divergence_norm: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            step_shrink: 0.5,
            armijo_c: 1e-4,
            beta0: None,
            divergence_norm: 1e8,
        }
    }
}

/// Window length for the norm-growth/objective-plateau divergence test.
const TREND_WINDOW: usize = 25;
/// Relative objective change under which the window counts as a plateau.
const PLATEAU_REL_TOL: f64 = 1e-9;
/// Maximum line-search halvings before giving up on an iteration.
const MAX_HALVINGS: usize = 60;
/// A "converged" unpenalized fit whose Newton step is still larger than
/// this (relative) bound is reclassified as divergent: the gradient only
/// vanished because the weights collapsed.
const STEP_CONFIRM_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    DivergenceSuspected,
}

/// One accepted iterate: objective value and parameter norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TracePoint {
    pub objective: f64,
    pub beta_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// Objective (l or l*) at `beta_hat`.
    pub objective: f64,
    /// Infinity norm of the gradient at `beta_hat`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
    /// Wald standard errors from the inverse information at `beta_hat`;
    /// absent when the information matrix is numerically singular there.
    pub se: Option<Vec<f64>>,
    /// Hat diagonals at `beta_hat`; absent under the same condition.
    pub h: Option<Vec<f64>>,
    pub trace: Vec<TracePoint>,
}

impl FitResult {
    pub fn beta(&self) -> Array1<f64> {
        Array1::from_vec(self.beta_hat.clone())
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta_hat.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Maximize the penalized log-likelihood.
pub fn fit_penalized(ds: &Dataset, link: LinkKind, cfg: &FitConfig) -> Result<FitResult> {
    fit_inner(ds, link, cfg, true)
}

/// Maximize the unpenalized log-likelihood, flagging divergence.
pub fn fit_mle(ds: &Dataset, link: LinkKind, cfg: &FitConfig) -> Result<FitResult> {
    fit_inner(ds, link, cfg, false)
}

/// Wald standard errors sqrt([A^{-1}]_jj) at an estimate.
pub fn standard_errors(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<Vec<f64>> {
    let state = ModelState::new(ds, link, beta)?;
    let info = fisher_info_at(ds, &state)?;
    let inv = info.inverse();
    Ok((0..ds.p()).map(|j| inv[[j, j]].sqrt()).collect())
}

fn objective_at(ds: &Dataset, link: LinkKind, state: &ModelState, penalized: bool) -> f64 {
    if penalized {
        penalized_loglik_at(ds, link, state)
    } else {
        log_likelihood_at(ds, link, state)
    }
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn norm_inf(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, t| acc.max(t.abs()))
}

fn fit_inner(ds: &Dataset, link: LinkKind, cfg: &FitConfig, penalized: bool) -> Result<FitResult> {
    if !ds.full_column_rank() {
        return Err(Error::RankDeficient);
    }
    let p = ds.p();
    let mut beta = match &cfg.beta0 {
        Some(b0) => {
            if b0.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "beta0 has length {}, expected {}",
                    b0.len(),
                    p
                )));
            }
            b0.clone()
        }
        None => Array1::zeros(p),
    };

    let mut state = ModelState::new(ds, link, &beta.view())?;
    let mut obj = objective_at(ds, link, &state, penalized);
    if !obj.is_finite() {
        return Err(Error::NonFiniteInput(
            "objective is not finite at the starting point",
        ));
    }
    let mut trace = vec![TracePoint {
        objective: obj,
        beta_norm: norm2(&beta),
    }];
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut status = FitStatus::MaxIterations;

    while iterations < cfg.max_iter {
        // Gradient and curvature at the current iterate.
        let (grad, info) = if penalized {
            match penalty_at(ds, &state) {
                Ok(pen) => {
                    let g = score_at(ds, &state) + &pen.grad;
                    (g, pen.info)
                }
                // Unreachable from a finite-objective iterate; bail out
                // rather than crash if it ever happens.
                Err(_) => {
                    status = FitStatus::MaxIterations;
                    break;
                }
            }
        } else {
            match fisher_info_at(ds, &state) {
                Ok(info) => (score_at(ds, &state), info),
                // Total weight collapse: the hallmark of a divergent path.
                Err(_) => {
                    status = FitStatus::DivergenceSuspected;
                    break;
                }
            }
        };
        grad_norm = norm_inf(&grad);
        let direction = info.solve(&grad.view());

        if grad_norm <= cfg.grad_tol {
            status = if penalized {
                FitStatus::Converged
            } else {
                // Distinguish a true stationary point from a collapsed
                // information matrix: near a genuine maximum the Newton
                // step shrinks with the gradient.
                if norm2(&direction) <= STEP_CONFIRM_TOL * (1.0 + norm2(&beta)) {
                    FitStatus::Converged
                } else {
                    FitStatus::DivergenceSuspected
                }
            };
            break;
        }

        if !penalized {
            if norm2(&beta) > cfg.divergence_norm {
                status = FitStatus::DivergenceSuspected;
                break;
            }
            if norm_growth_with_plateau(&trace) {
                status = FitStatus::DivergenceSuspected;
                break;
            }
        }

        // Backtracking line search on the Armijo condition.
        let slope = grad.dot(&direction);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &beta + &(step * &direction);
            if let Ok(cand_state) = ModelState::new(ds, link, &cand.view()) {
                let cand_obj = objective_at(ds, link, &cand_state, penalized);
                if cand_obj.is_finite() && cand_obj >= obj + cfg.armijo_c * step * slope {
                    accepted = Some((cand, cand_state, cand_obj));
                    break;
                }
            }
            step *= cfg.step_shrink;
        }
        // The information matrix can undershoot the true curvature (the
        // penalty Hessian is not modeled), making the accepted step
        // overshoot the maximum and ping-pong across it. Keep shrinking
        // while that strictly improves the objective.
        if accepted.is_some() {
            for _ in 0..8 {
                let shorter = step * cfg.step_shrink;
                let cand = &beta + &(shorter * &direction);
                let Ok(cand_state) = ModelState::new(ds, link, &cand.view()) else {
                    break;
                };
                let cand_obj = objective_at(ds, link, &cand_state, penalized);
                if cand_obj.is_finite()
                    && cand_obj > accepted.as_ref().map(|a| a.2).unwrap_or(f64::NEG_INFINITY)
                {
                    accepted = Some((cand, cand_state, cand_obj));
                    step = shorter;
                } else {
                    break;
                }
            }
        }
        match accepted {
            Some((cand, cand_state, cand_obj)) => {
                beta = cand;
                state = cand_state;
                obj = cand_obj;
                iterations += 1;
                trace.push(TracePoint {
                    objective: obj,
                    beta_norm: norm2(&beta),
                });
            }
            None => {
                // No admissible step left at this scale.
                status = if !penalized && norm_growth_with_plateau(&trace) {
                    FitStatus::DivergenceSuspected
                } else {
                    FitStatus::MaxIterations
                };
                break;
            }
        }
    }

    if status == FitStatus::MaxIterations && !penalized && norm_growth_with_plateau(&trace) {
        status = FitStatus::DivergenceSuspected;
    }

    // Refresh the gradient norm at the final iterate when possible.
    if penalized {
        if let Ok(pen) = penalty_at(ds, &state) {
            grad_norm = norm_inf(&(score_at(ds, &state) + &pen.grad));
        }
    } else {
        grad_norm = norm_inf(&score_at(ds, &state));
    }

    let (se, h) = match fisher_info_at(ds, &state) {
        Ok(info) => {
            let inv = info.inverse();
            let se = (0..p).map(|j| inv[[j, j]].sqrt()).collect();
            let h = hat_diagonals(ds, &state, &info);
            (Some(se), Some(h))
        }
        Err(_) => (None, None),
    };

    Ok(FitResult {
        beta_hat: beta.to_vec(),
        objective: obj,
        grad_norm,
        iterations,
        status,
        se,
        h,
        trace,
    })
}

/// True when the last `TREND_WINDOW` accepted steps all grew the parameter
/// norm while the objective stayed flat to `PLATEAU_REL_TOL`.
fn norm_growth_with_plateau(trace: &[TracePoint]) -> bool {
    if trace.len() < TREND_WINDOW + 1 {
        return false;
    }
    let tail = &trace[trace.len() - (TREND_WINDOW + 1)..];
    let growing = tail.windows(2).all(|w| w[1].beta_norm > w[0].beta_norm);
    if !growing {
        return false;
    }
    let first = tail[0].objective;
    let last = tail[tail.len() - 1].objective;
    (last - first).abs() <= PLATEAU_REL_TOL * (1.0 + last.abs())
}
