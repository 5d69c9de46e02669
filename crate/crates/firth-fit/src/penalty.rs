//! Jeffreys-prior penalty: half the log-determinant of the expected
//! information, its exact gradient through the trace identity, hat
//! diagonals, and a subset-expansion determinant oracle.

use itertools::Itertools;
use ndarray::{Array1, Array2, ArrayView1};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{det_in_place, log_sum_exp, pairwise_sum, Cholesky};
use crate::link::LinkKind;
use crate::model::{
    fisher_info_at, information_matrix, log_likelihood_at, score_at, FisherInfo, ModelState,
};

/// Largest n accepted by the combinatorial determinant oracle.
pub const ORACLE_MAX_N: usize = 25;

/// Penalty evaluation at one parameter value.
#[derive(Debug, Clone)]
pub struct PenaltyEval {
    /// A = X^T M W X with its Cholesky factor.
    pub info: FisherInfo,
    /// log det A.
    pub logdet: f64,
    /// Hat diagonals h_i = m_i w_i x_i^T A^{-1} x_i; sums to p.
    pub h: Vec<f64>,
    /// Gradient of (1/2) log det A: component j is
    /// (1/2) sum_i (w_i'/w_i) h_i x_ij.
    pub grad: Array1<f64>,
}

impl PenaltyEval {
    /// (1/2) log det A, the penalty term itself.
    pub fn value(&self) -> f64 {
        0.5 * self.logdet
    }
}

/// Evaluate the penalty, hat diagonals, and penalty gradient at `beta`.
///
/// A failed Cholesky factorization surfaces as `CholeskyFailure`; callers
/// that only need the objective treat it as a penalty of negative infinity.
pub fn penalty(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<PenaltyEval> {
    let state = ModelState::new(ds, link, beta)?;
    penalty_at(ds, &state)
}

pub(crate) fn penalty_at(ds: &Dataset, state: &ModelState) -> Result<PenaltyEval> {
    let info = fisher_info_at(ds, state)?;
    let h = hat_diagonals(ds, state, &info);
    let grad = penalty_gradient_from_hat(ds, state, &h);
    Ok(PenaltyEval {
        logdet: info.log_det(),
        info,
        h,
        grad,
    })
}

pub(crate) fn hat_diagonals(ds: &Dataset, state: &ModelState, info: &FisherInfo) -> Vec<f64> {
    (0..ds.n())
        .map(|i| {
            let xi = ds.row(i);
            let v = info.solve(&xi);
            ds.m()[i] as f64 * state.evals[i].w * xi.dot(&v)
        })
        .collect()
}

fn penalty_gradient_from_hat(ds: &Dataset, state: &ModelState, h: &[f64]) -> Array1<f64> {
    let p = ds.p();
    let mut grad = Array1::<f64>::zeros(p);
    for i in 0..ds.n() {
        let coeff = 0.5 * state.evals[i].dlogw * h[i];
        for j in 0..p {
            grad[j] += coeff * ds.x()[[i, j]];
        }
    }
    grad
}

/// Penalized log-likelihood l*(beta) = l(beta) + (1/2) log det A.
///
/// Returns negative infinity instead of failing when the determinant
/// underflows or `beta` is not finite, so line searches can retreat.
pub fn penalized_loglik(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> f64 {
    let Ok(state) = ModelState::new(ds, link, beta) else {
        return f64::NEG_INFINITY;
    };
    penalized_loglik_at(ds, link, &state)
}

pub(crate) fn penalized_loglik_at(ds: &Dataset, link: LinkKind, state: &ModelState) -> f64 {
    let matrix = information_matrix(ds, state);
    match Cholesky::factor(&matrix.view()) {
        Ok(chol) => log_likelihood_at(ds, link, state) + 0.5 * chol.log_det(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Gradient of the penalized log-likelihood: score plus penalty gradient.
pub fn penalized_gradient(
    ds: &Dataset,
    link: LinkKind,
    beta: &ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let state = ModelState::new(ds, link, beta)?;
    let pen = penalty_at(ds, &state).map_err(|e| match e {
        Error::CholeskyFailure { .. } => Error::NoGradient,
        other => other,
    })?;
    Ok(score_at(ds, &state) + &pen.grad)
}

/// Brute-force determinant of X^T M W X by the subset expansion: the sum
/// over all p-row subsets of (squared p x p minor of X) times the product of
/// the subset's m_i w_i. Nonnegative by construction.
pub fn binet_cauchy_det(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<f64> {
    if ds.n() > ORACLE_MAX_N {
        return Err(Error::TooLargeForOracle {
            n: ds.n(),
            limit: ORACLE_MAX_N,
        });
    }
    let state = ModelState::new(ds, link, beta)?;
    let terms = subset_terms(ds, &state, |minor, weight_log, weights_finite| {
        if weights_finite {
            minor * minor * weight_log.exp()
        } else {
            0.0
        }
    });
    Ok(pairwise_sum(&terms))
}

/// log det X^T M W X through the same expansion, evaluated entirely in log
/// space so it stays finite long after every individual weight underflows.
pub fn binet_cauchy_logdet(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<f64> {
    if ds.n() > ORACLE_MAX_N {
        return Err(Error::TooLargeForOracle {
            n: ds.n(),
            limit: ORACLE_MAX_N,
        });
    }
    let state = ModelState::new(ds, link, beta)?;
    Ok(binet_cauchy_logdet_at(ds, &state))
}

pub(crate) fn binet_cauchy_logdet_at(ds: &Dataset, state: &ModelState) -> f64 {
    let terms = subset_terms(ds, state, |minor, weight_log, _| {
        if minor == 0.0 {
            f64::NEG_INFINITY
        } else {
            2.0 * minor.abs().ln() + weight_log
        }
    });
    log_sum_exp(&terms)
}

/// Sum of squared minors times the subset trial-count products (the weights
/// replaced by one); the leading coefficient of the decay bound.
pub fn minor_coefficient_sum(ds: &Dataset) -> Result<f64> {
    if ds.n() > ORACLE_MAX_N {
        return Err(Error::TooLargeForOracle {
            n: ds.n(),
            limit: ORACLE_MAX_N,
        });
    }
    let (n, p) = (ds.n(), ds.p());
    let mut terms = Vec::new();
    for subset in (0..n).combinations(p) {
        let minor = subset_minor(ds, &subset);
        let m_prod: f64 = subset.iter().map(|&i| ds.m()[i] as f64).product();
        terms.push(minor * minor * m_prod);
    }
    Ok(pairwise_sum(&terms))
}

/// Enumerate p-subsets in lexicographic order and map each to a term from
/// its minor and the log of its weight product.
fn subset_terms(
    ds: &Dataset,
    state: &ModelState,
    term: impl Fn(f64, f64, bool) -> f64,
) -> Vec<f64> {
    let (n, p) = (ds.n(), ds.p());
    let mut terms = Vec::new();
    for subset in (0..n).combinations(p) {
        let minor = subset_minor(ds, &subset);
        let mut weight_log = 0.0;
        let mut weights_finite = true;
        for &i in &subset {
            weight_log += (ds.m()[i] as f64).ln() + state.evals[i].logw;
            if state.evals[i].w < f64::MIN_POSITIVE {
                weights_finite = false;
            }
        }
        terms.push(term(minor, weight_log, weights_finite));
    }
    terms
}

fn subset_minor(ds: &Dataset, subset: &[usize]) -> f64 {
    let p = ds.p();
    let mut sub = Array2::<f64>::zeros((p, p));
    for (r, &i) in subset.iter().enumerate() {
        for c in 0..p {
            sub[[r, c]] = ds.x()[[i, c]];
        }
    }
    det_in_place(&mut sub)
}
