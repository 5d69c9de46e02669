//! Unpenalized binomial log-likelihood, score, and expected information.

use ndarray::{Array1, Array2, ArrayView1};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::link::{link_eval, log_pi_pair, softplus, LinkEval, LinkKind, ETA_CLAMP};

/// Model state at one parameter value: eta = X beta and all link quantities.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub beta: Array1<f64>,
    pub eta: Array1<f64>,
    pub evals: Vec<LinkEval>,
}

impl ModelState {
    pub fn new(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<Self> {
        if beta.len() != ds.p() {
            return Err(Error::DimensionMismatch(format!(
                "beta has length {}, expected {}",
                beta.len(),
                ds.p()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFiniteInput("beta must be finite"));
        }
        let eta = ds.x().dot(beta);
        let evals = eta
            .iter()
            .map(|&e| link_eval(link, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelState {
            beta: beta.to_owned(),
            eta,
            evals,
        })
    }
}

/// Binomial log-likelihood up to the additive binomial-coefficient constant.
pub fn log_likelihood(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<f64> {
    let state = ModelState::new(ds, link, beta)?;
    let value = log_likelihood_at(ds, link, &state);
    if value.is_nan() {
        return Err(Error::NonFiniteResult("log_likelihood"));
    }
    Ok(value)
}

pub(crate) fn log_likelihood_at(ds: &Dataset, link: LinkKind, state: &ModelState) -> f64 {
    let mut terms = Vec::with_capacity(ds.n());
    match link {
        LinkKind::Logit => {
            // sum_i [ y_i eta_i - m_i log(1 + exp(eta_i)) ]
            for i in 0..ds.n() {
                let e = state.eta[i].clamp(-ETA_CLAMP, ETA_CLAMP);
                terms.push(ds.y()[i] as f64 * e - ds.m()[i] as f64 * softplus(e));
            }
        }
        _ => {
            for i in 0..ds.n() {
                let (log_pi, log_1mpi) = log_pi_pair(link, state.eta[i]);
                let y = ds.y()[i] as f64;
                let fails = (ds.m()[i] - ds.y()[i]) as f64;
                let mut t = 0.0;
                if y > 0.0 {
                    t += y * log_pi;
                }
                if fails > 0.0 {
                    t += fails * log_1mpi;
                }
                terms.push(t);
            }
        }
    }
    crate::linalg::pairwise_sum(&terms)
}

/// Score vector: component j is sum_i (y_i - m_i pi_i) (w_i / dpi_i) x_ij,
/// which reduces to sum_i (y_i - m_i pi_i) x_ij under the logit link.
pub fn score(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let state = ModelState::new(ds, link, beta)?;
    let s = score_at(ds, &state);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult("score"));
    }
    Ok(s)
}

pub(crate) fn score_at(ds: &Dataset, state: &ModelState) -> Array1<f64> {
    let p = ds.p();
    let mut out = Array1::<f64>::zeros(p);
    for i in 0..ds.n() {
        let ev = &state.evals[i];
        let resid = ds.y()[i] as f64 - ds.m()[i] as f64 * ev.pi;
        let coeff = resid * score_ratio(ev);
        for j in 0..p {
            out[j] += coeff * ds.x()[[i, j]];
        }
    }
    out
}

/// w / dpi = dpi / (pi (1 - pi)), computed through the log fields when the
/// direct ratio would be 0/0 in the far tails.
#[inline]
fn score_ratio(ev: &LinkEval) -> f64 {
    if ev.w >= f64::MIN_POSITIVE && ev.dpi >= f64::MIN_POSITIVE {
        ev.w / ev.dpi
    } else {
        (ev.logw - ev.log_dpi).exp()
    }
}

/// Expected information A = X^T M W X together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct FisherInfo {
    matrix: Array2<f64>,
    chol: Cholesky,
}

impl FisherInfo {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &ArrayView1<f64>) -> Array1<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> Array2<f64> {
        self.chol.inverse()
    }
}

/// Assemble and factor the expected information at `beta`.
pub fn fisher_info(ds: &Dataset, link: LinkKind, beta: &ArrayView1<f64>) -> Result<FisherInfo> {
    let state = ModelState::new(ds, link, beta)?;
    fisher_info_at(ds, &state)
}

pub(crate) fn fisher_info_at(ds: &Dataset, state: &ModelState) -> Result<FisherInfo> {
    let matrix = information_matrix(ds, state);
    let chol = Cholesky::factor(&matrix.view())?;
    Ok(FisherInfo { matrix, chol })
}

pub(crate) fn information_matrix(ds: &Dataset, state: &ModelState) -> Array2<f64> {
    let (n, p) = (ds.n(), ds.p());
    let mut a = Array2::<f64>::zeros((p, p));
    for i in 0..n {
        let mw = ds.m()[i] as f64 * state.evals[i].w;
        for j in 0..p {
            let xj = ds.x()[[i, j]];
            for k in j..p {
                a[[j, k]] += mw * xj * ds.x()[[i, k]];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[[j, k]] = a[[k, j]];
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn two_point() -> Dataset {
        Dataset::new(array![[1.0], [-1.0]], vec![1, 0], vec![1, 1]).unwrap()
    }

    #[test]
    fn loglik_closed_forms() {
        let ds = two_point();
        let l0 = log_likelihood(&ds, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(l0, -2.0 * 2.0f64.ln(), epsilon = 1e-12);

        let l1 = log_likelihood(&ds, LinkKind::Logit, &array![1.0].view()).unwrap();
        let e = std::f64::consts::E;
        let expected = 1.0 - (1.0 + e).ln() - (1.0 + 1.0 / e).ln();
        assert_abs_diff_eq!(l1, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(l1, -0.626_523_3, epsilon = 1e-7);

        let intercept = Dataset::new(array![[1.0]], vec![0], vec![5]).unwrap();
        let l = log_likelihood(&intercept, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(l, -5.0 * 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn logit_score_hand_value() {
        let ds = two_point();
        let s = score(&ds, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn score_vanishes_at_saturated_fit() {
        // y_i = m_i pi_i exactly at beta = 0 (pi = 1/2, m = 2, y = 1).
        let ds = Dataset::new(array![[1.0], [-2.0], [0.5]], vec![1, 1, 1], vec![2, 2, 2]).unwrap();
        let s = score(&ds, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(s[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn score_matches_central_differences() {
        use crate::harness::rng::SeededRng;
        use crate::testutil::random_instance;
        let mut rng = SeededRng::new(2024);
        let h = 1e-6;
        for _ in 0..50 {
            let (ds, link, beta) = random_instance(&mut rng, 3.0);
            let s = score(&ds, link, &beta.view()).unwrap();
            let mut fd = Array1::<f64>::zeros(ds.p());
            for j in 0..ds.p() {
                let mut up = beta.clone();
                up[j] += h;
                let mut dn = beta.clone();
                dn[j] -= h;
                fd[j] = (log_likelihood(&ds, link, &up.view()).unwrap()
                    - log_likelihood(&ds, link, &dn.view()).unwrap())
                    / (2.0 * h);
            }
            let diff = (&fd - &s).iter().map(|v| v * v).sum::<f64>().sqrt();
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                diff <= 1e-6 * norm.max(0.1),
                "{link}: fd={fd:?} score={s:?}"
            );
        }
    }

    #[test]
    fn information_closed_forms() {
        let ds = two_point();
        let info = fisher_info(&ds, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(info.matrix()[[0, 0]], 0.5, epsilon = 1e-14);

        let intercept = Dataset::new(array![[1.0]], vec![0], vec![4]).unwrap();
        let info = fisher_info(&intercept, LinkKind::Logit, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(info.matrix()[[0, 0]], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn information_matches_outer_product_sum() {
        use crate::harness::rng::SeededRng;
        use crate::testutil::random_instance;
        let mut rng = SeededRng::new(7);
        for _ in 0..20 {
            let (ds, link, beta) = random_instance(&mut rng, 2.0);
            let state = ModelState::new(&ds, link, &beta.view()).unwrap();
            let a = information_matrix(&ds, &state);
            // brute-force oracle: accumulate m_i w_i x_i x_i^T row by row
            let p = ds.p();
            let mut oracle = Array2::<f64>::zeros((p, p));
            for i in 0..ds.n() {
                let mw = ds.m()[i] as f64 * state.evals[i].w;
                for j in 0..p {
                    for k in 0..p {
                        oracle[[j, k]] += mw * ds.x()[[i, j]] * ds.x()[[i, k]];
                    }
                }
            }
            for j in 0..p {
                for k in 0..p {
                    assert_abs_diff_eq!(a[[j, k]], oracle[[j, k]], epsilon = 1e-12);
                }
            }
        }
    }

}
