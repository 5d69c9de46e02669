//! Unit-sphere scans of the information determinant.
//!
//! The determinant of X'MW(ru)X collapses double-exponentially as the
//! radius r grows, far past what f64 can represent directly, so every scan
//! works with the log-determinant through the log-space subset expansion.
//! Suprema over the sphere are estimated by seeded sampling plus a local
//! coordinate refinement; an estimated supremum is a lower bound, which is
//! the safe direction for checking that determinants FAIL to stay large.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::harness::envelope::envelope_constant;
use crate::harness::rng::SeededRng;
use crate::link::{link_eval, LinkKind};
use crate::model::ModelState;
use crate::penalty::{binet_cauchy_logdet_at, minor_coefficient_sum, ORACLE_MAX_N};

/// Configuration for sphere scans.
#[derive(Debug, Clone)]
pub struct SphereScanConfig {
    /// Number of quasi-uniform unit vectors sampled per radius.
    pub samples: usize,
    /// Local coordinate-refinement passes applied to the best sample.
    pub refine_steps: usize,
    /// Radii scanned by `decay_curve`, strictly increasing from 0.
    pub radii: Vec<f64>,
    pub seed: u64,
}

impl Default for SphereScanConfig {
    fn default() -> Self {
        Self {
            samples: 4096,
            refine_steps: 50,
            radii: vec![0.0, 5.0, 10.0, 20.0, 40.0],
            seed: 7,
        }
    }
}

/// Decay of the sphere supremum of det X'MW(ru)X across radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub link: LinkKind,
    pub radii: Vec<f64>,
    /// Supremum estimates of log det per radius.
    pub sup_logdet: Vec<f64>,
    /// The same suprema in determinant scale (exp; may underflow to 0).
    pub sup_det: Vec<f64>,
    /// Smallest design row norm; only meaningful for square designs.
    pub min_row_norm: f64,
    /// Estimated minimum over the sphere of the |cos| angle sum.
    pub min_cos_sum: f64,
    /// Sum of squared p x p minors of X times the subset trial products:
    /// the radius-zero coefficient of the decay envelope.
    pub coefficient_sum: f64,
    /// Fitted exponential decay rate (largest rate consistent with every
    /// positive radius); positive exactly when the curve decays.
    pub decay_rate: f64,
    /// Per-radius check of sup <= coefficient_sum * exp(-rate * r).
    pub bound_ok: Vec<bool>,
    /// For square designs: the per-sample product bound
    /// prod_i w_i(r u) <= C^n exp(-a c r) held at every sample and radius
    /// (C = 1 under the logit link).
    pub product_bound_ok: Option<bool>,
    /// Supremum strictly decreasing across consecutive radii past the first.
    pub strictly_decreasing: bool,
    /// sup at the largest radius below 1e-8 times sup at the first radius.
    pub tail_collapse_ok: bool,
    pub square: bool,
}

/// Deterministic quasi-uniform unit vectors; p = 1 degenerates to {+1, -1}.
pub fn unit_sphere_samples(p: usize, cfg: &SphereScanConfig) -> Vec<Array1<f64>> {
    if p == 1 {
        return vec![Array1::from_vec(vec![1.0]), Array1::from_vec(vec![-1.0])];
    }
    let mut rng = SeededRng::new(cfg.seed).child(0x5f3759df);
    (0..cfg.samples.max(1)).map(|_| rng.unit_vector(p)).collect()
}

/// log det X'MW(beta)X, finite in log space wherever some subset keeps a
/// representable weight product; -inf is an honest answer for total decay.
pub fn log_det_information(ds: &Dataset, link: LinkKind, beta: &Array1<f64>) -> Result<f64> {
    let state = ModelState::new(ds, link, &beta.view())?;
    if ds.n() <= ORACLE_MAX_N {
        Ok(binet_cauchy_logdet_at(ds, &state))
    } else {
        // Larger designs: factor the scaled information and undo the scale.
        scaled_cholesky_logdet(ds, &state)
    }
}

fn scaled_cholesky_logdet(ds: &Dataset, state: &ModelState) -> Result<f64> {
    let max_logw = state
        .evals
        .iter()
        .map(|ev| ev.logw)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max_logw.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let p = ds.p();
    let mut a = Array2::<f64>::zeros((p, p));
    for i in 0..ds.n() {
        let scaled_w = (state.evals[i].logw - max_logw).exp();
        let mw = ds.m()[i] as f64 * scaled_w;
        for j in 0..p {
            for k in j..p {
                a[[j, k]] += mw * ds.x()[[i, j]] * ds.x()[[i, k]];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[[j, k]] = a[[k, j]];
        }
    }
    match crate::linalg::Cholesky::factor(&a.view()) {
        Ok(chol) => Ok(chol.log_det() + p as f64 * max_logw),
        Err(_) => Ok(f64::NEG_INFINITY),
    }
}

/// Supremum estimate of det X'MW(ru)X over the unit sphere, in det scale.
pub fn sphere_sup_det(ds: &Dataset, link: LinkKind, r: f64, cfg: &SphereScanConfig) -> f64 {
    sphere_sup_logdet(ds, link, r, cfg, &unit_sphere_samples(ds.p(), cfg)).0.exp()
}

/// Supremum estimate in log scale along with the maximizing direction.
pub fn sphere_sup_logdet(
    ds: &Dataset,
    link: LinkKind,
    r: f64,
    cfg: &SphereScanConfig,
    samples: &[Array1<f64>],
) -> (f64, Array1<f64>) {
    let eval = |u: &Array1<f64>| -> f64 {
        let beta = u.mapv(|t| t * r);
        log_det_information(ds, link, &beta).unwrap_or(f64::NEG_INFINITY)
    };
    let mut best_val = f64::NEG_INFINITY;
    let mut best_u = samples[0].clone();
    for u in samples {
        let v = eval(u);
        if v > best_val {
            best_val = v;
            best_u = u.clone();
        }
    }
    if ds.p() > 1 {
        let (v, u) = refine_on_sphere(&eval, best_u, best_val, cfg.refine_steps, true);
        (v, u)
    } else {
        (best_val, best_u)
    }
}

/// Coordinate-wise refinement of `u` on the sphere; maximizes or minimizes.
fn refine_on_sphere(
    eval: &dyn Fn(&Array1<f64>) -> f64,
    mut u: Array1<f64>,
    mut value: f64,
    steps: usize,
    maximize: bool,
) -> (f64, Array1<f64>) {
    let better = |candidate: f64, incumbent: f64| {
        if maximize {
            candidate > incumbent
        } else {
            candidate < incumbent
        }
    };
    let p = u.len();
    let mut delta = 0.25;
    for _ in 0..steps {
        let mut improved = false;
        for j in 0..p {
            for sign in [1.0, -1.0] {
                let mut cand = u.clone();
                cand[j] += sign * delta;
                let norm = cand.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    continue;
                }
                cand.mapv_inplace(|t| t / norm);
                let v = eval(&cand);
                if better(v, value) {
                    u = cand;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            delta *= 0.5;
            if delta < 1e-10 {
                break;
            }
        }
    }
    (value, u)
}

/// Estimated minimum over the unit sphere of sum_i |cos angle(x_i, u)|.
/// Full-rank designs keep this strictly positive.
pub fn min_abs_cos_sum(x: &ArrayView2<f64>, cfg: &SphereScanConfig) -> f64 {
    let (n, p) = x.dim();
    let norms: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().map(|t| t * t).sum::<f64>().sqrt())
        .collect();
    let eval = |u: &Array1<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            if norms[i] > 0.0 {
                let dot: f64 = x.row(i).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                s += dot.abs() / norms[i];
            }
        }
        s
    };
    if p == 1 {
        return eval(&Array1::from_vec(vec![1.0]));
    }
    let mut rng = SeededRng::new(cfg.seed).child(0x0c05_5011);
    let mut best_val = f64::INFINITY;
    let mut best_u = Array1::zeros(p);
    for _ in 0..cfg.samples.max(1) {
        let u = rng.unit_vector(p);
        let v = eval(&u);
        if v < best_val {
            best_val = v;
            best_u = u;
        }
    }
    refine_on_sphere(&eval, best_u, best_val, cfg.refine_steps, false).0
}

/// Scan the sphere supremum across the configured radii and check the
/// exponential-decay envelope.
pub fn decay_curve(ds: &Dataset, link: LinkKind, cfg: &SphereScanConfig) -> Result<DecayReport> {
    let square = ds.n() == ds.p();
    let min_row_norm = ds.min_row_norm();
    if square && min_row_norm <= 0.0 {
        let zero_row = (0..ds.n())
            .find(|&i| ds.row(i).iter().map(|t| t * t).sum::<f64>() == 0.0)
            .unwrap_or(0);
        return Err(Error::ZeroRowNorm(zero_row));
    }
    if !ds.full_column_rank() {
        return Err(Error::RankDeficient);
    }

    let samples = unit_sphere_samples(ds.p(), cfg);
    let mut sup_logdet = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        let (v, _) = sphere_sup_logdet(ds, link, r, cfg, &samples);
        sup_logdet.push(v);
    }
    let sup_det: Vec<f64> = sup_logdet.iter().map(|v| v.exp()).collect();

    let min_cos_sum = min_abs_cos_sum(&ds.x(), cfg);
    let coefficient_sum = minor_coefficient_sum(ds)?;
    let log_coeff = coefficient_sum.ln();

    // Largest decay rate consistent with every positive radius.
    let mut decay_rate = f64::INFINITY;
    for (i, &r) in cfg.radii.iter().enumerate() {
        if r > 0.0 {
            decay_rate = decay_rate.min((log_coeff - sup_logdet[i]) / r);
        }
    }
    if !decay_rate.is_finite() {
        decay_rate = 0.0;
    }
    let bound_ok: Vec<bool> = cfg
        .radii
        .iter()
        .zip(&sup_logdet)
        .map(|(&r, &s)| s <= log_coeff - decay_rate * r + 1e-9)
        .collect();

    // Square case: the per-sample weight-product bound
    // sum_i log w_i(r u) <= n log C - a c r.
    let product_bound_ok = if square {
        let log_c = envelope_constant(link).ln();
        let a = min_row_norm;
        let mut ok = true;
        'outer: for &r in &cfg.radii {
            for u in &samples {
                let mut logw_sum = 0.0;
                for i in 0..ds.n() {
                    let eta = r * ds.row(i).dot(u);
                    logw_sum += link_eval(link, eta)?.logw;
                }
                if logw_sum > ds.n() as f64 * log_c - a * min_cos_sum * r + 1e-9 {
                    ok = false;
                    break 'outer;
                }
            }
        }
        Some(ok)
    } else {
        None
    };

    let strictly_decreasing = sup_logdet.windows(2).skip(1).all(|w| w[1] < w[0]);
    let tail_collapse_ok = match (sup_logdet.first(), sup_logdet.last()) {
        (Some(&first), Some(&last)) => last < first + (1e-8f64).ln(),
        _ => false,
    };

    Ok(DecayReport {
        link,
        radii: cfg.radii.clone(),
        sup_logdet,
        sup_det,
        min_row_norm,
        min_cos_sum,
        coefficient_sum,
        decay_rate,
        bound_ok,
        product_bound_ok,
        strictly_decreasing,
        tail_collapse_ok,
        square,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cfg() -> SphereScanConfig {
        SphereScanConfig {
            samples: 512,
            ..SphereScanConfig::default()
        }
    }

    #[test]
    fn scalar_design_sup_values() {
        let ds = Dataset::new(array![[1.0]], vec![0], vec![1]).unwrap();
        let cfg = cfg();
        assert_abs_diff_eq!(
            sphere_sup_det(&ds, LinkKind::Logit, 0.0, &cfg),
            0.25,
            epsilon = 1e-12
        );
        let e5 = 5.0f64.exp();
        let expected = e5 / ((1.0 + e5) * (1.0 + e5));
        assert_abs_diff_eq!(
            sphere_sup_det(&ds, LinkKind::Logit, 5.0, &cfg),
            expected,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(expected, 0.006_648_1, epsilon = 1e-7);
    }

    #[test]
    fn identity_design_sup_at_zero() {
        let ds = Dataset::new(array![[1.0, 0.0], [0.0, 1.0]], vec![0, 1], vec![1, 1]).unwrap();
        assert_abs_diff_eq!(
            sphere_sup_det(&ds, LinkKind::Logit, 0.0, &cfg()),
            0.0625,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cos_sum_examples() {
        let cfg = cfg();
        let x1 = array![[1.0]];
        assert_abs_diff_eq!(min_abs_cos_sum(&x1.view(), &cfg), 1.0, epsilon = 1e-12);

        let axes = array![[1.0, 0.0], [0.0, 1.0]];
        let c = min_abs_cos_sum(&axes.view(), &cfg);
        assert!((c - 1.0).abs() < 1e-4, "c = {c}");

        // rank-1 stack: a direction orthogonal to the shared row exists
        let collinear = array![[1.0, 0.0], [2.0, 0.0]];
        assert!(min_abs_cos_sum(&collinear.view(), &cfg) < 1e-3);
    }

    #[test]
    fn scalar_decay_matches_weight_bound() {
        let ds = Dataset::new(array![[1.0]], vec![0], vec![1]).unwrap();
        let mut c = cfg();
        c.radii = vec![0.0, 5.0, 10.0, 20.0, 40.0];
        let report = decay_curve(&ds, LinkKind::Logit, &c).unwrap();
        assert!(report.square);
        assert_abs_diff_eq!(report.min_row_norm, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.min_cos_sum, 1.0, epsilon = 1e-12);
        // sup at r=10 is w(10), just below exp(-10)
        let w10 = report.sup_det[2];
        assert_abs_diff_eq!(w10, 4.539_58e-5, epsilon = 1e-9);
        assert!(w10 <= (-10.0f64).exp());
        assert_eq!(report.product_bound_ok, Some(true));
        assert!(report.strictly_decreasing);
        assert!(report.tail_collapse_ok);
        assert!(report.decay_rate > 0.0);
    }

    #[test]
    fn seeded_rectangular_design_decays() {
        let mut rng = SeededRng::new(2025);
        let mut x = Array2::<f64>::zeros((6, 2));
        for i in 0..6 {
            for j in 0..2 {
                x[[i, j]] = rng.uniform(-2.0, 2.0);
            }
        }
        let ds = Dataset::new(x, vec![1, 0, 1, 0, 1, 0], vec![1; 6]).unwrap();
        let mut c = cfg();
        c.radii = vec![0.0, 5.0, 10.0, 20.0, 40.0];
        let report = decay_curve(&ds, LinkKind::Logit, &c).unwrap();
        assert!(!report.square);
        assert!(report.strictly_decreasing);
        assert!(report.tail_collapse_ok);
        assert!(report.decay_rate > 0.0);
        assert!(report.bound_ok.iter().all(|&b| b));
    }

    #[test]
    fn zero_row_square_design_is_rejected() {
        let ds = Dataset::new(array![[0.0, 0.0], [0.0, 1.0]], vec![0, 1], vec![1, 1]).unwrap();
        assert!(matches!(
            decay_curve(&ds, LinkKind::Logit, &cfg()),
            Err(Error::ZeroRowNorm(0))
        ));
    }

    #[test]
    fn log_det_information_survives_underflow() {
        let ds = Dataset::new(array![[1.0], [-1.0]], vec![0, 1], vec![1, 1]).unwrap();
        let beta = Array1::from_vec(vec![400.0]);
        let v = log_det_information(&ds, LinkKind::Logit, &beta).unwrap();
        assert!(v.is_finite());
        assert!(v < -300.0);
    }
}

#[cfg(test)]
mod debug_tests {
    use super::*;
    use crate::harness::rng::SeededRng;

    #[test]
    fn debug_rect_decay() {
        let mut rng = SeededRng::new(2025);
        let mut x = Array2::<f64>::zeros((6, 2));
        for i in 0..6 {
            for j in 0..2 {
                x[[i, j]] = rng.uniform(-2.0, 2.0);
            }
        }
        println!("X = {x:?}");
        let ds = Dataset::new(x, vec![1, 0, 1, 0, 1, 0], vec![1; 6]).unwrap();
        let cfg = SphereScanConfig { samples: 512, ..SphereScanConfig::default() };
        let report = decay_curve(&ds, LinkKind::Logit, &cfg).unwrap();
        println!("sup_logdet = {:?}", report.sup_logdet);
        println!("row norms: {:?}", (0..6).map(|i| ds.row(i).iter().map(|v| v*v).sum::<f64>().sqrt()).collect::<Vec<_>>());
        println!("min_cos_sum = {}", report.min_cos_sum);
        println!("rate = {}", report.decay_rate);
    }
}
