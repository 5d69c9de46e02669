//! Link functions with numerically stable working-weight evaluation.
//!
//! For each link the per-observation quantities are the response probability
//! `pi`, its derivative `dpi = dpi/deta`, the working weight
//! `w = dpi^2 / (pi (1 - pi))`, and `dw = dw/deta`. Direct formulas lose all
//! precision (or produce 0/0) once `|eta|` grows, so `logw`, `log_dpi`, and
//! the logarithmic derivative `dlogw = dw/w` are evaluated in log space past
//! a switch point and everything else is derived from them.
//!
//! Conventions:
//! - logit:   pi = 1/(1+exp(-eta)),      w = pi (1-pi)
//! - probit:  pi = Phi(eta),             w = phi^2 / (Phi (1-Phi))
//! - cloglog: pi = 1 - exp(-exp(eta)),   w = exp(2 eta) / (exp(exp(eta)) - 1)
//!
//! The complementary log-log weight is often written in terms of z = -eta as
//! exp(-2z)/(exp(exp(-z)) - 1); both forms agree under that substitution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear predictors are clamped to this magnitude before exponentiation.
pub const ETA_CLAMP: f64 = 700.0;

/// Beyond this |eta| the log-space formulas take over from direct evaluation.
const LOG_SPACE_SWITCH: f64 = 30.0;

/// Probit switches to tail asymptotics earlier: phi(z)^2 leaves the normal
/// f64 range near |z| = 26.5 and direct evaluation would go subnormal.
const PROBIT_DIRECT_SWITCH: f64 = 26.0;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Smallest probability stored in a `LinkEval`; keeps `pi` inside (0, 1).
const PI_MIN: f64 = f64::MIN_POSITIVE;
/// Largest probability stored in a `LinkEval` (the double just below 1).
const PI_MAX: f64 = 1.0 - 1e-16;

/// The three supported binomial links. Logit is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Logit,
    Probit,
    Cloglog,
}

impl LinkKind {
    pub const ALL: [LinkKind; 3] = [LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Cloglog => "cloglog",
        }
    }
}

impl std::fmt::Display for LinkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(LinkKind::Logit),
            "probit" => Ok(LinkKind::Probit),
            "cloglog" => Ok(LinkKind::Cloglog),
            other => Err(Error::ParseError(format!("unknown link '{other}'"))),
        }
    }
}

/// Per-observation link quantities at one value of the linear predictor.
#[derive(Debug, Clone, Copy)]
pub struct LinkEval {
    /// Linear predictor as supplied (unclamped).
    pub eta: f64,
    /// Response probability, clamped into the open interval (0, 1).
    pub pi: f64,
    /// dpi/deta; may underflow to 0 in the far tails, `log_dpi` never does.
    pub dpi: f64,
    /// Working weight; may underflow to 0 in the far tails, `logw` never does.
    pub w: f64,
    /// dw/deta.
    pub dw: f64,
    /// log w, evaluated in log space (finite for |eta| <= 700).
    pub logw: f64,
    /// log dpi, evaluated in log space.
    pub log_dpi: f64,
    /// d(log w)/deta = dw/w.
    pub dlogw: f64,
}

/// Numerically stable log(1 + e^x).
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - 0.5 * LN_2PI).exp()
}

/// Standard normal CDF through the complementary error function, so both
/// tails keep relative accuracy until erfc underflows (|z| ~ 37.5).
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Asymptotic series for z * exp(z^2/2) * sqrt(2 pi) * (1 - Phi(z)); valid
/// to machine precision for z >= 26.
#[inline]
fn tail_series(z: f64) -> f64 {
    let s = 1.0 / (z * z);
    1.0 + s * (-1.0 + s * (3.0 + s * (-15.0 + s * (105.0 + s * (-945.0 + s * 10395.0)))))
}

/// log(1 - Phi(z)) for large positive z (callers guarantee z >= 26).
#[inline]
fn log_normal_tail(z: f64) -> f64 {
    debug_assert!(z >= PROBIT_DIRECT_SWITCH);
    -0.5 * z * z - z.ln() - 0.5 * LN_2PI + tail_series(z).ln()
}

/// log Phi(z), finite for all z with |z| <= 700.
pub fn log_normal_cdf(z: f64) -> f64 {
    if z < -LOG_SPACE_SWITCH {
        log_normal_tail(-z)
    } else if z < 8.0 {
        normal_cdf(z).ln()
    } else {
        // 1 - Phi(z) is tiny; ln(1 - tail) through ln_1p
        let tail = if z >= LOG_SPACE_SWITCH {
            log_normal_tail(z).exp()
        } else {
            normal_cdf(-z)
        };
        (-tail).ln_1p()
    }
}

/// phi(z) / (1 - Phi(z)) for large positive z (callers guarantee z >= 30).
#[inline]
fn mills_inverse(z: f64) -> f64 {
    z / tail_series(z)
}

/// Evaluate all link quantities at `eta`.
///
/// `eta` must be finite; it is clamped to +-700 before any exponentiation.
pub fn link_eval(link: LinkKind, eta: f64) -> Result<LinkEval> {
    if !eta.is_finite() {
        return Err(Error::NonFiniteInput("eta must be finite"));
    }
    let e = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    let eval = match link {
        LinkKind::Logit => logit_eval(eta, e),
        LinkKind::Probit => probit_eval(eta, e),
        LinkKind::Cloglog => cloglog_eval(eta, e),
    };
    Ok(eval)
}

fn logit_eval(eta: f64, e: f64) -> LinkEval {
    let pi = sigmoid(e).clamp(PI_MIN, PI_MAX);
    let w = sigmoid(e) * sigmoid(-e);
    let logw = -softplus(e) - softplus(-e);
    let dlogw = 1.0 - 2.0 * pi;
    LinkEval {
        eta,
        pi,
        dpi: w,
        w,
        dw: w * dlogw,
        logw,
        log_dpi: logw,
        dlogw,
    }
}

fn probit_eval(eta: f64, z: f64) -> LinkEval {
    let az = z.abs();
    if az <= PROBIT_DIRECT_SWITCH {
        let lo = normal_cdf(z);
        let hi = normal_cdf(-z);
        let dpi = normal_pdf(z);
        let w = dpi * dpi / (lo * hi);
        // d log w / d eta = -2z - phi/Phi + phi/(1 - Phi)
        let dlogw = -2.0 * z - dpi / lo + dpi / hi;
        LinkEval {
            eta,
            pi: lo.clamp(PI_MIN, PI_MAX),
            dpi,
            w,
            dw: w * dlogw,
            logw: w.ln(),
            log_dpi: -0.5 * z * z - 0.5 * LN_2PI,
            dlogw,
        }
    } else {
        // Work at |z| and mirror; w is even in z, dlogw is odd.
        let log_tail = log_normal_tail(az);
        let log_dpi = -0.5 * az * az - 0.5 * LN_2PI;
        let tail = log_tail.exp();
        let log_cdf_big = (-tail).ln_1p();
        let logw = 2.0 * log_dpi - log_cdf_big - log_tail;
        let w = logw.exp();
        let phi = log_dpi.exp();
        let dlogw_pos = -2.0 * az - phi / (1.0 - tail) + mills_inverse(az);
        let (pi, dlogw) = if z > 0.0 {
            ((1.0 - tail).clamp(PI_MIN, PI_MAX), dlogw_pos)
        } else {
            (tail.clamp(PI_MIN, PI_MAX), -dlogw_pos)
        };
        LinkEval {
            eta,
            pi,
            dpi: phi,
            w,
            dw: w * dlogw,
            logw,
            log_dpi,
            dlogw,
        }
    }
}

fn cloglog_eval(eta: f64, e: f64) -> LinkEval {
    let t = e.exp(); // in [exp(-700), exp(700)], always finite and positive
    let one_minus_exp_neg_t = -(-t).exp_m1(); // 1 - e^{-t}, accurate for small t
    let pi = one_minus_exp_neg_t.clamp(PI_MIN, PI_MAX);
    let log_dpi = e - t; // log(t e^{-t})
    let dpi = log_dpi.exp();
    // log(e^t - 1): expm1 below the overflow knee, t + ln(1 - e^{-t}) above
    let log_expm1_t = if t <= LOG_SPACE_SWITCH {
        t.exp_m1().ln()
    } else {
        t + (-t).exp().ln_1p()
    };
    let logw = 2.0 * e - log_expm1_t;
    let w = if t <= LOG_SPACE_SWITCH {
        t * t / t.exp_m1()
    } else {
        logw.exp()
    };
    let dlogw = 2.0 - t / one_minus_exp_neg_t;
    LinkEval {
        eta,
        pi,
        dpi,
        w,
        dw: w * dlogw,
        logw,
        log_dpi,
        dlogw,
    }
}

/// (log pi, log(1 - pi)) in stable form; used by the log-likelihood.
pub fn log_pi_pair(link: LinkKind, eta: f64) -> (f64, f64) {
    let e = eta.clamp(-ETA_CLAMP, ETA_CLAMP);
    match link {
        LinkKind::Logit => (-softplus(-e), -softplus(e)),
        LinkKind::Probit => (log_normal_cdf(e), log_normal_cdf(-e)),
        LinkKind::Cloglog => {
            let t = e.exp();
            let log_pi = if t < 0.5 {
                (-(-t).exp_m1()).ln()
            } else {
                (-(-t).exp()).ln_1p()
            };
            (log_pi, -t)
        }
    }
}
