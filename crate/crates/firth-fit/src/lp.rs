//! Dense two-phase primal simplex for small box-bounded linear programs.
//!
//! Problems are converted to standard form: variables shifted to make the
//! lower bound zero, upper bounds added as explicit rows, slack and
//! artificial variables appended. Bland's rule picks the entering and
//! leaving variables, which rules out cycling; a pivot-count guard catches
//! anything else going wrong numerically.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
const TOL: f64 = 1e-9;
/// Hard cap on total pivots.
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

/// A maximization problem over box-bounded variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Coefficients of the objective to maximize.
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
    /// Per-variable (lower, upper); must be finite.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (ncols + 1), rhs last
    obj: Vec<f64>,       // reduced costs, objective value last
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.rows[r][q];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i != r {
                let f = self.rows[i][q];
                if f != 0.0 {
                    for j in 0..=self.ncols {
                        self.rows[i][j] -= f * self.rows[r][j];
                    }
                }
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for j in 0..=self.ncols {
                self.obj[j] -= f * self.rows[r][j];
            }
        }
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Run the simplex to optimality under Bland's rule. `allowed` masks the
    /// columns permitted to enter the basis.
    fn optimize(&mut self, allowed: &[bool]) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::LpNumericalFailure("cycling guard exhausted"));
            }
            // Bland: smallest-index improving column.
            let entering = (0..self.ncols).find(|&j| allowed[j] && self.obj[j] < -TOL);
            let Some(q) = entering else {
                return Ok(());
            };
            // Ratio test; ties resolved toward the smallest basis index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][q];
                if a > TOL {
                    let ratio = self.rows[i][self.ncols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((best_i, best_r)) => {
                            if ratio < best_r - TOL
                                || (ratio < best_r + TOL && self.basis[i] < self.basis[best_i])
                            {
                                Some((i, ratio))
                            } else {
                                Some((best_i, best_r))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(r, q);
        }
    }

    /// Rebuild the reduced-cost row for cost vector `costs` over the current
    /// basis.
    fn price(&mut self, costs: &[f64]) {
        self.obj = vec![0.0; self.ncols + 1];
        for j in 0..self.ncols {
            self.obj[j] = -costs[j];
        }
        for (i, &b) in self.basis.clone().iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for j in 0..=self.ncols {
                    self.obj[j] += cb * self.rows[i][j];
                }
            }
        }
        // Basic columns must read exactly zero.
        for &b in &self.basis {
            self.obj[b] = 0.0;
        }
    }
}

/// Solve a box-bounded maximization problem.
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    let nvars = problem.objective.len();
    if problem.bounds.len() != nvars {
        return Err(Error::DimensionMismatch(format!(
            "{} objective coefficients but {} bounds",
            nvars,
            problem.bounds.len()
        )));
    }
    for c in &problem.constraints {
        if c.coeffs.len() != nvars {
            return Err(Error::DimensionMismatch(
                "constraint arity differs from variable count".into(),
            ));
        }
        if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
            return Err(Error::NonFiniteInput("constraint coefficients"));
        }
    }
    for &(lo, hi) in &problem.bounds {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::NonFiniteInput("variable bounds"));
        }
    }

    // Shift x = lo + u so every variable satisfies 0 <= u_j <= hi_j - lo_j,
    // and append the upper bounds as explicit rows.
    let lo: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();
    let mut rows: Vec<(Vec<f64>, ConstraintSense, f64)> = Vec::new();
    for c in &problem.constraints {
        let shift: f64 = c.coeffs.iter().zip(&lo).map(|(a, l)| a * l).sum();
        rows.push((c.coeffs.clone(), c.sense, c.rhs - shift));
    }
    for j in 0..nvars {
        let mut coeffs = vec![0.0; nvars];
        coeffs[j] = 1.0;
        rows.push((coeffs, ConstraintSense::Le, problem.bounds[j].1 - lo[j]));
    }

    // Normalize right-hand sides to be nonnegative.
    for (coeffs, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *sense = match *sense {
                ConstraintSense::Le => ConstraintSense::Ge,
                ConstraintSense::Ge => ConstraintSense::Le,
                ConstraintSense::Eq => ConstraintSense::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|r| r.1 != ConstraintSense::Eq)
        .count();
    let n_art = rows
        .iter()
        .filter(|r| r.1 != ConstraintSense::Le)
        .count();
    let ncols = nvars + n_slack + n_art;

    let mut tab = Tableau {
        rows: vec![vec![0.0; ncols + 1]; m],
        obj: vec![0.0; ncols + 1],
        basis: vec![0; m],
        ncols,
        pivots: 0,
    };
    let mut slack_at = nvars;
    let mut art_at = nvars + n_slack;
    let mut artificial = vec![false; ncols];
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        tab.rows[i][..nvars].copy_from_slice(coeffs);
        tab.rows[i][ncols] = *rhs;
        match sense {
            ConstraintSense::Le => {
                tab.rows[i][slack_at] = 1.0;
                tab.basis[i] = slack_at;
                slack_at += 1;
            }
            ConstraintSense::Ge => {
                tab.rows[i][slack_at] = -1.0;
                slack_at += 1;
                tab.rows[i][art_at] = 1.0;
                tab.basis[i] = art_at;
                artificial[art_at] = true;
                art_at += 1;
            }
            ConstraintSense::Eq => {
                tab.rows[i][art_at] = 1.0;
                tab.basis[i] = art_at;
                artificial[art_at] = true;
                art_at += 1;
            }
        }
    }

    let everything = vec![true; ncols];
    let non_artificial: Vec<bool> = (0..ncols).map(|j| !artificial[j]).collect();

    if n_art > 0 {
        // Phase 1: maximize minus the artificial sum.
        let mut costs = vec![0.0; ncols];
        for j in 0..ncols {
            if artificial[j] {
                costs[j] = -1.0;
            }
        }
        tab.price(&costs);
        tab.optimize(&everything)?;
        let infeasibility = -tab.obj[ncols];
        if infeasibility > 1e-7 {
            return Err(Error::LpInfeasible);
        }
        // Drive lingering basic artificials out on a degenerate pivot.
        for i in 0..m {
            if artificial[tab.basis[i]] {
                if let Some(q) = (0..ncols)
                    .find(|&j| !artificial[j] && tab.rows[i][j].abs() > TOL)
                {
                    tab.pivot(i, q);
                }
            }
        }
    }

    // Phase 2 on the real objective; artificial columns may not re-enter.
    let mut costs = vec![0.0; ncols];
    costs[..nvars].copy_from_slice(&problem.objective);
    tab.price(&costs);
    tab.optimize(&non_artificial)?;

    let mut u = vec![0.0; nvars];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < nvars {
            u[b] = tab.rows[i][ncols];
        }
    }
    let x: Vec<f64> = u.iter().zip(&lo).map(|(ui, li)| ui + li).collect();
    let shift: f64 = problem.objective.iter().zip(&lo).map(|(c, l)| c * l).sum();
    Ok(LpSolution {
        value: tab.obj[ncols] + shift,
        x,
    })
}
