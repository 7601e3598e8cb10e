//! Small dense linear programs: `minimize c^T x  s.t.  A x <= b,  x >= 0`.
//!
//! [`solve`] runs a two-phase revised simplex with Bland's pivoting rule and
//! returns the primal vertex together with nonnegative Lagrange multipliers
//! `y`, one per inequality row. With this sign convention an optimal pair
//! satisfies
//!
//! * `A x <= b`, `x >= 0`
//! * `y >= 0`, `c + A^T y >= 0`
//! * `c^T x + b^T y = 0`
//!
//! Infeasible programs carry a Farkas certificate `y >= 0` with
//! `A^T y >= 0` and `b^T y < 0`.

mod simplex;
mod text;

use serde::{Deserialize, Serialize};

use crate::numeric::compensated_sum;
use crate::{Error, Result};

pub use simplex::{solve, PIVOT_TOL, FEAS_TOL};
pub use text::parse_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    /// Inequality rows, each of length `num_vars()`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let lp = Self { cost, rows, rhs };
        lp.validate()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.rows.len() != self.rhs.len() {
            return Err(Error::Dimension(format!("{} rows but {} right-hand sides", self.rows.len(), self.rhs.len())));
        }
        if let Some((j, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!("row {j} has {} entries, expected {n}", r.len())));
        }
        let all = self.cost.iter().chain(self.rhs.iter()).chain(self.rows.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("LP entries must be finite".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        compensated_sum(self.cost.iter().zip(x).map(|(c, x)| c * x))
    }

    /// `(A x)_j`.
    pub fn row_activity(&self, j: usize, x: &[f64]) -> f64 {
        compensated_sum(self.rows[j].iter().zip(x).map(|(a, x)| a * x))
    }

    /// Plain-text dump: a header, the cost row, then one inequality per line.
    pub fn to_text(&self) -> String {
        text::to_text(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal vertex (zeros unless `Optimal`).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Lagrange multipliers of the inequality rows (`Optimal` only).
    pub duals: Vec<f64>,
    /// Farkas certificate (`Infeasible` only).
    pub certificate: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Optimality residuals of a candidate primal/dual pair, each normalized to
/// be scale free.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Row violations relative to row magnitude, and negative `x`.
    pub primal: f64,
    /// Negative reduced costs relative to column magnitude, and negative `y`.
    pub dual: f64,
    /// `|c^T x + b^T y| / (1 + |c^T x|)`.
    pub gap: f64,
    /// `max_j |y_j (b_j - (A x)_j)| / (1 + |c^T x|)`.
    pub complementarity: f64,
    /// `max_i |x_i (c + A^T y)_i| / (1 + |c^T x|)`.
    pub reduced_cost_complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.primal, self.dual, self.gap, self.complementarity, self.reduced_cost_complementarity]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Residual report for `sol` against `lp`.
pub fn verify(lp: &LinearProgram, sol: &LpSolution) -> Residuals {
    verify_pair(lp, &sol.x, &sol.duals)
}

/// Residuals for an arbitrary primal/dual pair.
pub fn verify_pair(lp: &LinearProgram, x: &[f64], y: &[f64]) -> Residuals {
    let obj = lp.objective(x);
    let obj_scale = 1.0 + obj.abs();
    let mut r = Residuals::default();

    let x_scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for &xi in x {
        r.primal = r.primal.max(ratio((-xi).max(0.0), x_scale));
    }

    let mut by = Vec::with_capacity(lp.num_rows());
    for (j, row) in lp.rows.iter().enumerate() {
        let act = lp.row_activity(j, x);
        let mag = lp.rhs[j].abs() + compensated_sum(row.iter().zip(x).map(|(a, x)| (a * x).abs()));
        r.primal = r.primal.max(ratio((act - lp.rhs[j]).max(0.0), mag));
        let yj = y.get(j).copied().unwrap_or(0.0);
        r.dual = r.dual.max((-yj).max(0.0) * mag / obj_scale);
        r.complementarity = r.complementarity.max((yj * (lp.rhs[j] - act)).abs() / obj_scale);
        by.push(lp.rhs[j] * yj);
    }

    for i in 0..lp.num_vars() {
        let terms = lp.rows.iter().zip(y).map(|(row, yj)| row[i] * yj);
        let aty = compensated_sum(terms);
        let mag = lp.cost[i].abs() + compensated_sum(lp.rows.iter().zip(y).map(|(row, yj)| (row[i] * yj).abs()));
        let reduced = lp.cost[i] + aty;
        r.dual = r.dual.max(ratio((-reduced).max(0.0), mag));
        r.reduced_cost_complementarity = r.reduced_cost_complementarity.max((x[i] * reduced).abs() / obj_scale);
    }

    r.gap = (obj + compensated_sum(by)).abs() / obj_scale;
    r
}

/// Checks a Farkas certificate: `y >= 0`, `A^T y >= -tol`, `b^T y < 0`.
pub fn check_certificate(lp: &LinearProgram, y: &[f64], tol: f64) -> bool {
    if y.len() != lp.num_rows() || y.iter().any(|&v| v < 0.0) {
        return false;
    }
    let scale = compensated_sum(lp.rows.iter().zip(y).map(|(r, yj)| r.iter().map(|a| a.abs()).fold(0.0, f64::max) * yj));
    let by = compensated_sum(lp.rhs.iter().zip(y).map(|(b, yj)| b * yj));
    let columns_ok = (0..lp.num_vars()).all(|i| {
        let aty = compensated_sum(lp.rows.iter().zip(y).map(|(r, yj)| r[i] * yj));
        aty >= -tol * scale.max(f64::MIN_POSITIVE)
    });
    columns_ok && by < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_ragged_and_nonfinite() {
        assert!(LinearProgram::new(vec![1.0, 1.0], vec![vec![1.0]], vec![1.0]).is_err());
        assert!(LinearProgram::new(vec![1.0], vec![vec![1.0]], vec![]).is_err());
        assert!(LinearProgram::new(vec![f64::NAN], vec![], vec![]).is_err());
    }

    #[test]
    fn perturbed_solution_is_detected() {
        let lp = LinearProgram::new(vec![1.0, 1.0], vec![vec![-1.0, -2.0]], vec![-2.0]).unwrap();
        let sol = solve(&lp).unwrap();
        assert!(verify(&lp, &sol).max() <= 1e-12);
        let mut x = sol.x.clone();
        x[0] += 1e-3;
        assert!(verify_pair(&lp, &x, &sol.duals).max() > 0.0);
    }

    #[test]
    fn zero_program() {
        let lp = LinearProgram::new(vec![0.0; 3], vec![], vec![]).unwrap();
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.x, vec![0.0; 3]);
        assert_eq!(verify(&lp, &sol), Residuals::default());
    }
}
