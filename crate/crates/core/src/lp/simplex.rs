//! Dense two-phase revised simplex with Bland's rule.
//!
//! Every row is equilibrated by its largest absolute coefficient before the
//! solve; multipliers are mapped back to the caller's row scaling. The basis
//! inverse is kept explicitly and refreshed from scratch every
//! `REFACTOR_EVERY` pivots.

use super::{LinearProgram, LpSolution, LpStatus};
use crate::{Error, Result};

/// Smallest admissible pivot element (on equilibrated rows).
pub const PIVOT_TOL: f64 = 1e-11;
/// Largest phase-one residual still counted as feasible.
pub const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 32;
const MAX_ITERS: usize = 200_000;

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    /// Column-major `m x ncols` constraint matrix in standard form.
    cols: Vec<f64>,
    ncols: usize,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl Tableau {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn binv_row(&self, r: usize) -> &[f64] {
        &self.binv[r * self.m..(r + 1) * self.m]
    }

    /// Simplex multipliers `c_B^T B^-1`.
    fn multipliers(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for r in 0..m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (p, b) in pi.iter_mut().zip(self.binv_row(r)) {
                    *p += cb * b;
                }
            }
        }
        pi
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let col = self.col(j);
        (0..self.m)
            .map(|r| self.binv_row(r).iter().zip(col).map(|(b, a)| b * a).sum())
            .collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut b = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.col(j).iter().enumerate() {
                b[i * m + r] = *v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&a, &z| b[a * m + c].abs().total_cmp(&b[z * m + c].abs()).then(z.cmp(&a)))
                .unwrap_or(c);
            let piv = b[p * m + c];
            if piv.abs() <= f64::MIN_POSITIVE {
                return Err(Error::Contract("singular simplex basis".into()));
            }
            if p != c {
                for k in 0..m {
                    b.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let inv_piv = 1.0 / piv;
            for k in 0..m {
                b[c * m + k] *= inv_piv;
                inv[c * m + k] *= inv_piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = b[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        b[i * m + k] -= f * b[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.xb = (0..m)
            .map(|r| self.binv_row(r).iter().zip(&self.rhs).map(|(b, v)| b * v).sum())
            .collect();
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, j: usize, u: &[f64]) -> Result<()> {
        let m = self.m;
        let ur = u[r];
        let theta = self.xb[r].max(0.0) / ur;
        for i in 0..m {
            if i != r {
                self.xb[i] -= u[i] * theta;
            }
        }
        self.xb[r] = theta;

        for k in 0..m {
            self.binv[r * m + k] /= ur;
        }
        for i in 0..m {
            if i == r || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Primal simplex over columns with `allowed(j)`, Bland's rule for both
    /// the entering and the leaving variable.
    fn run(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Result<Outcome> {
        let opt_tol = OPT_TOL * cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        loop {
            if self.iterations >= MAX_ITERS {
                return Err(Error::Contract(format!("simplex exceeded {MAX_ITERS} iterations")));
            }
            let pi = self.multipliers(cost);
            let entering = (0..self.ncols).find(|&j| {
                if self.is_basic[j] || !allowed(j) {
                    return false;
                }
                let d = cost[j] - pi.iter().zip(self.col(j)).map(|(p, a)| p * a).sum::<f64>();
                d < -opt_tol
            });
            let Some(j) = entering else {
                return Ok(Outcome::Optimal);
            };

            let u = self.ftran(j);
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if u[r] > PIVOT_TOL {
                    let t = self.xb[r].max(0.0) / u[r];
                    best = match best {
                        None => Some((r, t)),
                        Some((_, bt)) if t < bt => Some((r, t)),
                        keep => keep,
                    };
                }
            }
            let Some((_, min_ratio)) = best else {
                return Ok(Outcome::Unbounded);
            };
            // among (numerically) tied rows, leave with the lowest variable index
            let slack = 1e-12 * (1.0 + min_ratio);
            let r = (0..self.m)
                .filter(|&r| u[r] > PIVOT_TOL && self.xb[r].max(0.0) / u[r] <= min_ratio + slack)
                .min_by_key(|&r| self.basis[r])
                .expect("the minimum-ratio row is always a candidate");
            self.pivot(r, j, &u)?;
        }
    }
}

/// Solves `min c^T x  s.t.  A x <= b,  x >= 0`.
///
/// Returns an error only if the basis becomes numerically singular or the
/// iteration cap is hit; infeasibility and unboundedness are statuses.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();

    // row equilibration
    let mut scale = vec![1.0; m];
    for (j, row) in lp.rows.iter().enumerate() {
        let s = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            if lp.rhs[j] < 0.0 {
                let mut cert = vec![0.0; m];
                cert[j] = 1.0;
                return Ok(infeasible(n, m, cert, 0));
            }
        } else {
            scale[j] = s;
        }
    }

    // standard form: x | slack | artificial
    let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let art_rows: Vec<usize> = (0..m).filter(|&j| sign[j] < 0.0).collect();
    let ncols = n + m + art_rows.len();
    let mut cols = vec![0.0; m * ncols];
    for (j, row) in lp.rows.iter().enumerate() {
        for (i, a) in row.iter().enumerate() {
            cols[i * m + j] = sign[j] * a / scale[j];
        }
        cols[(n + j) * m + j] = sign[j];
    }
    let mut basis: Vec<usize> = (0..m).map(|j| n + j).collect();
    for (q, &j) in art_rows.iter().enumerate() {
        cols[(n + m + q) * m + j] = 1.0;
        basis[j] = n + m + q;
    }
    let rhs: Vec<f64> = (0..m).map(|j| sign[j] * lp.rhs[j] / scale[j]).collect();
    let mut is_basic = vec![false; ncols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut identity = vec![0.0; m * m];
    for i in 0..m {
        identity[i * m + i] = 1.0;
    }
    let mut tab = Tableau {
        m,
        cols,
        ncols,
        xb: rhs.clone(),
        rhs,
        basis,
        is_basic,
        binv: identity,
        since_refactor: 0,
        iterations: 0,
    };

    let first_art = n + m;
    if !art_rows.is_empty() {
        let mut phase1 = vec![0.0; ncols];
        phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
        match tab.run(&phase1, |_| true)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(Error::Contract("phase one cannot be unbounded".into())),
        }
        tab.refactor()?;
        let infeas: f64 = (0..m).filter(|&r| tab.basis[r] >= first_art).map(|r| tab.xb[r].max(0.0)).sum();
        if infeas > FEAS_TOL {
            let pi = tab.multipliers(&phase1);
            let cert = (0..m).map(|j| (-sign[j] * pi[j]).max(0.0) / scale[j]).collect();
            return Ok(infeasible(n, m, cert, tab.iterations));
        }
        drive_out_artificials(&mut tab, first_art)?;
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.cost);
    let outcome = tab.run(&cost, |j| j < first_art)?;
    if let Outcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::NEG_INFINITY,
            duals: vec![0.0; m],
            certificate: None,
            iterations: tab.iterations,
        });
    }
    tab.refactor()?;

    let mut x = vec![0.0; n];
    for (r, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = tab.xb[r].max(0.0);
        }
    }
    let pi = tab.multipliers(&cost);
    let duals = (0..m).map(|j| (-sign[j] * pi[j] / scale[j]).max(0.0)).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective(&x),
        x,
        duals,
        certificate: None,
        iterations: tab.iterations,
    })
}

fn infeasible(n: usize, m: usize, certificate: Vec<f64>, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::INFINITY,
        duals: vec![0.0; m],
        certificate: Some(certificate),
        iterations,
    }
}

/// Pivots zero-level artificials out of the basis where some structural or
/// slack column has a usable entry in their row. Rows with none are
/// redundant and keep their artificial at zero.
fn drive_out_artificials(tab: &mut Tableau, first_art: usize) -> Result<()> {
    for r in 0..tab.m {
        if tab.basis[r] < first_art {
            continue;
        }
        let row: Vec<f64> = tab.binv_row(r).to_vec();
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..first_art {
            if tab.is_basic[j] {
                continue;
            }
            let v: f64 = row.iter().zip(tab.col(j)).map(|(b, a)| b * a).sum();
            if v.abs() > PIVOT_TOL && pick.is_none_or(|(_, pv)| v.abs() > pv.abs()) {
                pick = Some((j, v));
            }
        }
        if let Some((j, _)) = pick {
            let u = tab.ftran(j);
            tab.xb[r] = 0.0;
            tab.pivot(r, j, &u)?;
        }
    }
    tab.refactor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_certificate, verify};

    fn lp(c: &[f64], rows: &[&[f64]], b: &[f64]) -> LinearProgram {
        LinearProgram::new(c.to_vec(), rows.iter().map(|r| r.to_vec()).collect(), b.to_vec()).unwrap()
    }

    #[test]
    fn covering_one_row() {
        // min x s.t. x >= 1
        let p = lp(&[1.0], &[&[-1.0]], &[-1.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-15);
        assert!((s.duals[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cheapest_cover() {
        let p = lp(&[1.0, 1.0], &[&[-1.0, -2.0]], &[-2.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.x[0].abs() < 1e-15 && (s.x[1] - 1.0).abs() < 1e-15);
        assert!((s.objective - 1.0).abs() < 1e-15);
        assert!((s.duals[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infeasible_with_certificate() {
        // x <= -1, x >= 0
        let p = lp(&[1.0], &[&[1.0]], &[-1.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(check_certificate(&p, s.certificate.as_ref().unwrap(), 1e-9));

        let p = lp(&[1.0, 1.0], &[&[1.0, 1.0], &[-1.0, -1.0]], &[1.0, -2.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(check_certificate(&p, s.certificate.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn zero_row_with_negative_rhs() {
        let p = lp(&[1.0], &[&[0.0]], &[-1.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(check_certificate(&p, s.certificate.as_ref().unwrap(), 0.0));
    }

    #[test]
    fn unbounded() {
        let p = lp(&[-1.0, 0.0], &[&[-1.0, 1.0]], &[1.0]);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_via_two_rows_and_degeneracy() {
        // x + y = 1 encoded as two inequalities; min 2x + y
        let p = lp(&[2.0, 1.0], &[&[1.0, 1.0], &[-1.0, -1.0], &[1.0, 0.0]], &[1.0, -1.0, 1.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-14);
        assert!(verify(&p, &s).max() < 1e-12);
    }

    #[test]
    fn badly_scaled_rows() {
        // the same program as cheapest_cover with rows spanning 26 decades
        let p = lp(&[1.0, 1.0], &[&[-1e-14, -2e-14], &[1e12, 1e12]], &[-2e-14, 1e13]);
        let s = solve(&p).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-14);
        assert!((s.duals[0] - 0.5e14).abs() < 1e-2);
        assert!(verify(&p, &s).max() < 1e-12);
    }

    #[test]
    fn deterministic_bits() {
        let p = lp(&[1.0, 2.0, 0.5], &[&[-1.0, -1.0, -1.0], &[1.0, 0.0, 2.0], &[-0.3, -1.0, 0.2]], &[-3.0, 4.0, -1.0]);
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a, b);
        let bits = |s: &LpSolution| s.x.iter().chain(&s.duals).map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
