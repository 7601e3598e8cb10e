//! Total transmit power minimization under per-user SE targets and per-BS
//! power limits, and the BS-user association it induces.
//!
//! The LP has one variable per (BS i, user t) pair, laid out user-major:
//! variable `t * L + i` is `rho[i][t]`. Rows `0..K` are the QoS constraints
//!
//! ```text
//! sum_t c_k^T rho_t - b_k^T rho_k <= -sigma2_dl
//! ```
//!
//! with `c_k[i] = beta[i][k]` and `b_k[i] = M gamma[i][k] / xi_hat_k`, and
//! rows `K..K+L` are the per-BS limits `sum_t rho[i][t] <= pmax_i`.
//! A user whose threshold is zero gets an all-zero row `0 <= 0`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStats, NetworkScenario};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::numeric::{compensated_sum, Matrix};
use crate::se::{se_mrt, PowerAllocation, QosTargets};
use crate::{Error, Result};

/// BS i serves user t when `rho[i][t] > SERVING_THRESHOLD * min(pmax_i, max_j rho[j][t])`.
/// The cap by the user's own largest allocation keeps users that need only a
/// tiny power from ending up with no serving BS.
pub const SERVING_THRESHOLD: f64 = 1e-6;

/// Coefficients of the power minimization LP.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMinProblem {
    /// `c[(i, k)] = beta[i][k]`.
    pub c: Matrix,
    /// `b[(i, k)] = M gamma[i][k] / xi_hat_k`; infinite when `xi_hat_k = 0`.
    pub b: Matrix,
    pub pmax: Vec<f64>,
    pub noise_dl: f64,
    pub xi_hat: Vec<f64>,
}

impl PowerMinProblem {
    pub fn new(stats: &ChannelStats, targets: &QosTargets, scenario: &NetworkScenario) -> Result<Self> {
        let (l, k) = (scenario.num_bs(), scenario.num_users());
        if stats.beta.shape() != (l, k) || stats.gamma.shape() != (l, k) {
            return Err(Error::Dimension(format!("channel stats are not {l}x{k}")));
        }
        if targets.len() != k {
            return Err(Error::Dimension(format!("{} targets for {k} users", targets.len())));
        }
        if targets.xi_hat.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Domain("SINR thresholds must be >= 0".into()));
        }
        let m = scenario.num_antennas as f64;
        let b = Matrix::from_fn(l, k, |i, t| {
            let th = targets.xi_hat[t];
            if th == 0.0 {
                f64::INFINITY
            } else {
                m * stats.gamma[(i, t)] / th
            }
        });
        Ok(Self {
            c: stats.beta.clone(),
            b,
            pmax: scenario.pmax.clone(),
            noise_dl: scenario.noise_dl,
            xi_hat: targets.xi_hat.clone(),
        })
    }

    pub fn num_bs(&self) -> usize {
        self.c.rows()
    }

    pub fn num_users(&self) -> usize {
        self.c.cols()
    }

    pub fn var_index(&self, bs: usize, user: usize) -> usize {
        user * self.num_bs() + bs
    }

    /// LP restricted to the `(bs, user)` pairs accepted by `support`;
    /// also returns the pair behind each LP column.
    pub fn to_lp_with_support(&self, support: impl Fn(usize, usize) -> bool) -> Result<(LinearProgram, Vec<(usize, usize)>)> {
        let (l, k) = (self.num_bs(), self.num_users());
        let vars: Vec<(usize, usize)> = (0..k)
            .flat_map(|t| (0..l).map(move |i| (i, t)))
            .filter(|&(i, t)| support(i, t))
            .collect();
        let n = vars.len();
        let mut rows = Vec::with_capacity(k + l);
        let mut rhs = Vec::with_capacity(k + l);
        for q in 0..k {
            if self.xi_hat[q] == 0.0 {
                rows.push(vec![0.0; n]);
                rhs.push(0.0);
                continue;
            }
            let row = vars
                .iter()
                .map(|&(i, t)| {
                    let own = if t == q { self.b[(i, q)] } else { 0.0 };
                    self.c[(i, q)] - own
                })
                .collect();
            rows.push(row);
            rhs.push(-self.noise_dl);
        }
        for bs in 0..l {
            rows.push(vars.iter().map(|&(i, _)| if i == bs { 1.0 } else { 0.0 }).collect());
            rhs.push(self.pmax[bs]);
        }
        Ok((LinearProgram::new(vec![1.0; n], rows, rhs)?, vars))
    }

    pub fn to_lp(&self) -> Result<LinearProgram> {
        Ok(self.to_lp_with_support(|_, _| true)?.0)
    }
}

/// The LP for `stats`, `targets` and `scenario` over all (BS, user) pairs.
pub fn build_lp(stats: &ChannelStats, targets: &QosTargets, scenario: &NetworkScenario) -> Result<LinearProgram> {
    PowerMinProblem::new(stats, targets, scenario)?.to_lp()
}

/// Serving BSs of each user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMap {
    pub serving_sets: Vec<Vec<usize>>,
    pub joint_flags: Vec<bool>,
}

impl AssociationMap {
    pub fn from_allocation(alloc: &PowerAllocation, pmax: &[f64]) -> Self {
        let serving_sets: Vec<Vec<usize>> = (0..alloc.num_users())
            .map(|t| {
                let peak = (0..alloc.num_bs()).map(|i| alloc.get(i, t)).fold(0.0, f64::max);
                (0..alloc.num_bs())
                    .filter(|&i| alloc.get(i, t) > SERVING_THRESHOLD * pmax[i].min(peak))
                    .collect()
            })
            .collect();
        let joint_flags = serving_sets.iter().map(|s| s.len() >= 2).collect();
        Self { serving_sets, joint_flags }
    }

    pub fn num_users(&self) -> usize {
        self.serving_sets.len()
    }

    pub fn num_joint(&self) -> usize {
        self.joint_flags.iter().filter(|&&j| j).count()
    }

    pub fn num_single(&self) -> usize {
        self.serving_sets.iter().filter(|s| s.len() == 1).count()
    }

    /// Fraction of all users served by two or more BSs.
    pub fn joint_fraction(&self) -> f64 {
        if self.serving_sets.is_empty() {
            0.0
        } else {
            self.num_joint() as f64 / self.num_users() as f64
        }
    }

    /// Number of users each BS serves.
    pub fn load(&self, num_bs: usize) -> Vec<usize> {
        let mut load = vec![0; num_bs];
        for s in &self.serving_sets {
            for &i in s {
                load[i] += 1;
            }
        }
        load
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMinSolution {
    pub alloc: PowerAllocation,
    pub association: AssociationMap,
    /// Multipliers of the QoS rows.
    pub lambda: Vec<f64>,
    /// Multipliers of the per-BS power rows.
    pub mu: Vec<f64>,
    /// Total transmit power, W.
    pub objective: f64,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PowerMinOutcome {
    Optimal(PowerMinSolution),
    /// No allocation meets every target within the power limits.
    Infeasible,
}

impl PowerMinOutcome {
    pub fn solution(&self) -> Option<&PowerMinSolution> {
        match self {
            PowerMinOutcome::Optimal(s) => Some(s),
            PowerMinOutcome::Infeasible => None,
        }
    }

    pub fn into_solution(self) -> Option<PowerMinSolution> {
        match self {
            PowerMinOutcome::Optimal(s) => Some(s),
            PowerMinOutcome::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, PowerMinOutcome::Optimal(_))
    }

    pub fn to_record(&self) -> PowerMinRecord {
        match self {
            PowerMinOutcome::Optimal(s) => PowerMinRecord {
                status: LpStatus::Optimal,
                objective_w: Some(s.objective),
                rho: Some(s.alloc.matrix().to_rows()),
                lambda: Some(s.lambda.clone()),
                mu: Some(s.mu.clone()),
                serving_sets: Some(s.association.serving_sets.clone()),
            },
            PowerMinOutcome::Infeasible => PowerMinRecord {
                status: LpStatus::Infeasible,
                objective_w: None,
                rho: None,
                lambda: None,
                mu: None,
                serving_sets: None,
            },
        }
    }
}

/// JSON form of a power minimization result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMinRecord {
    pub status: LpStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_w: Option<f64>,
    /// `rho[i][t]`, W.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub serving_sets: Option<Vec<Vec<usize>>>,
}

fn solve_with_support(
    problem: &PowerMinProblem,
    scenario: &NetworkScenario,
    support: impl Fn(usize, usize) -> bool,
) -> Result<PowerMinOutcome> {
    let (l, k) = (problem.num_bs(), problem.num_users());
    let (lp, vars) = problem.to_lp_with_support(support)?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Ok(PowerMinOutcome::Infeasible),
        LpStatus::Unbounded => Err(Error::Contract("power minimization LP reported unbounded".into())),
        LpStatus::Optimal => {
            let mut rho = Matrix::zeros(l, k);
            for (&(i, t), &x) in vars.iter().zip(&sol.x) {
                rho[(i, t)] = x.max(0.0);
            }
            let alloc = PowerAllocation::new(rho)?;
            let association = AssociationMap::from_allocation(&alloc, &scenario.pmax);
            Ok(PowerMinOutcome::Optimal(PowerMinSolution {
                objective: alloc.total_power(),
                alloc,
                association,
                lambda: sol.duals[..k].to_vec(),
                mu: sol.duals[k..].to_vec(),
                lp_iterations: sol.iterations,
            }))
        }
    }
}

/// Jointly optimal powers and association.
pub fn solve_power_min(stats: &ChannelStats, targets: &QosTargets, scenario: &NetworkScenario) -> Result<PowerMinOutcome> {
    let problem = PowerMinProblem::new(stats, targets, scenario)?;
    solve_with_support(&problem, scenario, |_, _| true)
}

/// BS with the largest `beta` for each user, ties to the lowest index.
pub fn max_snr_bs(stats: &ChannelStats) -> Vec<usize> {
    (0..stats.num_users())
        .map(|t| {
            let mut best = 0;
            for i in 1..stats.num_bs() {
                if stats.beta[(i, t)] > stats.beta[(best, t)] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Power minimization with every user pinned to its max-SNR BS.
pub fn solve_max_snr(stats: &ChannelStats, targets: &QosTargets, scenario: &NetworkScenario) -> Result<PowerMinOutcome> {
    let problem = PowerMinProblem::new(stats, targets, scenario)?;
    let best = max_snr_bs(stats);
    solve_with_support(&problem, scenario, |i, t| best[t] == i)
}

/// Which BSs may serve a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationPolicy {
    /// Any subset, chosen by the LP.
    Optimal,
    /// Only the BS with the strongest average channel.
    MaxSnr,
}

impl AssociationPolicy {
    pub fn solve(self, stats: &ChannelStats, targets: &QosTargets, scenario: &NetworkScenario) -> Result<PowerMinOutcome> {
        match self {
            AssociationPolicy::Optimal => solve_power_min(stats, targets, scenario),
            AssociationPolicy::MaxSnr => solve_max_snr(stats, targets, scenario),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub user: usize,
    pub bs: usize,
    /// Relative gap that exceeded the tolerance.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub violations: Vec<RuleViolation>,
    /// Largest relative gap seen, violating or not.
    pub max_gap: f64,
    /// BSs attaining the minimum cost ratio (within tolerance) per user.
    pub argmin_sets: Vec<Vec<usize>>,
}

impl AssociationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Checks the association against the optimal multipliers.
///
/// For every user `t` the cost ratio
/// `r(i, t) = (1 + sum_k lambda_k beta[i][k] + mu_i) / b_t[i]`
/// must be minimized by every serving BS, and the minimum must equal
/// `lambda_t`. Both follow from stationarity of the Lagrangian and
/// complementary slackness on `rho[i][t]`.
pub fn association_rule_check(
    stats: &ChannelStats,
    targets: &QosTargets,
    scenario: &NetworkScenario,
    solution: &PowerMinSolution,
    tol: f64,
) -> Result<AssociationReport> {
    let problem = PowerMinProblem::new(stats, targets, scenario)?;
    let (l, k) = (problem.num_bs(), problem.num_users());
    if solution.lambda.len() != k || solution.mu.len() != l {
        return Err(Error::Dimension("multiplier lengths do not match the scenario".into()));
    }
    let mut report = AssociationReport {
        violations: Vec::new(),
        max_gap: 0.0,
        argmin_sets: vec![Vec::new(); k],
    };
    for t in 0..k {
        if problem.xi_hat[t] == 0.0 {
            continue;
        }
        let ratios: Vec<f64> = (0..l)
            .map(|i| {
                let pressure = compensated_sum((0..k).map(|q| solution.lambda[q] * problem.c[(i, q)]));
                let b = problem.b[(i, t)];
                if b > 0.0 {
                    (1.0 + pressure + solution.mu[i]) / b
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let (best_bs, min_r) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc });
        report.argmin_sets[t] = (0..l).filter(|&i| rel_gap(ratios[i], min_r) <= tol).collect();

        let g = rel_gap(min_r, solution.lambda[t]);
        report.max_gap = report.max_gap.max(g);
        if g > tol {
            report.violations.push(RuleViolation { user: t, bs: best_bs, gap: g });
        }
        for &i in &solution.association.serving_sets[t] {
            let g = rel_gap(ratios[i], min_r);
            report.max_gap = report.max_gap.max(g);
            if g > tol {
                report.violations.push(RuleViolation { user: t, bs: i, gap: g });
            }
        }
        if solution.association.serving_sets[t].is_empty() {
            report.violations.push(RuleViolation {
                user: t,
                bs: best_bs,
                gap: f64::INFINITY,
            });
        }
    }
    Ok(report)
}

/// How well an allocation meets the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    /// `min_k (se_k - xi_k)`; negative means a target is missed.
    pub min_margin: f64,
    /// Largest relative residual of a QoS row with a positive threshold.
    pub max_binding_gap: f64,
    /// Largest `(P_i - pmax_i)`, W.
    pub max_power_excess: f64,
}

pub fn qos_report(
    stats: &ChannelStats,
    targets: &QosTargets,
    scenario: &NetworkScenario,
    alloc: &PowerAllocation,
) -> Result<QosReport> {
    let problem = PowerMinProblem::new(stats, targets, scenario)?;
    let (l, k) = (problem.num_bs(), problem.num_users());
    let mut min_margin = f64::INFINITY;
    let mut max_binding_gap: f64 = 0.0;
    for q in 0..k {
        let se = se_mrt(stats, alloc, scenario, q)?;
        min_margin = min_margin.min(se - targets.xi[q]);
        if problem.xi_hat[q] == 0.0 {
            continue;
        }
        let mut terms = Vec::with_capacity(l * k + 1);
        for t in 0..k {
            for i in 0..l {
                let own = if t == q { problem.b[(i, q)] } else { 0.0 };
                terms.push((problem.c[(i, q)] - own) * alloc.get(i, t));
            }
        }
        terms.push(problem.noise_dl);
        let mag = compensated_sum(terms.iter().map(|v| v.abs()));
        let resid = compensated_sum(terms);
        max_binding_gap = max_binding_gap.max(resid.abs() / mag);
    }
    let max_power_excess = (0..l)
        .map(|i| alloc.bs_power(i) - problem.pmax[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(QosReport {
        min_margin,
        max_binding_gap,
        max_power_excess,
    })
}
