//! Weighted max-min SE by bisection over feasibility of the power LP.
//!
//! For a level `xi` every user gets target `w_k * xi`; feasibility is
//! monotone in `xi`, so the largest feasible level is found by halving
//! `[0, xi_upper]` until its width is at most `delta`.

use serde::{Deserialize, Serialize};

use crate::assoc::{AssociationMap, AssociationPolicy, PowerMinSolution};
use crate::channel::{ChannelStats, NetworkScenario};
use crate::se::{se_from_sinr, PowerAllocation, QosTargets};
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Initial upper end of the search range; derived from the channel when absent.
    pub xi_upper_init: Option<f64>,
    /// Line-search accuracy, bit/symbol.
    pub delta: f64,
    pub max_iters: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            xi_upper_init: None,
            delta: DEFAULT_DELTA,
            max_iters: 200,
        }
    }
}

/// Number of halvings needed to shrink `range` to at most `delta`.
pub fn iterations_needed(range: f64, delta: f64) -> usize {
    if range <= delta {
        0
    } else {
        (range / delta).log2().ceil() as usize
    }
}

/// Interference-free level that no allocation can reach: every user gets
/// full power from every BS and sees only noise. Scaled up by `1 + 1e-6`.
pub fn auto_upper_bound(stats: &ChannelStats, scenario: &NetworkScenario, weights: &[f64]) -> Result<f64> {
    let (l, k) = (scenario.num_bs(), scenario.num_users());
    if stats.gamma.shape() != (l, k) || weights.len() != k {
        return Err(Error::Dimension("stats/weights do not match the scenario".into()));
    }
    let m = scenario.num_antennas as f64;
    let bound = (0..k)
        .map(|t| {
            let snr: f64 = (0..l).map(|i| scenario.pmax[i] * stats.gamma[(i, t)]).sum::<f64>() * m / scenario.noise_dl;
            se_from_sinr(snr, scenario.coherence_length, scenario.pilot_length) / weights[t]
        })
        .fold(f64::INFINITY, f64::min);
    Ok(bound * (1.0 + 1e-6))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub candidate: f64,
    pub feasible: bool,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxMinResult {
    pub lower: f64,
    pub upper: f64,
    /// Solution at the last feasible probe; `None` if no probe was feasible.
    pub solution: Option<PowerMinSolution>,
    pub alloc: PowerAllocation,
    pub association: AssociationMap,
    pub iterations: usize,
    pub trace: Vec<TraceStep>,
}

impl MaxMinResult {
    /// The trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.trace {
            out.push_str(&serde_json::to_string(step).expect("trace steps serialize"));
            out.push('\n');
        }
        out
    }
}

/// Bisection over the common QoS level with the given association policy.
pub fn solve_max_min_with(
    policy: AssociationPolicy,
    stats: &ChannelStats,
    scenario: &NetworkScenario,
    weights: &[f64],
    cfg: &BisectionConfig,
) -> Result<MaxMinResult> {
    if !(cfg.delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {}", cfg.delta)));
    }
    let upper0 = match cfg.xi_upper_init {
        Some(u) if u >= 0.0 && u.is_finite() => u,
        Some(u) => return Err(Error::Domain(format!("invalid initial upper bound {u}"))),
        None => auto_upper_bound(stats, scenario, weights)?,
    };
    let needed = iterations_needed(upper0, cfg.delta);
    if cfg.max_iters < needed {
        return Err(Error::Domain(format!(
            "max_iters {} below the {needed} halvings needed for range {upper0} at delta {}",
            cfg.max_iters, cfg.delta
        )));
    }

    let (l, k) = (scenario.num_bs(), scenario.num_users());
    let mut lower = 0.0;
    let mut upper = upper0;
    let mut best: Option<PowerMinSolution> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    while upper - lower > cfg.delta && iterations < cfg.max_iters {
        let candidate = 0.5 * (upper + lower);
        let targets = QosTargets::from_level(scenario, weights, candidate)?;
        let outcome = policy.solve(stats, &targets, scenario)?;
        let feasible = outcome.is_feasible();
        if let Some(sol) = outcome.into_solution() {
            best = Some(sol);
            lower = candidate;
        } else {
            upper = candidate;
        }
        iterations += 1;
        trace.push(TraceStep {
            iteration: iterations,
            candidate,
            feasible,
            lower,
            upper,
        });
    }

    let (alloc, association) = match &best {
        Some(s) => (s.alloc.clone(), s.association.clone()),
        None => {
            let alloc = PowerAllocation::zeros(l, k);
            let association = AssociationMap::from_allocation(&alloc, &scenario.pmax);
            (alloc, association)
        }
    };
    Ok(MaxMinResult {
        lower,
        upper,
        solution: best,
        alloc,
        association,
        iterations,
        trace,
    })
}

/// Max-min with jointly optimal association.
pub fn solve_max_min(
    stats: &ChannelStats,
    scenario: &NetworkScenario,
    weights: &[f64],
    cfg: &BisectionConfig,
) -> Result<MaxMinResult> {
    solve_max_min_with(AssociationPolicy::Optimal, stats, scenario, weights, cfg)
}

/// Checks that the trace is a valid bisection: bounds move monotonically,
/// every feasible probe lies below every infeasible one, and each probe is
/// the midpoint of the interval it split.
pub fn check_trace(result: &MaxMinResult, upper_init: f64) -> Result<()> {
    let (mut lo, mut hi) = (0.0f64, upper_init);
    let mut max_feasible = f64::NEG_INFINITY;
    let mut min_infeasible = f64::INFINITY;
    for s in &result.trace {
        if s.candidate != 0.5 * (lo + hi) {
            return Err(Error::Contract(format!("probe {} is not the midpoint", s.iteration)));
        }
        if s.lower < lo || s.upper > hi {
            return Err(Error::Contract(format!("bounds moved the wrong way at {}", s.iteration)));
        }
        if s.feasible {
            max_feasible = max_feasible.max(s.candidate);
        } else {
            min_infeasible = min_infeasible.min(s.candidate);
        }
        if max_feasible >= min_infeasible {
            return Err(Error::Contract(format!(
                "feasibility not monotone: {max_feasible} feasible, {min_infeasible} infeasible"
            )));
        }
        lo = s.lower;
        hi = s.upper;
    }
    Ok(())
}
