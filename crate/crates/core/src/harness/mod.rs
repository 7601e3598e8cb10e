//! Seeded multi-drop sweeps over the antenna count.
//!
//! Drop `d` draws its users and shadowing from `stream_rng(seed, d)`; the
//! same drop is reused for every antenna count, so differences between
//! antenna counts are not blurred by different geometry. Drops are solved
//! independently (in parallel with the `parallel` feature) and reduced in
//! drop order, so the output does not depend on the thread count.

mod output;
mod validate;

use serde::{Deserialize, Serialize};

use crate::assoc::{association_rule_check, qos_report, AssociationPolicy, PowerMinSolution};
use crate::channel::{ChannelStats, NetworkScenario};
use crate::maxmin::{solve_max_min_with, BisectionConfig, TraceStep, DEFAULT_DELTA};
use crate::numeric::stream_rng;
use crate::scenario_file::ScenarioFile;
use crate::se::QosTargets;
use crate::{Error, Result};

pub use output::{emit_results, results_csv, ResultsTable, Sidecar};
pub use validate::{validate_closed_form, ValidationReport, ValidationRow, ValidationSpec};

/// Default per-user target for power minimization sweeps, bit/symbol.
pub const DEFAULT_TARGET_SE: f64 = 1.0;
/// Tolerance of the association rule re-check.
pub const RULE_TOL: f64 = 1e-6;
/// Allowed SE shortfall against a target.
pub const QOS_TOL: f64 = 1e-6;
/// Allowed relative residual of a binding QoS row.
pub const BINDING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    /// Fixed per-user target, total power minimized.
    PowerMin { target_se: f64 },
    /// Common level maximized by bisection with accuracy `delta`.
    MaxMin { delta: f64 },
}

impl SweepMode {
    pub fn power_min() -> Self {
        SweepMode::PowerMin {
            target_se: DEFAULT_TARGET_SE,
        }
    }

    pub fn max_min() -> Self {
        SweepMode::MaxMin { delta: DEFAULT_DELTA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub antenna_counts: Vec<usize>,
    pub mode: SweepMode,
    pub num_drops: usize,
    pub scenario: ScenarioFile,
    /// Where `scenario` came from, if a file.
    pub scenario_path: Option<String>,
    pub rng_seed: u64,
    /// Keep bisection traces (max-min mode).
    #[serde(default)]
    pub record_traces: bool,
}

impl SweepSpec {
    pub fn new(antenna_counts: Vec<usize>, mode: SweepMode, num_drops: usize, rng_seed: u64) -> Self {
        Self {
            antenna_counts,
            mode,
            num_drops,
            scenario: ScenarioFile::default(),
            scenario_path: None,
            rng_seed,
            record_traces: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_drops == 0 {
            return Err(Error::InvalidScenario("num_drops must be at least 1".into()));
        }
        if self.antenna_counts.is_empty() || self.antenna_counts.contains(&0) {
            return Err(Error::InvalidScenario("antenna list must be nonempty and positive".into()));
        }
        match self.mode {
            SweepMode::PowerMin { target_se } if !(target_se >= 0.0 && target_se.is_finite()) => {
                Err(Error::Domain(format!("target SE must be finite and >= 0, got {target_se}")))
            }
            SweepMode::MaxMin { delta } if !(delta > 0.0) => Err(Error::Domain(format!("delta must be positive, got {delta}"))),
            _ => Ok(()),
        }
    }
}

/// Outcome of one drop at one antenna count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropMetrics {
    pub drop: usize,
    pub antennas: usize,
    pub feasible_opt: bool,
    pub feasible_maxsnr: bool,
    /// W; absent when infeasible.
    pub total_power_opt: Option<f64>,
    pub total_power_maxsnr: Option<f64>,
    /// Max-min level, bit/symbol (max-min mode).
    pub maxmin_xi_opt: Option<f64>,
    pub maxmin_xi_maxsnr: Option<f64>,
    /// Users served by more than one BS under the optimal association.
    pub joint_tx_user_fraction: Option<f64>,
}

/// Results of the invariant re-checks over a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InvariantTally {
    pub rule_checks: usize,
    pub rule_violations: usize,
    pub max_rule_gap: f64,
    pub qos_checks: usize,
    pub qos_shortfalls: usize,
    pub min_qos_margin: Option<f64>,
    pub binding_failures: usize,
    pub max_binding_gap: f64,
    pub power_limit_excesses: usize,
    /// Drops where max-SNR is feasible but the optimal association is not.
    pub inclusion_violations: usize,
    /// Drops where the optimal association uses more power than max-SNR.
    pub ordering_violations: usize,
}

impl InvariantTally {
    pub fn all_passed(&self) -> bool {
        self.rule_violations == 0
            && self.qos_shortfalls == 0
            && self.binding_failures == 0
            && self.power_limit_excesses == 0
            && self.inclusion_violations == 0
            && self.ordering_violations == 0
    }

    pub fn merge(&mut self, o: &InvariantTally) {
        self.rule_checks += o.rule_checks;
        self.rule_violations += o.rule_violations;
        self.max_rule_gap = self.max_rule_gap.max(o.max_rule_gap);
        self.qos_checks += o.qos_checks;
        self.qos_shortfalls += o.qos_shortfalls;
        self.min_qos_margin = match (self.min_qos_margin, o.min_qos_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.binding_failures += o.binding_failures;
        self.max_binding_gap = self.max_binding_gap.max(o.max_binding_gap);
        self.power_limit_excesses += o.power_limit_excesses;
        self.inclusion_violations += o.inclusion_violations;
        self.ordering_violations += o.ordering_violations;
    }

    fn check_solution(
        &mut self,
        stats: &ChannelStats,
        targets: &QosTargets,
        scenario: &NetworkScenario,
        sol: &PowerMinSolution,
        with_rule: bool,
    ) -> Result<()> {
        if with_rule {
            let report = association_rule_check(stats, targets, scenario, sol, RULE_TOL)?;
            self.rule_checks += 1;
            self.rule_violations += usize::from(!report.passed());
            self.max_rule_gap = self.max_rule_gap.max(report.max_gap);
        }
        let q = qos_report(stats, targets, scenario, &sol.alloc)?;
        self.qos_checks += 1;
        self.qos_shortfalls += usize::from(q.min_margin < -QOS_TOL);
        self.min_qos_margin = Some(self.min_qos_margin.map_or(q.min_margin, |m| m.min(q.min_margin)));
        self.binding_failures += usize::from(q.max_binding_gap > BINDING_TOL);
        self.max_binding_gap = self.max_binding_gap.max(q.max_binding_gap);
        let pmax_scale = scenario.pmax.iter().fold(0.0f64, |a, &b| a.max(b));
        self.power_limit_excesses += usize::from(q.max_power_excess > 1e-9 * pmax_scale);
        Ok(())
    }
}

/// One bisection trace line, tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub drop: usize,
    pub antennas: usize,
    pub policy: AssociationPolicy,
    #[serde(flatten)]
    pub step: TraceStep,
}

/// Per-antenna-count aggregate of a sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepSummary {
    pub antennas: usize,
    pub drops: usize,
    /// Fraction of drops where the fixed targets cannot be met.
    pub bad_service_opt: Option<f64>,
    pub bad_service_maxsnr: Option<f64>,
    /// Drops where both associations are feasible.
    pub both_feasible: Option<usize>,
    /// Mean total power over drops where both associations are feasible, W.
    pub mean_power_opt: Option<f64>,
    pub mean_power_maxsnr: Option<f64>,
    pub mean_maxmin_xi_opt: Option<f64>,
    pub mean_maxmin_xi_maxsnr: Option<f64>,
    /// Mean fraction of users with joint transmission (optimal association).
    pub joint_tx_user_fraction: Option<f64>,
    pub single_bs_user_fraction: Option<f64>,
}

impl SweepSummary {
    /// Metric name/value pairs in the CSV order; absent metrics are `None`.
    pub fn metrics(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("drops", Some(self.drops as f64)),
            ("bad_service_opt", self.bad_service_opt),
            ("bad_service_maxsnr", self.bad_service_maxsnr),
            ("both_feasible", self.both_feasible.map(|v| v as f64)),
            ("mean_power_opt_w", self.mean_power_opt),
            ("mean_power_maxsnr_w", self.mean_power_maxsnr),
            ("mean_maxmin_xi_opt", self.mean_maxmin_xi_opt),
            ("mean_maxmin_xi_maxsnr", self.mean_maxmin_xi_maxsnr),
            ("joint_tx_user_fraction", self.joint_tx_user_fraction),
            ("single_bs_user_fraction", self.single_bs_user_fraction),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Drop-major, then antenna count in spec order.
    pub drops: Vec<DropMetrics>,
    pub summaries: Vec<SweepSummary>,
    pub invariants: InvariantTally,
    pub traces: Vec<TraceRecord>,
}

impl SweepResult {
    /// True when no drop at any antenna count had a feasible optimal solution.
    pub fn all_infeasible(&self) -> bool {
        self.drops.iter().all(|d| !d.feasible_opt)
    }

    pub fn summary(&self, antennas: usize) -> Option<&SweepSummary> {
        self.summaries.iter().find(|s| s.antennas == antennas)
    }

    pub fn traces_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Users and shadowing of drop `drop`, shared by every antenna count.
pub fn draw_drop(spec: &SweepSpec, drop: usize) -> Result<(NetworkScenario, ChannelStats)> {
    let mut rng = stream_rng(spec.rng_seed, drop as u64);
    let scenario = spec.scenario.draw(spec.antenna_counts[0], &mut rng)?;
    let stats = ChannelStats::draw(&scenario, &mut rng)?;
    Ok((scenario, stats))
}

struct DropOutcome {
    metrics: Vec<DropMetrics>,
    tally: InvariantTally,
    traces: Vec<TraceRecord>,
}

fn run_drop(spec: &SweepSpec, drop: usize) -> Result<DropOutcome> {
    let (base, stats) = draw_drop(spec, drop)?;
    let k = base.num_users();
    let mut out = DropOutcome {
        metrics: Vec::with_capacity(spec.antenna_counts.len()),
        tally: InvariantTally::default(),
        traces: Vec::new(),
    };
    for &m in &spec.antenna_counts {
        let scenario = NetworkScenario {
            num_antennas: m,
            ..base.clone()
        };
        let mut row = DropMetrics {
            drop,
            antennas: m,
            feasible_opt: false,
            feasible_maxsnr: false,
            total_power_opt: None,
            total_power_maxsnr: None,
            maxmin_xi_opt: None,
            maxmin_xi_maxsnr: None,
            joint_tx_user_fraction: None,
        };
        match spec.mode {
            SweepMode::PowerMin { target_se } => {
                let targets = QosTargets::uniform(&scenario, target_se)?;
                let opt = AssociationPolicy::Optimal.solve(&stats, &targets, &scenario)?;
                let snr = AssociationPolicy::MaxSnr.solve(&stats, &targets, &scenario)?;
                if let Some(sol) = opt.solution() {
                    out.tally.check_solution(&stats, &targets, &scenario, sol, true)?;
                    row.feasible_opt = true;
                    row.total_power_opt = Some(sol.objective);
                    row.joint_tx_user_fraction = Some(sol.association.joint_fraction());
                }
                if let Some(sol) = snr.solution() {
                    out.tally.check_solution(&stats, &targets, &scenario, sol, false)?;
                    row.feasible_maxsnr = true;
                    row.total_power_maxsnr = Some(sol.objective);
                }
                if row.feasible_maxsnr && !row.feasible_opt {
                    out.tally.inclusion_violations += 1;
                }
                if let (Some(a), Some(b)) = (row.total_power_opt, row.total_power_maxsnr) {
                    if a > b * (1.0 + 1e-9) {
                        out.tally.ordering_violations += 1;
                    }
                }
            }
            SweepMode::MaxMin { delta } => {
                let weights = vec![1.0; k];
                let cfg = BisectionConfig {
                    delta,
                    ..Default::default()
                };
                for policy in [AssociationPolicy::Optimal, AssociationPolicy::MaxSnr] {
                    let r = solve_max_min_with(policy, &stats, &scenario, &weights, &cfg)?;
                    if let Some(sol) = &r.solution {
                        let targets = QosTargets::from_level(&scenario, &weights, r.lower)?;
                        out.tally
                            .check_solution(&stats, &targets, &scenario, sol, policy == AssociationPolicy::Optimal)?;
                    }
                    let feasible = r.solution.is_some();
                    match policy {
                        AssociationPolicy::Optimal => {
                            row.feasible_opt = feasible;
                            row.maxmin_xi_opt = Some(r.lower);
                            row.total_power_opt = r.solution.as_ref().map(|s| s.objective);
                            row.joint_tx_user_fraction = r.solution.as_ref().map(|s| s.association.joint_fraction());
                        }
                        AssociationPolicy::MaxSnr => {
                            row.feasible_maxsnr = feasible;
                            row.maxmin_xi_maxsnr = Some(r.lower);
                            row.total_power_maxsnr = r.solution.as_ref().map(|s| s.objective);
                        }
                    }
                    if spec.record_traces {
                        out.traces.extend(r.trace.iter().map(|&step| TraceRecord {
                            drop,
                            antennas: m,
                            policy,
                            step,
                        }));
                    }
                }
            }
        }
        out.metrics.push(row);
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn summarize(mode: SweepMode, antennas: usize, rows: &[&DropMetrics]) -> SweepSummary {
    let n = rows.len();
    let both: Vec<&&DropMetrics> = rows.iter().filter(|r| r.feasible_opt && r.feasible_maxsnr).collect();
    let joint = mean(rows.iter().filter_map(|r| r.joint_tx_user_fraction));
    let mut s = SweepSummary {
        antennas,
        drops: n,
        joint_tx_user_fraction: joint,
        single_bs_user_fraction: joint.map(|j| 1.0 - j),
        ..Default::default()
    };
    match mode {
        SweepMode::PowerMin { .. } => {
            s.bad_service_opt = Some(rows.iter().filter(|r| !r.feasible_opt).count() as f64 / n as f64);
            s.bad_service_maxsnr = Some(rows.iter().filter(|r| !r.feasible_maxsnr).count() as f64 / n as f64);
            s.both_feasible = Some(both.len());
            s.mean_power_opt = mean(both.iter().filter_map(|r| r.total_power_opt));
            s.mean_power_maxsnr = mean(both.iter().filter_map(|r| r.total_power_maxsnr));
        }
        SweepMode::MaxMin { .. } => {
            s.mean_maxmin_xi_opt = mean(rows.iter().filter_map(|r| r.maxmin_xi_opt));
            s.mean_maxmin_xi_maxsnr = mean(rows.iter().filter_map(|r| r.maxmin_xi_maxsnr));
        }
    }
    s
}

/// Runs every drop at every antenna count and aggregates per antenna count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let run = |d: usize| run_drop(spec, d);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<DropOutcome>> = {
        use rayon::prelude::*;
        (0..spec.num_drops).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<DropOutcome>> = (0..spec.num_drops).map(run).collect();

    let mut drops = Vec::with_capacity(spec.num_drops * spec.antenna_counts.len());
    let mut invariants = InvariantTally::default();
    let mut traces = Vec::new();
    for o in outcomes {
        let o = o?;
        drops.extend(o.metrics);
        invariants.merge(&o.tally);
        traces.extend(o.traces);
    }
    let summaries = spec
        .antenna_counts
        .iter()
        .map(|&m| {
            let rows: Vec<&DropMetrics> = drops.iter().filter(|d| d.antennas == m).collect();
            summarize(spec.mode, m, &rows)
        })
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        drops,
        summaries,
        invariants,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: SweepMode) -> SweepSpec {
        SweepSpec::new(vec![50, 100], mode, 6, 42)
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::new(vec![], SweepMode::power_min(), 1, 0).validate().is_err());
        assert!(SweepSpec::new(vec![10], SweepMode::power_min(), 0, 0).validate().is_err());
        assert!(SweepSpec::new(vec![10], SweepMode::MaxMin { delta: 0.0 }, 1, 0).validate().is_err());
        assert!(SweepSpec::new(vec![10], SweepMode::PowerMin { target_se: -1.0 }, 1, 0).validate().is_err());
    }

    #[test]
    fn single_drop_is_deterministic() {
        let spec = SweepSpec::new(vec![64], SweepMode::power_min(), 1, 7);
        assert_eq!(run_sweep(&spec).unwrap(), run_sweep(&spec).unwrap());
    }

    #[test]
    fn powermin_sweep_invariants() {
        let r = run_sweep(&small(SweepMode::power_min())).unwrap();
        assert_eq!(r.drops.len(), 12);
        assert!(r.invariants.all_passed(), "{:?}", r.invariants);
        for s in &r.summaries {
            assert!(s.bad_service_opt.unwrap() <= s.bad_service_maxsnr.unwrap());
            if let (Some(a), Some(b)) = (s.mean_power_opt, s.mean_power_maxsnr) {
                assert!(a <= b * (1.0 + 1e-9));
            }
            assert!(s.mean_maxmin_xi_opt.is_none());
        }
    }

    #[test]
    fn maxmin_sweep_invariants_and_traces() {
        let mut spec = small(SweepMode::max_min());
        spec.record_traces = true;
        let r = run_sweep(&spec).unwrap();
        assert!(r.invariants.all_passed(), "{:?}", r.invariants);
        for d in &r.drops {
            assert!(d.maxmin_xi_opt.unwrap() + DEFAULT_DELTA >= d.maxmin_xi_maxsnr.unwrap());
            let j = d.joint_tx_user_fraction.unwrap();
            assert!((0.0..=1.0).contains(&j));
        }
        assert!(!r.traces.is_empty());
        let line = r.traces_jsonl().lines().next().unwrap().to_string();
        let back: TraceRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r.traces[0]);
    }

    #[test]
    fn drops_share_geometry_across_antenna_counts() {
        let spec = small(SweepMode::power_min());
        let (a, sa) = draw_drop(&spec, 3).unwrap();
        let (b, sb) = draw_drop(&spec, 3).unwrap();
        assert_eq!((&a, &sa), (&b, &sb));
        let (c, _) = draw_drop(&spec, 4).unwrap();
        assert_ne!(c.user_positions, b.user_positions);
    }

    #[test]
    fn unreachable_targets_are_all_infeasible() {
        let spec = SweepSpec::new(vec![16], SweepMode::PowerMin { target_se: 30.0 }, 3, 1);
        let r = run_sweep(&spec).unwrap();
        assert!(r.all_infeasible());
        assert_eq!(r.summaries[0].bad_service_opt, Some(1.0));
        assert_eq!(r.summaries[0].mean_power_opt, None);
    }
}
