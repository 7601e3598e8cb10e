//! Browser bindings for the `mimo-assoc` simulator.
//!
//! Each exported function takes plain numbers and returns a JSON string, so
//! the page needs no generated TypeScript glue beyond `wasm-bindgen`'s.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mimo_assoc::assoc::max_snr_bs;
use mimo_assoc::harness::{self, SweepMode, SweepSpec, ValidationSpec};
use mimo_assoc::se::se_all;
use mimo_assoc::{AssociationPolicy, PowerMinOutcome, Point, QosTargets};

#[derive(Serialize)]
struct PolicyView {
    feasible: bool,
    total_power_w: Option<f64>,
    /// Transmit power per BS, W.
    bs_power_w: Vec<f64>,
    serving_sets: Vec<Vec<usize>>,
    se: Vec<f64>,
}

#[derive(Serialize)]
struct DropView {
    antennas: usize,
    target_se: f64,
    bs: Vec<Point>,
    users: Vec<Point>,
    max_snr_bs: Vec<usize>,
    optimal: PolicyView,
    max_snr: PolicyView,
}

#[derive(Serialize)]
struct CurvePoint {
    antennas: usize,
    drops: usize,
    xi_optimal: Option<f64>,
    xi_max_snr: Option<f64>,
    single_bs_fraction: Option<f64>,
}

#[derive(Serialize)]
struct SinrCheck {
    user: usize,
    num_bs: usize,
    num_users: usize,
    closed_form: f64,
    monte_carlo: f64,
    std_error: f64,
    rel_error: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn policy_view(
    outcome: &PowerMinOutcome,
    stats: &mimo_assoc::ChannelStats,
    scenario: &mimo_assoc::NetworkScenario,
) -> Result<PolicyView, String> {
    let Some(sol) = outcome.solution() else {
        return Ok(PolicyView {
            feasible: false,
            total_power_w: None,
            bs_power_w: Vec::new(),
            serving_sets: Vec::new(),
            se: Vec::new(),
        });
    };
    let rho = sol.alloc.matrix();
    Ok(PolicyView {
        feasible: true,
        total_power_w: Some(sol.objective),
        bs_power_w: (0..rho.rows()).map(|i| rho.row(i).iter().sum()).collect(),
        serving_sets: sol.association.serving_sets.clone(),
        se: se_all(stats, &sol.alloc, scenario).map_err(|e| e.to_string())?,
    })
}

/// Draws one drop and solves power minimization under both associations.
pub fn simulate_drop_json(seed: u64, antennas: usize, target_se: f64) -> Result<String, String> {
    let spec = SweepSpec::new(vec![antennas], SweepMode::power_min(), 1, seed);
    let (scenario, stats) = harness::draw_drop(&spec, 0).map_err(|e| e.to_string())?;
    let targets = QosTargets::uniform(&scenario, target_se).map_err(|e| e.to_string())?;
    let solve = |p: AssociationPolicy| p.solve(&stats, &targets, &scenario).map_err(|e| e.to_string());
    let view = DropView {
        antennas,
        target_se,
        bs: scenario.bs_positions.clone(),
        users: scenario.user_positions.clone(),
        max_snr_bs: max_snr_bs(&stats),
        optimal: policy_view(&solve(AssociationPolicy::Optimal)?, &stats, &scenario)?,
        max_snr: policy_view(&solve(AssociationPolicy::MaxSnr)?, &stats, &scenario)?,
    };
    to_json(&view)
}

/// Mean max-min SE against the antenna count, over `drops` random drops.
pub fn max_min_curve_json(seed: u64, drops: usize, antennas: &[usize]) -> Result<String, String> {
    let spec = SweepSpec::new(antennas.to_vec(), SweepMode::max_min(), drops, seed);
    let result = harness::run_sweep(&spec).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = result
        .summaries
        .iter()
        .map(|s| CurvePoint {
            antennas: s.antennas,
            drops: s.drops,
            xi_optimal: s.mean_maxmin_xi_opt,
            xi_max_snr: s.mean_maxmin_xi_maxsnr,
            single_bs_fraction: s.single_bs_user_fraction,
        })
        .collect();
    to_json(&points)
}

/// Closed-form SINR against a Monte-Carlo estimate on one small random drop.
pub fn sinr_check_json(seed: u64, antennas: usize, samples: usize) -> Result<String, String> {
    let spec = ValidationSpec {
        antenna_counts: vec![antennas],
        num_drops: 1,
        num_samples: samples,
        rng_seed: seed,
        ..Default::default()
    };
    let report = harness::validate_closed_form(&spec).map_err(|e| e.to_string())?;
    let rows: Vec<SinrCheck> = report
        .rows
        .iter()
        .map(|r| SinrCheck {
            user: r.user,
            num_bs: r.num_bs,
            num_users: r.num_users,
            closed_form: r.closed_form,
            monte_carlo: r.monte_carlo,
            std_error: r.std_error,
            rel_error: r.rel_error,
        })
        .collect();
    to_json(&rows)
}

#[wasm_bindgen]
pub fn simulate_drop(seed: u32, antennas: u32, target_se: f64) -> Result<String, JsError> {
    simulate_drop_json(seed.into(), antennas as usize, target_se).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn max_min_curve(seed: u32, drops: u32, antennas: Vec<u32>) -> Result<String, JsError> {
    let antennas: Vec<usize> = antennas.into_iter().map(|m| m as usize).collect();
    max_min_curve_json(seed.into(), drops as usize, &antennas).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sinr_check(seed: u32, antennas: u32, samples: u32) -> Result<String, JsError> {
    sinr_check_json(seed.into(), antennas as usize, samples as usize).map_err(|e| JsError::new(&e))
}
