//! Closed-form SINR against the Monte-Carlo oracle on random small drops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelStats;
use crate::numeric::{stream_rng, Matrix};
use crate::oracle::{estimate_sinr_all, McConfig};
use crate::scenario_file::{PowerSpec, ScenarioFile};
use crate::se::{sinr_mrt, PowerAllocation};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSpec {
    pub scenario: ScenarioFile,
    /// Drop `d` uses `antenna_counts[d % len]`.
    pub antenna_counts: Vec<usize>,
    pub num_drops: usize,
    pub num_samples: usize,
    pub max_bs: usize,
    pub max_users: usize,
    pub rng_seed: u64,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioFile::default(),
            antenna_counts: vec![16, 64],
            num_drops: 20,
            num_samples: 100_000,
            max_bs: 4,
            max_users: 8,
            rng_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub drop: usize,
    pub antennas: usize,
    pub num_bs: usize,
    pub num_users: usize,
    pub user: usize,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub rel_error: f64,
}

impl ValidationRow {
    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.monte_carlo - self.closed_form).abs() / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn worst_rel_error(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max)
    }

    pub fn worst_z_score(&self) -> f64 {
        self.rows.iter().map(ValidationRow::z_score).fold(0.0, f64::max)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r).expect("rows serialize"));
            out.push('\n');
        }
        out
    }
}

/// Each drop takes the first `L` BSs of the scenario (`L` uniform in
/// `1..=max_bs`), drops `K` users (uniform in `1..=max_users`) and draws
/// every `rho[i][t]` uniformly from `[0, pmax_i / K]`.
pub fn validate_closed_form(spec: &ValidationSpec) -> Result<ValidationReport> {
    let mut rows = Vec::new();
    let all_bs = spec.scenario.bs_positions();
    for d in 0..spec.num_drops {
        let mut rng = stream_rng(spec.rng_seed, d as u64);
        let m = spec.antenna_counts[d % spec.antenna_counts.len()];
        let k = rng.random_range(1..=spec.max_users);
        let l = rng.random_range(1..=spec.max_bs.min(all_bs.len()));

        let mut f = spec.scenario.clone();
        f.bs_positions = Some(all_bs[..l].to_vec());
        f.user_positions = None;
        f.num_users = k;
        if let PowerSpec::Each(v) = &f.pmax {
            f.pmax = PowerSpec::Each(v[..l].to_vec());
        }
        let scenario = f.draw(m, &mut rng)?;
        let stats = ChannelStats::draw(&scenario, &mut rng)?;
        let rho = Matrix::from_fn(l, k, |i, _| rng.random_range(0.0..=scenario.pmax[i] / k as f64));
        let alloc = PowerAllocation::new(rho)?;

        let cfg = McConfig::new(spec.num_samples, spec.rng_seed ^ ((d as u64 + 1) << 32))?;
        for est in estimate_sinr_all(&stats, &alloc, &scenario, &cfg)? {
            let closed = sinr_mrt(&stats, &alloc, &scenario, est.user)?;
            let rel_error = if closed == 0.0 {
                est.sinr.value.abs()
            } else {
                (est.sinr.value - closed).abs() / closed
            };
            rows.push(ValidationRow {
                drop: d,
                antennas: m,
                num_bs: l,
                num_users: k,
                user: est.user,
                closed_form: closed,
                monte_carlo: est.sinr.value,
                std_error: est.sinr.std_error,
                rel_error,
            });
        }
    }
    Ok(ValidationReport { rows })
}
