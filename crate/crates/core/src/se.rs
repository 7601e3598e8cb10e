//! Closed-form downlink SINR and spectral efficiency under MRT with
//! non-coherent joint transmission.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelStats, NetworkScenario};
use crate::numeric::{CompensatedSum, Matrix};
use crate::{Error, Result};

/// Per-BS, per-user transmit powers `rho[i][t]` in W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    rho: Matrix,
}

impl PowerAllocation {
    pub fn zeros(num_bs: usize, num_users: usize) -> Self {
        Self {
            rho: Matrix::zeros(num_bs, num_users),
        }
    }

    /// Rejects negative or non-finite entries.
    pub fn new(rho: Matrix) -> Result<Self> {
        if rho.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("transmit powers must be finite and nonnegative".into()));
        }
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rho
    }

    pub fn num_bs(&self) -> usize {
        self.rho.rows()
    }

    pub fn num_users(&self) -> usize {
        self.rho.cols()
    }

    pub fn get(&self, bs: usize, user: usize) -> f64 {
        self.rho[(bs, user)]
    }

    pub fn set(&mut self, bs: usize, user: usize, power: f64) -> Result<()> {
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::Domain(format!("invalid power {power}")));
        }
        self.rho[(bs, user)] = power;
        Ok(())
    }

    /// Transmit power of BS `bs`, summed over its users.
    pub fn bs_power(&self, bs: usize) -> f64 {
        self.rho.row(bs).iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn total_power(&self) -> f64 {
        self.rho.as_slice().iter().copied().collect::<CompensatedSum>().value()
    }
}

/// Per-user QoS targets in bit/symbol, their SINR thresholds, and max-min weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosTargets {
    pub xi: Vec<f64>,
    pub xi_hat: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QosTargets {
    pub fn new(xi: Vec<f64>, coherence_length: usize, pilot_length: usize) -> Result<Self> {
        let weights = vec![1.0; xi.len()];
        Self::weighted(xi, weights, coherence_length, pilot_length)
    }

    pub fn weighted(xi: Vec<f64>, weights: Vec<f64>, coherence_length: usize, pilot_length: usize) -> Result<Self> {
        if xi.len() != weights.len() {
            return Err(Error::Dimension(format!("{} targets, {} weights", xi.len(), weights.len())));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive".into()));
        }
        let xi_hat = xi
            .iter()
            .map(|&x| qos_to_threshold(x, coherence_length, pilot_length))
            .collect::<Result<_>>()?;
        Ok(Self { xi, xi_hat, weights })
    }

    /// The same target for every user of `scenario`.
    pub fn uniform(scenario: &NetworkScenario, xi: f64) -> Result<Self> {
        Self::new(vec![xi; scenario.num_users()], scenario.coherence_length, scenario.pilot_length)
    }

    /// Targets `xi_k = w_k * level` for a common max-min level.
    pub fn from_level(scenario: &NetworkScenario, weights: &[f64], level: f64) -> Result<Self> {
        let xi = weights.iter().map(|w| w * level).collect();
        Self::weighted(xi, weights.to_vec(), scenario.coherence_length, scenario.pilot_length)
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// SINR threshold equivalent to a spectral-efficiency target:
/// `2^(xi tau_c / (tau_c - tau_p)) - 1`.
pub fn qos_to_threshold(xi: f64, coherence_length: usize, pilot_length: usize) -> Result<f64> {
    if pilot_length >= coherence_length {
        return Err(Error::Domain(format!(
            "pilot length {pilot_length} leaves no data symbols in {coherence_length}"
        )));
    }
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("QoS target must be finite and >= 0, got {xi}")));
    }
    let tc = coherence_length as f64;
    let exponent = xi * tc / (tc - pilot_length as f64);
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}

/// Inverse of [`qos_to_threshold`].
pub fn threshold_to_qos(threshold: f64, coherence_length: usize, pilot_length: usize) -> Result<f64> {
    if pilot_length >= coherence_length {
        return Err(Error::Domain(format!(
            "pilot length {pilot_length} leaves no data symbols in {coherence_length}"
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!("SINR threshold must be >= 0, got {threshold}")));
    }
    let tc = coherence_length as f64;
    Ok((1.0 - pilot_length as f64 / tc) * threshold.ln_1p() / std::f64::consts::LN_2)
}

fn check_dims(stats: &ChannelStats, alloc: &PowerAllocation, scenario: &NetworkScenario, user: usize) -> Result<()> {
    let (l, k) = (scenario.num_bs(), scenario.num_users());
    if stats.beta.shape() != (l, k) || stats.gamma.shape() != (l, k) {
        return Err(Error::Dimension(format!("channel stats are not {l}x{k}")));
    }
    if alloc.matrix().shape() != (l, k) {
        return Err(Error::Dimension(format!(
            "allocation is {:?}, expected {l}x{k}",
            alloc.matrix().shape()
        )));
    }
    if user >= k {
        return Err(Error::Dimension(format!("user {user} out of range for K={k}")));
    }
    Ok(())
}

/// Closed-form MRT SINR of `user`:
/// `M sum_i rho_ik gamma_ik / (sum_i sum_t rho_it beta_ik + sigma2_dl)`.
pub fn sinr_mrt(stats: &ChannelStats, alloc: &PowerAllocation, scenario: &NetworkScenario, user: usize) -> Result<f64> {
    check_dims(stats, alloc, scenario, user)?;
    let l = scenario.num_bs();
    let k = scenario.num_users();
    let m = scenario.num_antennas as f64;
    let rho = alloc.matrix();

    let mut signal = CompensatedSum::new();
    for i in 0..l {
        signal.add(rho[(i, user)] * stats.gamma[(i, user)]);
    }
    let signal = m * signal.value();
    if signal == 0.0 {
        return Ok(0.0);
    }

    let mut interference = CompensatedSum::new();
    for i in 0..l {
        let b = stats.beta[(i, user)];
        for t in 0..k {
            interference.add(rho[(i, t)] * b);
        }
    }
    interference.add(scenario.noise_dl);
    Ok(signal / interference.value())
}

/// Spectral efficiency `(1 - tau_p/tau_c) log2(1 + SINR)` in bit/symbol.
pub fn se_mrt(stats: &ChannelStats, alloc: &PowerAllocation, scenario: &NetworkScenario, user: usize) -> Result<f64> {
    let sinr = sinr_mrt(stats, alloc, scenario, user)?;
    Ok(se_from_sinr(sinr, scenario.coherence_length, scenario.pilot_length))
}

pub fn se_from_sinr(sinr: f64, coherence_length: usize, pilot_length: usize) -> f64 {
    if pilot_length >= coherence_length {
        return 0.0;
    }
    let frac = 1.0 - pilot_length as f64 / coherence_length as f64;
    frac * sinr.ln_1p() / std::f64::consts::LN_2
}

/// SE of every user.
pub fn se_all(stats: &ChannelStats, alloc: &PowerAllocation, scenario: &NetworkScenario) -> Result<Vec<f64>> {
    (0..scenario.num_users()).map(|k| se_mrt(stats, alloc, scenario, k)).collect()
}
