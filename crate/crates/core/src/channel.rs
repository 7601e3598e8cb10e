//! Drop geometry, large-scale fading and MMSE channel estimation statistics.
//!
//! All quantities are linear and in SI units (W, km for distances). dBm
//! inputs are converted once when a scenario is built.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numeric::{db_to_linear, dbm_to_watts, Matrix};
use crate::{Error, Result};

pub const DEFAULT_PMAX_W: f64 = 40.0;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;
pub const DEFAULT_COHERENCE_LENGTH: usize = 200;
pub const DEFAULT_PILOT_LENGTH: usize = 20;
pub const DEFAULT_NUM_USERS: usize = 20;
pub const DEFAULT_SHADOW_STD_DB: f64 = 7.0;
pub const DEFAULT_NOISE_DBM: f64 = -96.0;
pub const DEFAULT_PILOT_ENERGY_J: f64 = 2e-7;
/// Users closer than this to a BS are clamped to it (10 m).
pub const MIN_DISTANCE_KM: f64 = 0.01;

/// A point in the plane, in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// How a pilot energy figure is spread over the pilot sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotEnergy {
    /// The energy covers the whole `tau_p`-symbol sequence.
    #[default]
    PerSequence,
    /// The energy is spent on every pilot symbol.
    PerSymbol,
}

impl PilotEnergy {
    /// Per-symbol pilot power in W, with symbol duration `1 / bandwidth`.
    pub fn pilot_power(self, energy_j: f64, bandwidth_hz: f64, pilot_length: usize) -> f64 {
        let symbol_time = 1.0 / bandwidth_hz;
        match self {
            PilotEnergy::PerSequence => energy_j / (pilot_length as f64 * symbol_time),
            PilotEnergy::PerSymbol => energy_j / symbol_time,
        }
    }
}

/// Geometry, antenna count and pilot/power/noise parameters of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub num_antennas: usize,
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub coherence_length: usize,
    pub pilot_length: usize,
    /// Per-user UL pilot power per symbol, W.
    pub pilot_power: Vec<f64>,
    pub noise_ul: f64,
    pub noise_dl: f64,
    /// Per-BS peak transmit power, W.
    pub pmax: Vec<f64>,
    pub shadow_std_db: f64,
    pub rng_seed: u64,
}

impl NetworkScenario {
    /// Default parameter set with the given geometry: 40 W per BS, 200-symbol
    /// coherence interval, 20 pilot symbols, 7 dB shadowing, -96 dBm noise,
    /// and a 2e-7 J pilot sequence over 20 MHz.
    pub fn with_defaults(num_antennas: usize, bs_positions: Vec<Point>, user_positions: Vec<Point>) -> Self {
        let l = bs_positions.len();
        let k = user_positions.len();
        let pilot_length = DEFAULT_PILOT_LENGTH.max(k);
        let p = PilotEnergy::PerSequence.pilot_power(DEFAULT_PILOT_ENERGY_J, DEFAULT_BANDWIDTH_HZ, pilot_length);
        Self {
            num_antennas,
            bs_positions,
            user_positions,
            coherence_length: DEFAULT_COHERENCE_LENGTH,
            pilot_length,
            pilot_power: vec![p; k],
            noise_ul: dbm_to_watts(DEFAULT_NOISE_DBM),
            noise_dl: dbm_to_watts(DEFAULT_NOISE_DBM),
            pmax: vec![DEFAULT_PMAX_W; l],
            shadow_std_db: DEFAULT_SHADOW_STD_DB,
            rng_seed: 0,
        }
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    /// Fraction of each coherence interval left for data, `1 - tau_p / tau_c`.
    pub fn data_fraction(&self) -> f64 {
        1.0 - self.pilot_length as f64 / self.coherence_length as f64
    }

    pub fn validate(&self) -> Result<()> {
        let (l, k, m) = (self.num_bs(), self.num_users(), self.num_antennas);
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if l == 0 || k == 0 || m == 0 {
            return bad(format!("need L, K, M >= 1, got L={l} K={k} M={m}"));
        }
        if self.pilot_length < k {
            return bad(format!("pilot length {} shorter than K={k}", self.pilot_length));
        }
        if self.pilot_length >= self.coherence_length {
            return bad(format!(
                "pilot length {} must be below coherence length {}",
                self.pilot_length, self.coherence_length
            ));
        }
        if self.pilot_power.len() != k {
            return bad(format!("{} pilot powers for {k} users", self.pilot_power.len()));
        }
        if self.pmax.len() != l {
            return bad(format!("{} power limits for {l} BSs", self.pmax.len()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.pilot_power.iter().all(|&p| positive(p)) {
            return bad("pilot powers must be positive".into());
        }
        if !self.pmax.iter().all(|&p| positive(p)) {
            return bad("BS power limits must be positive".into());
        }
        if !positive(self.noise_ul) || !positive(self.noise_dl) {
            return bad("noise variances must be positive".into());
        }
        if !(self.shadow_std_db.is_finite() && self.shadow_std_db >= 0.0) {
            return bad("shadowing standard deviation must be finite and >= 0".into());
        }
        let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
        if !self.bs_positions.iter().chain(&self.user_positions).all(finite) {
            return bad("positions must be finite".into());
        }
        Ok(())
    }

    /// BS-to-user distance matrix, L x K, km.
    pub fn distances(&self) -> Matrix {
        Matrix::from_fn(self.num_bs(), self.num_users(), |l, k| {
            self.bs_positions[l].distance(&self.user_positions[k])
        })
    }
}

/// Four BSs on the corners of a square of side `side_km`.
pub fn square_layout(side_km: f64) -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0),
        Point::new(side_km, 0.0),
        Point::new(0.0, side_km),
        Point::new(side_km, side_km),
    ]
}

/// Drops `num_users` uniformly over the bounding rectangle of `bs_positions`,
/// rejecting points within `exclusion_km` of any BS.
pub fn drop_users<R: Rng + ?Sized>(
    rng: &mut R,
    bs_positions: &[Point],
    num_users: usize,
    exclusion_km: f64,
) -> Vec<Point> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in bs_positions {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    // a degenerate rectangle (single BS, collinear BSs) gets a 1 km extent
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let mut users = Vec::with_capacity(num_users);
    while users.len() < num_users {
        let p = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
        if bs_positions.iter().all(|b| b.distance(&p) >= exclusion_km) {
            users.push(p);
        }
    }
    users
}

/// Channel gain in dB at `distance_km`: `-148.1 - 37.6 log10(d)`.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {distance_km}")));
    }
    Ok(-148.1 - 37.6 * distance_km.log10())
}

/// Linear large-scale gain for a distance and a shadowing draw in dB.
/// Distances below 10 m are clamped; a distance of exactly zero is rejected.
pub fn beta_from(distance_km: f64, shadow_db: f64) -> Result<f64> {
    if distance_km == 0.0 {
        return Err(Error::Domain("user colocated with a BS".into()));
    }
    let gain_db = path_loss_db(distance_km.max(MIN_DISTANCE_KM))? + shadow_db;
    Ok(db_to_linear(gain_db))
}

/// Draws the L x K large-scale fading matrix. Shadowing values are drawn in
/// row-major (BS, user) order so a seed fixes the whole matrix.
pub fn large_scale_fading<R: Rng + ?Sized>(scenario: &NetworkScenario, rng: &mut R) -> Result<Matrix> {
    let shadow = Normal::new(0.0, scenario.shadow_std_db)
        .map_err(|e| Error::InvalidScenario(format!("shadowing: {e}")))?;
    let dist = scenario.distances();
    let mut beta = Matrix::zeros(scenario.num_bs(), scenario.num_users());
    for l in 0..scenario.num_bs() {
        for k in 0..scenario.num_users() {
            let z = shadow.sample(rng);
            beta[(l, k)] = beta_from(dist[(l, k)], z)?;
        }
    }
    Ok(beta)
}

/// Per-antenna variance of the MMSE estimate, `p tau_p beta^2 / (p tau_p beta + sigma2_ul)`.
pub fn mmse_variance(pilot_power: f64, pilot_length: usize, beta: f64, noise_ul: f64) -> f64 {
    let energy = pilot_power * pilot_length as f64;
    if energy == 0.0 {
        return 0.0;
    }
    energy * beta * beta / (energy * beta + noise_ul)
}

/// Estimate-variance matrix for a given `beta`.
pub fn estimation_quality(scenario: &NetworkScenario, beta: &Matrix) -> Result<Matrix> {
    let (l, k) = (scenario.num_bs(), scenario.num_users());
    if beta.shape() != (l, k) {
        return Err(Error::Dimension(format!("beta is {:?}, scenario is {l}x{k}", beta.shape())));
    }
    if beta.as_slice().iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Domain("beta must be positive elementwise".into()));
    }
    Ok(Matrix::from_fn(l, k, |i, t| {
        mmse_variance(scenario.pilot_power[t], scenario.pilot_length, beta[(i, t)], scenario.noise_ul)
    }))
}

/// Large-scale fading and estimation quality of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    /// L x K channel variances.
    pub beta: Matrix,
    /// L x K MMSE estimate variances.
    pub gamma: Matrix,
}

impl ChannelStats {
    pub fn from_beta(scenario: &NetworkScenario, beta: Matrix) -> Result<Self> {
        let gamma = estimation_quality(scenario, &beta)?;
        Ok(Self { beta, gamma })
    }

    /// Draws shadowing with `rng` and derives both matrices.
    pub fn draw<R: Rng + ?Sized>(scenario: &NetworkScenario, rng: &mut R) -> Result<Self> {
        scenario.validate()?;
        let beta = large_scale_fading(scenario, rng)?;
        Self::from_beta(scenario, beta)
    }

    pub fn num_bs(&self) -> usize {
        self.beta.rows()
    }

    pub fn num_users(&self) -> usize {
        self.beta.cols()
    }

    /// Estimation error variance `beta - gamma`.
    pub fn error_variance(&self) -> Matrix {
        Matrix::from_fn(self.num_bs(), self.num_users(), |l, k| self.beta[(l, k)] - self.gamma[(l, k)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn path_loss_reference_points() {
        assert_eq!(path_loss_db(1.0).unwrap(), -148.1);
        // -148.1 - 37.6 * (-1) and * (-2)
        assert!((path_loss_db(0.1).unwrap() + 110.5).abs() < 1e-12);
        assert!((path_loss_db(0.01).unwrap() + 72.9).abs() < 1e-12);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-1.0).is_err());
    }

    #[test]
    fn beta_without_shadowing() {
        let s = NetworkScenario {
            shadow_std_db: 0.0,
            ..NetworkScenario::with_defaults(10, vec![Point::new(0.0, 0.0)], vec![Point::new(1.0, 0.0)])
        };
        let beta = large_scale_fading(&s, &mut stream_rng(1, 0)).unwrap();
        assert!(close(beta[(0, 0)], 10f64.powf(-14.81), 1e-12));
    }

    #[test]
    fn beta_with_fixed_shadow_draw() {
        let b = beta_from(0.1, 7.0).unwrap();
        assert!(close(b, 10f64.powf((-110.5 + 7.0) / 10.0), 1e-12));
    }

    #[test]
    fn colocated_user_is_rejected_and_near_user_clamped() {
        assert!(beta_from(0.0, 0.0).is_err());
        assert_eq!(beta_from(0.001, 0.0).unwrap(), beta_from(MIN_DISTANCE_KM, 0.0).unwrap());
    }

    #[test]
    fn same_seed_same_beta() {
        let bs = square_layout(1.0);
        let users = drop_users(&mut stream_rng(3, 0), &bs, 20, MIN_DISTANCE_KM);
        let s = NetworkScenario::with_defaults(100, bs, users);
        let a = large_scale_fading(&s, &mut stream_rng(9, 4)).unwrap();
        let b = large_scale_fading(&s, &mut stream_rng(9, 4)).unwrap();
        assert_eq!(a, b);
        let c = large_scale_fading(&s, &mut stream_rng(9, 5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mmse_variance_examples() {
        // p tau_p = 4, beta = 1, sigma2 = 1: 4 / 5
        assert!((mmse_variance(0.2, 20, 1.0, 1.0) - 0.8).abs() < 1e-15);
        assert_eq!(mmse_variance(0.0, 20, 1.0, 1.0), 0.0);
        let g = mmse_variance(1e6, 20, 1.0, 1.0);
        assert!(close(g, 1.0, 1e-7));
    }

    #[test]
    fn default_pilot_power_is_point_two_watts() {
        let p = PilotEnergy::PerSequence.pilot_power(2e-7, 20e6, 20);
        assert!(close(p, 0.2, 1e-12));
        let p = PilotEnergy::PerSymbol.pilot_power(2e-7, 20e6, 20);
        assert!(close(p, 4.0, 1e-12));
    }

    #[test]
    fn validation_catches_bad_pilots() {
        let mut s = NetworkScenario::with_defaults(10, square_layout(1.0), vec![Point::new(0.5, 0.5); 3]);
        assert!(s.validate().is_ok());
        s.pilot_length = 2;
        assert!(s.validate().is_err());
        s.pilot_length = 200;
        assert!(s.validate().is_err());
        s.pilot_length = 20;
        s.noise_dl = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn dropped_users_respect_exclusion() {
        let bs = square_layout(1.0);
        let users = drop_users(&mut stream_rng(11, 0), &bs, 500, 0.05);
        for u in &users {
            assert!((0.0..=1.0).contains(&u.x) && (0.0..=1.0).contains(&u.y));
            assert!(bs.iter().all(|b| b.distance(u) >= 0.05));
        }
    }

    proptest! {
        #[test]
        fn gamma_plus_error_is_beta(b_db in -160.0f64..-60.0, p in 1e-3f64..10.0, tau in 1usize..64) {
            let b = db_to_linear(b_db);
            let s2 = dbm_to_watts(-96.0);
            let g = mmse_variance(p, tau, b, s2);
            let err = b * s2 / (p * tau as f64 * b + s2);
            prop_assert!(g > 0.0 && g < b);
            prop_assert!(((g + err) - b).abs() <= 4.0 * f64::EPSILON * b);
        }

        #[test]
        fn gamma_is_monotone(b_db in -160.0f64..-60.0, p in 1e-3f64..10.0, tau in 1usize..64, bump in 1.0f64..4.0) {
            let b = db_to_linear(b_db);
            let s2 = dbm_to_watts(-96.0);
            let g = mmse_variance(p, tau, b, s2);
            prop_assert!(mmse_variance(p * bump, tau, b, s2) >= g);
            prop_assert!(mmse_variance(p, tau + 1, b, s2) >= g);
            prop_assert!(mmse_variance(p, tau, b * bump, s2) >= g);
        }
    }
}
