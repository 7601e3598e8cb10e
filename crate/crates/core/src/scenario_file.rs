//! Scenario files: JSON with explicit, unit-tagged powers.
//!
//! ```json
//! {
//!   "num_antennas": 100,
//!   "bs_positions": [{"x": 0, "y": 0}, {"x": 1, "y": 0}],
//!   "num_users": 20,
//!   "pmax": {"value": 46.02, "unit": "dBm"},
//!   "noise_dl": {"value": -96, "unit": "dBm"},
//!   "pilot": {"energy_j": 2e-7, "interpretation": "per_sequence"}
//! }
//! ```
//!
//! Every field is optional; missing fields take the defaults of
//! [`NetworkScenario::with_defaults`]. Positions are in km. Powers are either
//! one tagged quantity or a list with one entry per BS (or user, for pilots).
//! When `user_positions` is absent, users are dropped uniformly for each drop.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    drop_users, square_layout, NetworkScenario, PilotEnergy, Point, DEFAULT_BANDWIDTH_HZ, DEFAULT_COHERENCE_LENGTH,
    DEFAULT_NOISE_DBM, DEFAULT_NUM_USERS, DEFAULT_PILOT_ENERGY_J, DEFAULT_PMAX_W, DEFAULT_SHADOW_STD_DB,
    MIN_DISTANCE_KM,
};
use crate::numeric::dbm_to_watts;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerUnit {
    #[serde(rename = "dBm")]
    Dbm,
    #[serde(rename = "W")]
    Watt,
}

/// A power with an explicit unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Power {
    pub value: f64,
    pub unit: PowerUnit,
}

impl Power {
    pub const fn watts(value: f64) -> Self {
        Self {
            value,
            unit: PowerUnit::Watt,
        }
    }

    pub const fn dbm(value: f64) -> Self {
        Self {
            value,
            unit: PowerUnit::Dbm,
        }
    }

    pub fn to_watts(self) -> f64 {
        match self.unit {
            PowerUnit::Watt => self.value,
            PowerUnit::Dbm => dbm_to_watts(self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Each(Vec<Power>),
    All(Power),
}

impl PowerSpec {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PowerSpec::All(p) => Ok(vec![p.to_watts(); n]),
            PowerSpec::Each(v) if v.len() == n => Ok(v.iter().map(|p| p.to_watts()).collect()),
            PowerSpec::Each(v) => Err(Error::InvalidScenario(format!("{what}: {} values for {n} entries", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PilotSpec {
    /// Energy of the pilot signal in J, spread according to `interpretation`.
    Energy {
        energy_j: f64,
        #[serde(default)]
        interpretation: PilotEnergy,
    },
    /// Per-symbol pilot power.
    Power { power: PowerSpec },
}

impl Default for PilotSpec {
    fn default() -> Self {
        PilotSpec::Energy {
            energy_j: DEFAULT_PILOT_ENERGY_J,
            interpretation: PilotEnergy::PerSequence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_antennas: usize,
    /// BS coordinates; a square of side `side_km` when absent.
    pub bs_positions: Option<Vec<Point>>,
    pub side_km: f64,
    /// Fixed user coordinates; users are dropped per drop when absent.
    pub user_positions: Option<Vec<Point>>,
    pub num_users: usize,
    pub exclusion_km: f64,
    pub coherence_length: usize,
    /// At least `K`; defaults to `max(20, K)`.
    pub pilot_length: Option<usize>,
    pub bandwidth_hz: f64,
    pub pilot: PilotSpec,
    pub noise_ul: Power,
    pub noise_dl: Power,
    pub pmax: PowerSpec,
    pub shadow_std_db: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            num_antennas: 100,
            bs_positions: None,
            side_km: 1.0,
            user_positions: None,
            num_users: DEFAULT_NUM_USERS,
            exclusion_km: MIN_DISTANCE_KM,
            coherence_length: DEFAULT_COHERENCE_LENGTH,
            pilot_length: None,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            pilot: PilotSpec::default(),
            noise_ul: Power::dbm(DEFAULT_NOISE_DBM),
            noise_dl: Power::dbm(DEFAULT_NOISE_DBM),
            pmax: PowerSpec::All(Power::watts(DEFAULT_PMAX_W)),
            shadow_std_db: DEFAULT_SHADOW_STD_DB,
            rng_seed: 0,
        }
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn bs_positions(&self) -> Vec<Point> {
        self.bs_positions.clone().unwrap_or_else(|| square_layout(self.side_km))
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.as_ref().map_or(self.num_users, Vec::len)
    }

    /// Builds a validated scenario with `num_antennas` antennas and the given
    /// user positions.
    pub fn instantiate(&self, num_antennas: usize, users: Vec<Point>) -> Result<NetworkScenario> {
        let bs = self.bs_positions();
        let (l, k) = (bs.len(), users.len());
        let pilot_length = self.pilot_length.unwrap_or(crate::channel::DEFAULT_PILOT_LENGTH.max(k));
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidScenario(format!("bandwidth must be positive, got {}", self.bandwidth_hz)));
        }
        let pilot_power = match &self.pilot {
            PilotSpec::Energy {
                energy_j,
                interpretation,
            } => vec![interpretation.pilot_power(*energy_j, self.bandwidth_hz, pilot_length); k],
            PilotSpec::Power { power } => power.expand(k, "pilot power")?,
        };
        let scenario = NetworkScenario {
            num_antennas,
            bs_positions: bs,
            user_positions: users,
            coherence_length: self.coherence_length,
            pilot_length,
            pilot_power,
            noise_ul: self.noise_ul.to_watts(),
            noise_dl: self.noise_dl.to_watts(),
            pmax: self.pmax.expand(l, "pmax")?,
            shadow_std_db: self.shadow_std_db,
            rng_seed: self.rng_seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Fixed user positions if given, otherwise a fresh uniform drop.
    pub fn draw_users<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Point> {
        match &self.user_positions {
            Some(u) => u.clone(),
            None => drop_users(rng, &self.bs_positions(), self.num_users, self.exclusion_km),
        }
    }

    /// Users for one drop, then the scenario built from them.
    pub fn draw<R: Rng + ?Sized>(&self, num_antennas: usize, rng: &mut R) -> Result<NetworkScenario> {
        let users = self.draw_users(rng);
        self.instantiate(num_antennas, users)
    }
}
