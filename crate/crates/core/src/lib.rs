//! Joint downlink power minimization and base-station/user association for
//! multi-cell Massive MIMO with non-coherent joint transmission and MRT
//! precoding.
//!
//! The crate is layered bottom-up:
//!
//! * [`channel`] draws drop geometry and computes large-scale fading and
//!   MMSE estimation statistics.
//! * [`se`] evaluates the closed-form MRT SINR and spectral efficiency.
//! * [`oracle`] estimates the same SINR by sampling channel realizations,
//!   as an independent check of the closed form.
//! * [`lp`] is a small dense two-phase revised simplex solver with duals.
//! * [`assoc`] turns channel statistics and QoS targets into the total
//!   power LP and reads the association out of its primal and dual.
//! * [`maxmin`] bisects over a common QoS level for weighted max-min
//!   fairness.
//! * [`harness`] runs seeded multi-drop sweeps and writes CSV/JSON results.

pub mod assoc;
pub mod channel;
mod error;
pub mod harness;
pub mod lp;
pub mod maxmin;
pub mod numeric;
pub mod oracle;
pub mod scenario_file;
pub mod se;

pub use assoc::{
    association_rule_check, build_lp, solve_max_snr, solve_power_min, AssociationMap, AssociationPolicy,
    PowerMinOutcome, PowerMinProblem, PowerMinSolution,
};
pub use channel::{ChannelStats, NetworkScenario, Point};
pub use error::{Error, Result};
pub use lp::{LinearProgram, LpSolution, LpStatus};
pub use maxmin::{solve_max_min, BisectionConfig, MaxMinResult};
pub use se::{PowerAllocation, QosTargets};
