use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mimo_assoc::assoc::{max_snr_bs, PowerMinRecord};
use mimo_assoc::harness::{self, SweepMode, SweepResult, SweepSpec, ValidationSpec, DEFAULT_TARGET_SE};
use mimo_assoc::maxmin::{solve_max_min_with, DEFAULT_DELTA};
use mimo_assoc::scenario_file::ScenarioFile;
use mimo_assoc::se::se_all;
use mimo_assoc::{
    build_lp, AssociationPolicy, BisectionConfig, ChannelStats, NetworkScenario, QosTargets,
};

/// Downlink power minimization and BS-user association for multi-cell
/// Massive MIMO.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep fixed per-user SE targets; report total power and bad-service probability.
    Powermin {
        #[command(flatten)]
        common: Common,
        /// Per-user SE target, bit/symbol.
        #[arg(long, default_value_t = DEFAULT_TARGET_SE)]
        target_se: f64,
    },
    /// Sweep weighted max-min SE with optimal and max-SNR association.
    Maxmin {
        #[command(flatten)]
        common: Common,
        /// Bisection accuracy, bit/symbol.
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Also write the bisection steps as JSON lines.
        #[arg(long)]
        trace: bool,
    },
    /// Compare the Monte-Carlo SINR estimate with the closed form on random drops.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Channel draws per drop.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Solve drop 0 of the seed and print the full result as JSON.
    Drop {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_TARGET_SE)]
        target_se: f64,
        /// Write the power minimization LP in plain text to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; defaults are used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random drops.
    #[arg(long)]
    drops: Option<usize>,
    /// Comma-separated antenna counts.
    #[arg(long, value_delimiter = ',')]
    antennas: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn scenario(&self) -> anyhow::Result<ScenarioFile> {
        match &self.scenario {
            Some(p) => Ok(ScenarioFile::load(p)?),
            None => Ok(ScenarioFile::default()),
        }
    }

    fn antennas(&self, default: &[usize]) -> Vec<usize> {
        self.antennas.clone().unwrap_or_else(|| default.to_vec())
    }
}

/// Process exit status: 0 success, 1 error, 2 nothing was feasible.
enum Outcome {
    Ok,
    Infeasible,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Powermin { common, target_se } => sweep(&common, SweepMode::PowerMin { target_se }, false),
        Command::Maxmin { common, delta, trace } => sweep(&common, SweepMode::MaxMin { delta }, trace),
        Command::Validate {
            common,
            samples,
            tolerance,
        } => validate(&common, samples, tolerance),
        Command::Drop {
            common,
            target_se,
            dump_lp,
        } => single_drop(&common, target_se, dump_lp.as_deref()),
    }
}

fn sweep(common: &Common, mode: SweepMode, trace: bool) -> anyhow::Result<Outcome> {
    let mut spec = SweepSpec::new(
        common.antennas(&[50, 100, 150, 200]),
        mode,
        common.drops.unwrap_or(100),
        common.seed,
    );
    spec.scenario = common.scenario()?;
    spec.scenario_path = common.scenario.as_ref().map(|p| p.display().to_string());
    spec.record_traces = trace;
    let result = harness::run_sweep(&spec)?;
    print_summary(&result);

    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    for p in harness::emit_results(&result, &out)? {
        eprintln!("wrote {}", p.display());
    }
    if !result.invariants.all_passed() {
        bail!("invariant re-checks failed: {:?}", result.invariants);
    }
    Ok(if result.all_infeasible() {
        Outcome::Infeasible
    } else {
        Outcome::Ok
    })
}

fn print_summary(result: &SweepResult) {
    for s in &result.summaries {
        let metrics: Vec<String> = s
            .metrics()
            .into_iter()
            .filter_map(|(name, v)| v.map(|v| format!("{name}={v:.4}")))
            .collect();
        println!("M={:<4} {}", s.antennas, metrics.join(" "));
    }
}

fn validate(common: &Common, samples: usize, tolerance: f64) -> anyhow::Result<Outcome> {
    let defaults = ValidationSpec::default();
    let spec = ValidationSpec {
        scenario: common.scenario()?,
        antenna_counts: common.antennas(&defaults.antenna_counts),
        num_drops: common.drops.unwrap_or(defaults.num_drops),
        num_samples: samples,
        rng_seed: common.seed,
        ..defaults
    };
    let report = harness::validate_closed_form(&spec)?;
    let worst = report.worst_rel_error();
    println!(
        "{} users over {} drops, {samples} samples each: worst relative error {:.3}%, worst z-score {:.2}",
        report.rows.len(),
        spec.num_drops,
        100.0 * worst,
        report.worst_z_score()
    );
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
        let path = out.join("validate.jsonl");
        std::fs::write(&path, report.to_jsonl()).with_context(|| path.display().to_string())?;
        eprintln!("wrote {}", path.display());
    }
    if worst > tolerance {
        bail!("closed form and Monte-Carlo estimate differ by {:.3}% > {:.3}%", 100.0 * worst, 100.0 * tolerance);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct DropReport<'a> {
    seed: u64,
    target_se: f64,
    scenario: &'a NetworkScenario,
    stats: &'a ChannelStats,
    max_snr_bs: Vec<usize>,
    optimal: PowerMinRecord,
    max_snr: PowerMinRecord,
    se_optimal: Option<Vec<f64>>,
    maxmin_xi_optimal: f64,
    maxmin_xi_max_snr: f64,
}

fn single_drop(common: &Common, target_se: f64, dump_lp: Option<&Path>) -> anyhow::Result<Outcome> {
    let mut spec = SweepSpec::new(common.antennas(&[100]), SweepMode::power_min(), 1, common.seed);
    spec.scenario = common.scenario()?;
    let (scenario, stats) = harness::draw_drop(&spec, 0)?;
    let targets = QosTargets::uniform(&scenario, target_se)?;

    if let Some(path) = dump_lp {
        let lp = build_lp(&stats, &targets, &scenario)?;
        std::fs::write(path, lp.to_text()).with_context(|| path.display().to_string())?;
        eprintln!("wrote {}", path.display());
    }

    let opt = AssociationPolicy::Optimal.solve(&stats, &targets, &scenario)?;
    let snr = AssociationPolicy::MaxSnr.solve(&stats, &targets, &scenario)?;
    let weights = vec![1.0; scenario.num_users()];
    let cfg = BisectionConfig::default();
    let mm_opt = solve_max_min_with(AssociationPolicy::Optimal, &stats, &scenario, &weights, &cfg)?;
    let mm_snr = solve_max_min_with(AssociationPolicy::MaxSnr, &stats, &scenario, &weights, &cfg)?;
    let report = DropReport {
        seed: common.seed,
        target_se,
        scenario: &scenario,
        stats: &stats,
        max_snr_bs: max_snr_bs(&stats),
        se_optimal: opt.solution().map(|s| se_all(&stats, &s.alloc, &scenario)).transpose()?,
        optimal: opt.to_record(),
        max_snr: snr.to_record(),
        maxmin_xi_optimal: mm_opt.lower,
        maxmin_xi_max_snr: mm_snr.lower,
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &common.out {
        Some(out) => {
            std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
            let path = out.join("drop.json");
            std::fs::write(&path, json + "\n").with_context(|| path.display().to_string())?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let _ = writeln!(std::io::stdout(), "{json}");
        }
    }
    Ok(if opt.is_feasible() {
        Outcome::Ok
    } else {
        Outcome::Infeasible
    })
}
