use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{InvariantTally, SweepResult, SweepSpec, SweepSummary};
use crate::{Error, Result};

/// Aggregated metrics, one entry per antenna count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub summaries: Vec<SweepSummary>,
}

impl From<&SweepResult> for ResultsTable {
    fn from(r: &SweepResult) -> Self {
        Self {
            summaries: r.summaries.clone(),
        }
    }
}

/// Everything needed to reproduce a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub config: SweepSpec,
    pub invariants: InvariantTally,
    pub summaries: Vec<SweepSummary>,
}

/// Long-format CSV: `antennas,metric,value`, absent metrics omitted.
pub fn results_csv(table: &ResultsTable) -> String {
    let mut out = String::from("antennas,metric,value\n");
    for s in &table.summaries {
        for (name, value) in s.metrics() {
            if let Some(v) = value {
                let _ = writeln!(out, "{},{name},{v}", s.antennas);
            }
        }
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `results.csv`, the `results.json` sidecar and, when traces were
/// recorded, `trace.jsonl` into `dir`. Returns the written paths.
pub fn emit_results(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.summaries.is_empty() {
        return Err(Error::InvalidScenario("nothing to emit: empty results table".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![write(dir.join("results.csv"), &results_csv(&ResultsTable::from(result)))?];

    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: result.spec.clone(),
        invariants: result.invariants,
        summaries: result.summaries.clone(),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|source| Error::Json {
        path: dir.join("results.json"),
        source,
    })?;
    written.push(write(dir.join("results.json"), &(json + "\n"))?);

    if !result.traces.is_empty() {
        written.push(write(dir.join("trace.jsonl"), &result.traces_jsonl())?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::{run_sweep, SweepMode};
    use super::*;

    #[test]
    fn csv_omits_absent_metrics_and_has_one_header() {
        let table = ResultsTable {
            summaries: vec![SweepSummary {
                antennas: 50,
                drops: 3,
                mean_maxmin_xi_opt: Some(1.5),
                ..Default::default()
            }],
        };
        let csv = results_csv(&table);
        assert_eq!(csv, "antennas,metric,value\n50,drops,3\n50,mean_maxmin_xi_opt,1.5\n");
        assert_eq!(csv.matches("antennas,metric").count(), 1);
    }

    #[test]
    fn emit_is_byte_identical_on_repeat() {
        let spec = SweepSpec::new(vec![32, 64], SweepMode::power_min(), 2, 5);
        let r = run_sweep(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&r, dir.path()).unwrap();
        let first = std::fs::read(&paths[0]).unwrap();
        emit_results(&r, dir.path()).unwrap();
        assert_eq!(first, std::fs::read(&paths[0]).unwrap());

        let sidecar: Sidecar = serde_json::from_slice(&std::fs::read(&paths[1]).unwrap()).unwrap();
        assert_eq!(sidecar.config, spec);
    }

    #[test]
    fn unwritable_path_reports_it() {
        let spec = SweepSpec::new(vec![16], SweepMode::power_min(), 1, 5);
        let r = run_sweep(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_results(&r, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
