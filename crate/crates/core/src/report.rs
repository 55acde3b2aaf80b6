//! Risk curves over a budget or τ grid, written as CSV with a JSON mirror.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// One grid point. `converged = false` marks the risk as a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub param: f64,
    pub risk: f64,
    pub objective: f64,
    pub n_configs: usize,
    /// Pool sizes per configuration length, e.g. `1:1000;2:431`.
    pub n_configs_by_length: String,
    pub elapsed_s: f64,
    pub converged: bool,
}

impl RiskPoint {
    pub fn format_lengths(counts: &BTreeMap<usize, usize>) -> String {
        counts.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub points: Vec<RiskPoint>,
}

impl RiskCurve {
    /// Sorted by parameter.
    pub fn new(mut points: Vec<RiskPoint>) -> Self {
        points.sort_by(|a, b| a.param.total_cmp(&b.param));
        Self { points }
    }

    /// First adjacent pair whose risk drops by more than `tol`.
    pub fn first_decrease(&self, tol: f64) -> Option<(f64, f64)> {
        self.points.windows(2).find(|w| w[1].risk < w[0].risk - tol).map(|w| (w[0].param, w[1].param))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["param", "risk", "objective", "n_configs", "n_configs_by_length", "elapsed_s", "converged"])?;
        for p in &self.points {
            w.write_record([
                p.param.to_string(),
                p.risk.to_string(),
                p.objective.to_string(),
                p.n_configs.to_string(),
                p.n_configs_by_length.clone(),
                p.elapsed_s.to_string(),
                p.converged.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.points).expect("curve serializes")
    }
}

/// Writes `{prefix}.csv` and `{prefix}.json`. Fails on an empty curve.
pub fn emit_risk_curve(curve: &RiskCurve, prefix: impl AsRef<Path>) -> std::io::Result<()> {
    if curve.points.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty risk curve"));
    }
    let prefix = prefix.as_ref().as_os_str().to_owned();
    let mut csv_path = prefix.clone();
    csv_path.push(".csv");
    let mut json_path = prefix;
    json_path.push(".json");
    curve.write_csv(std::fs::File::create(&csv_path)?)?;
    std::fs::write(&json_path, curve.to_json())
}
