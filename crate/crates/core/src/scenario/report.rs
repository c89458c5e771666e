//! Report records and their CSV / JSON encodings.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::a2r::RadonNikodym;
use crate::bounds::BoundConstants;
use crate::error::{Error, Result};
use crate::model::{BoundReport, Verdict};
use crate::schrodinger::ReductionCheck;

pub const SCHEMA_VERSION: u32 = 1;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 19] = [
    "scenario_id",
    "e",
    "lambda",
    "N_full",
    "N_dir",
    "N_a2r_nonpos",
    "identity_holds",
    "gamma",
    "N_a2r_gamma",
    "a_lambda_norm",
    "bound_thm54",
    "bound_thm59",
    "t",
    "heat_trace_t",
    "trace_bound",
    "verdict_inequality",
    "verdict_thm54",
    "verdict_trace",
    "verdict_thm59",
];

/// One sweep point. Empty cells mean "not computed for this scenario".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario_id: String,
    pub e: Option<f64>,
    pub lambda: f64,
    #[serde(rename = "N_full")]
    pub n_full: usize,
    #[serde(rename = "N_dir")]
    pub n_dir: Option<usize>,
    #[serde(rename = "N_a2r_nonpos")]
    pub n_a2r_nonpos: Option<usize>,
    pub identity_holds: Option<bool>,
    pub gamma: Option<f64>,
    #[serde(rename = "N_a2r_gamma")]
    pub n_a2r_gamma: Option<usize>,
    pub a_lambda_norm: Option<f64>,
    /// Dirichlet count bound at `λ`.
    pub bound_thm54: Option<f64>,
    /// Boundary count bound at `γ`.
    pub bound_thm59: Option<f64>,
    /// Heat-trace time `t = d/λ`, the optimizing time of the count bound.
    pub t: Option<f64>,
    pub heat_trace_t: Option<f64>,
    pub trace_bound: Option<f64>,
    pub verdict_inequality: Verdict,
    pub verdict_thm54: Verdict,
    pub verdict_trace: Verdict,
    pub verdict_thm59: Verdict,
}

impl SweepRow {
    /// A row with only the full count filled in.
    pub fn count_only(scenario_id: &str, e: Option<f64>, lambda: f64, n_full: usize) -> Self {
        SweepRow {
            scenario_id: scenario_id.to_string(),
            e,
            lambda,
            n_full,
            n_dir: None,
            n_a2r_nonpos: None,
            identity_holds: None,
            gamma: None,
            n_a2r_gamma: None,
            a_lambda_norm: None,
            bound_thm54: None,
            bound_thm59: None,
            t: None,
            heat_trace_t: None,
            trace_bound: None,
            verdict_inequality: Verdict::NotApplicable,
            verdict_thm54: Verdict::NotApplicable,
            verdict_trace: Verdict::NotApplicable,
            verdict_thm59: Verdict::NotApplicable,
        }
    }

    pub fn must_hold_ok(&self) -> bool {
        self.identity_holds != Some(false) && self.verdict_inequality != Verdict::Violated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    Configured,
    /// Sampled lower estimate; not a rigorous value.
    Estimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstant {
    pub value: f64,
    pub source: ConstantSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub e: f64,
    pub interior_nodes: usize,
    pub boundary_nodes: usize,
    pub components: usize,
    pub diameter: f64,
    pub norm_w1: f64,
    pub norm_wp: f64,
    pub first_dirichlet_eigenvalue: Option<f64>,
    pub constants: Option<BoundConstants>,
    pub b: Option<EmpiricalConstant>,
    pub c_p: Option<EmpiricalConstant>,
    pub radon_nikodym: Option<RadonNikodym>,
    pub reduction: Option<ReductionCheck>,
    pub bounds: Vec<BoundReport>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario_id: String,
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    /// Descriptions of failed identities that must always hold.
    pub must_hold_failures: Vec<String>,
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn to_json(report: &ScenarioReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `<id>.csv` and `<id>.json` into `dir`, returning both paths.
pub fn write_outputs(dir: &Path, rows: &[SweepRow], report: &ScenarioReport) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", report.scenario_id));
    let json_path = dir.join(format!("{}.json", report.scenario_id));
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    std::fs::write(&csv_path, buf)?;
    std::fs::write(&json_path, to_json(report)? + "\n")?;
    Ok((csv_path, json_path))
}
