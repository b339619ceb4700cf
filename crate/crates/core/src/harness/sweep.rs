use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_scheme, RunOptions};
use super::scenario::{generate_scenario, trial_seed, ScenarioParams};
use super::scheme::SchemeSpec;
use crate::solver::SolverConfig;
use crate::{Error, Result};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "sweep_param",
    "sweep_value",
    "trial",
    "scheme",
    "sum_rate_bpshz",
    "min_user_rate",
    "max_constraint_violation",
    "feasible",
    "outer_iters",
    "inner_iters_total",
    "final_rho",
    "wall_ms",
    "seed",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    /// Transmit power in dBm.
    #[serde(rename = "P_t")]
    Power,
    #[serde(rename = "N")]
    IrsElements,
    #[serde(rename = "L")]
    Paths,
    /// IRS region edge in wavelengths.
    #[serde(rename = "A_I")]
    IrsRegion,
    #[serde(rename = "Gamma")]
    MinRate,
    #[serde(rename = "mu")]
    AngleError,
    #[serde(rename = "nu")]
    ResponseError,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Power,
        SweepParam::IrsElements,
        SweepParam::Paths,
        SweepParam::IrsRegion,
        SweepParam::MinRate,
        SweepParam::AngleError,
        SweepParam::ResponseError,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Power => "P_t",
            SweepParam::IrsElements => "N",
            SweepParam::Paths => "L",
            SweepParam::IrsRegion => "A_I",
            SweepParam::MinRate => "Gamma",
            SweepParam::AngleError => "mu",
            SweepParam::ResponseError => "nu",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioParams, value: f64) -> Result<ScenarioParams> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidInput(format!("{} must be a positive integer, got {v}", self.label())))
            }
        };
        let mut p = base.clone();
        match self {
            SweepParam::Power => p.power_dbm = value,
            SweepParam::IrsElements => p.irs_elements = count(value)?,
            SweepParam::Paths => p.paths = count(value)?,
            SweepParam::IrsRegion => p.irs_region_wl = value,
            SweepParam::MinRate => p.min_rate = value,
            SweepParam::AngleError => p.angle_error = value,
            SweepParam::ResponseError => p.response_error = value,
        }
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown sweep parameter {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<String>,
    pub seed: u64,
    pub record_wall_time: bool,
    pub scenario: ScenarioParams,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            param: SweepParam::Power,
            values: vec![20.0, 24.0, 28.0, 32.0],
            trials: 20,
            schemes: ["proposed-OPS", "proposed-FPS", "FPA-MA-FPS", "MA-FPA", "FPA", "RPS"]
                .map(String::from)
                .to_vec(),
            seed: 1,
            record_wall_time: false,
            scenario: ScenarioParams::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("sweep grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidInput("no schemes requested".into()));
        }
        self.parsed_schemes()?;
        for &v in &self.values {
            self.param.apply(&self.scenario, v)?;
        }
        self.solver.validate()
    }

    pub fn parsed_schemes(&self) -> Result<Vec<SchemeSpec>> {
        self.schemes.iter().map(|s| SchemeSpec::parse(s)).collect()
    }
}

/// One `(value, trial, scheme)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub scheme: String,
    pub sum_rate_bpshz: f64,
    pub min_user_rate: f64,
    pub max_constraint_violation: f64,
    pub feasible: bool,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub final_rho: f64,
    pub wall_ms: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub scheme: String,
    /// Trials with a finite sum-rate.
    pub count: usize,
    pub mean_sum_rate: f64,
    pub stderr_sum_rate: f64,
    pub feasible_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

fn row_order(a: &SweepRow, b: &SweepRow, order: &[String]) -> std::cmp::Ordering {
    let rank = |s: &str| order.iter().position(|o| o == s).unwrap_or(usize::MAX);
    a.sweep_value
        .total_cmp(&b.sweep_value)
        .then(a.trial.cmp(&b.trial))
        .then(rank(&a.scheme).cmp(&rank(&b.scheme)))
}

/// Every scheme on every `(value, trial)` scenario. Trials share their seed
/// across grid values, so neighbouring values are paired.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let schemes = cfg.parsed_schemes()?;
    let labels: Vec<String> = schemes.iter().map(|s| s.to_string()).collect();
    let cells: Vec<(f64, usize)> = cfg
        .values
        .iter()
        .flat_map(|&v| (0..cfg.trials).map(move |t| (v, t)))
        .collect();

    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .flat_map_iter(|&(value, trial)| {
            let seed = trial_seed(cfg.seed, trial as u64);
            let params = cfg.param.apply(&cfg.scenario, value).expect("validated");
            let scenario = generate_scenario(seed, &params);
            let opts = RunOptions {
                seed,
                angle_error: params.angle_error,
                response_error: params.response_error,
                record_wall_time: cfg.record_wall_time,
            };
            let out: Vec<SweepRow> = schemes
                .iter()
                .map(|scheme| {
                    let result = scenario
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|s| run_scheme(s, scheme, &cfg.solver, &opts));
                    let mut row = SweepRow {
                        sweep_param: cfg.param.label().to_string(),
                        sweep_value: value,
                        trial,
                        scheme: scheme.to_string(),
                        sum_rate_bpshz: f64::NAN,
                        min_user_rate: f64::NAN,
                        max_constraint_violation: f64::NAN,
                        feasible: false,
                        outer_iters: 0,
                        inner_iters_total: 0,
                        final_rho: f64::NAN,
                        wall_ms: 0.0,
                        seed,
                        error: None,
                    };
                    match result {
                        Ok(r) => {
                            row.sum_rate_bpshz = r.sum_rate;
                            row.min_user_rate = r.min_user_rate;
                            row.max_constraint_violation = r.max_violation;
                            row.feasible = r.feasible;
                            row.outer_iters = r.outer_iters;
                            row.inner_iters_total = r.inner_iters_total;
                            row.final_rho = r.final_rho;
                            row.wall_ms = r.wall_ms;
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row
                })
                .collect();
            out
        })
        .collect();
    rows.sort_by(|a, b| row_order(a, b, &labels));

    let mut summary = Vec::new();
    for &value in &cfg.values {
        for label in &labels {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.sweep_value == value && &r.scheme == label)
                .collect();
            summary.push(summarize(value, label, &cell));
        }
    }
    Ok(SweepTable { rows, summary })
}

fn summarize(value: f64, scheme: &str, rows: &[&SweepRow]) -> SummaryRow {
    let rates: Vec<f64> = rows.iter().map(|r| r.sum_rate_bpshz).filter(|v| v.is_finite()).collect();
    let n = rates.len();
    let mean = if n > 0 { rates.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let stderr = if n > 1 {
        let var = rates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    let feasible = rows.iter().filter(|r| r.feasible).count();
    SummaryRow {
        sweep_value: value,
        scheme: scheme.to_string(),
        count: n,
        mean_sum_rate: mean,
        stderr_sum_rate: stderr,
        feasible_fraction: if rows.is_empty() { f64::NAN } else { feasible as f64 / rows.len() as f64 },
    }
}

impl SweepTable {
    /// Mean sum-rate of `scheme` at `value`.
    pub fn mean(&self, value: f64, scheme: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.sweep_value == value && s.scheme == scheme)
            .map(|s| s.mean_sum_rate)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.sweep_param.clone(),
                r.sweep_value.to_string(),
                r.trial.to_string(),
                r.scheme.clone(),
                r.sum_rate_bpshz.to_string(),
                r.min_user_rate.to_string(),
                r.max_constraint_violation.to_string(),
                r.feasible.to_string(),
                r.outer_iters.to_string(),
                r.inner_iters_total.to_string(),
                r.final_rho.to_string(),
                r.wall_ms.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}
