//! Side-by-side comparison of the analytic operating point and simulation.

use serde::Serialize;

use crate::analytic::solve_fixed_point;
use crate::error::Result;
use crate::exec::{map_slice, Execution};
use crate::model::ModelParams;
use crate::report::fmt_f64;
use crate::sim::{run_simulation, SimConfig, SimStats};

pub const VALIDATION_CSV_HEADER: &str = "metric,analytic,simulated,rel_err,pass";
pub const DEFAULT_THRESHOLD: f64 = 0.03;
/// Denominator floor for relative errors of small probabilities.
pub const REL_ERR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub metric: String,
    pub analytic: f64,
    pub simulated: f64,
    pub rel_err: f64,
    /// `None` for observational rows without a threshold.
    pub pass: Option<bool>,
}

impl ValidationRow {
    fn new(metric: String, analytic: f64, simulated: f64, threshold: Option<f64>) -> Self {
        let rel_err = relative_error(simulated, analytic);
        ValidationRow {
            metric,
            analytic,
            simulated,
            rel_err,
            pass: threshold.map(|t| rel_err <= t),
        }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }

    pub fn render_csv(rows: &[ValidationRow]) -> String {
        let mut out = format!("{VALIDATION_CSV_HEADER}\n");
        for r in rows {
            let pass = match r.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "-",
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.metric,
                fmt_f64(r.analytic),
                fmt_f64(r.simulated),
                fmt_f64(r.rel_err),
                pass
            ));
        }
        out
    }
}

/// `|sim − analytic| / max(|analytic|, REL_ERR_FLOOR)`.
pub fn relative_error(simulated: f64, analytic: f64) -> f64 {
    (simulated - analytic).abs() / analytic.abs().max(REL_ERR_FLOOR)
}

/// Compact label of a scenario, used to qualify metric names.
pub fn point_label(params: &ModelParams) -> String {
    format!(
        "n={};pd={};W={};m={};C={};a={}",
        params.stations,
        params.pd(),
        params.min_window,
        params.max_stage,
        params.channels,
        params.activity
    )
}

/// Probability that a transmission lands on a truly busy channel, given the
/// channel was perceived idle: `a(1−P_d)/(1−q)`.
pub fn expected_primary_hit_rate(params: &ModelParams) -> Result<f64> {
    let q = params.busy_probability()?;
    if q >= 1.0 {
        return Ok(0.0);
    }
    Ok(params.activity * (1.0 - params.pd()) / (1.0 - q))
}

/// Rows for one scenario. `tau` and `pc_any` are thresholded only with a
/// single channel; every other row is observational.
pub fn compare(config: &SimConfig, stats: &SimStats, threshold: f64) -> Result<Vec<ValidationRow>> {
    let params = &config.params;
    let op = solve_fixed_point(params)?;
    let label = point_label(params);
    let single = params.channels == 1;
    Ok(vec![
        ValidationRow::new(
            format!("tau[{label}]"),
            op.tau,
            stats.tau_hat,
            single.then_some(threshold),
        ),
        ValidationRow::new(
            format!("pc_any[{label}]"),
            op.p,
            stats.pc_hat_any,
            single.then_some(threshold),
        ),
        ValidationRow::new(format!("pc_same_channel[{label}]"), op.p, stats.pc_hat_same_channel, None),
        ValidationRow::new(
            format!("pu_collision_rate[{label}]"),
            expected_primary_hit_rate(params)?,
            stats.pu_collision_rate,
            None,
        ),
    ])
}

/// Simulates and compares every configuration, rows grouped per config in input order.
pub fn validate(configs: &[SimConfig], threshold: f64, exec: Execution) -> Result<Vec<ValidationRow>> {
    let per_point = map_slice(exec, configs, |cfg| {
        let stats = run_simulation(cfg)?;
        compare(cfg, &stats, threshold)
    });
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}
