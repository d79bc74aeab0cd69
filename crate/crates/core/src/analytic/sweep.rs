//! One-parameter sweeps of the operating point and the figure presets.

use serde::Serialize;

use super::{solve_fixed_point, OperatingPoint};
use crate::error::{invalid, Result};
use crate::exec::{map_slice, Execution};
use crate::model::ModelParams;
use crate::report::fmt_f64;

pub const SWEEP_CSV_HEADER: &str = "axis,value,tau,p_c,q,iterations";

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Stations,
    DetectionProb,
    Activity,
    Channels,
    MinWindow,
    MaxStage,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Stations,
        Axis::DetectionProb,
        Axis::Activity,
        Axis::Channels,
        Axis::MinWindow,
        Axis::MaxStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Stations => "n",
            Axis::DetectionProb => "pd",
            Axis::Activity => "a",
            Axis::Channels => "C",
            Axis::MinWindow => "W",
            Axis::MaxStage => "m",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Axis::Stations | Axis::Channels | Axis::MinWindow | Axis::MaxStage)
    }

    /// `params` with this axis set to `value`, validated.
    pub fn apply(self, params: &ModelParams, value: f64) -> Result<ModelParams> {
        let key = self.name();
        let as_count = || -> Result<u32> {
            if value.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&value) {
                return Err(invalid(key, format!("must be a non-negative integer, got {value}")));
            }
            Ok(value as u32)
        };
        let mut out = *params;
        match self {
            Axis::Stations => out.stations = as_count()?,
            Axis::Channels => out.channels = as_count()?,
            Axis::MinWindow => out.min_window = as_count()?,
            Axis::MaxStage => out.max_stage = as_count()?,
            Axis::DetectionProb => out.detection = out.detection.with_pd(value),
            Axis::Activity => out.activity = value,
        }
        out.validate()?;
        Ok(out)
    }

    fn format_value(self, value: f64) -> String {
        if self.is_integer() && value.fract() == 0.0 {
            format!("{value}")
        } else {
            fmt_f64(value)
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis `{s}`; expected one of n, pd, a, C, W, m"))
    }
}

/// One sweep point. Failed points keep their error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub result: std::result::Result<OperatingPoint, String>,
}

#[derive(Serialize)]
struct RowJson<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<&'a str>,
    axis: &'static str,
    value: f64,
    tau: Option<f64>,
    p_c: Option<f64>,
    q: Option<f64>,
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.result.is_ok()
    }

    /// CSV fields after any curve label; numeric fields empty on failure.
    pub fn csv_fields(&self) -> String {
        let value = self.axis.format_value(self.value);
        match &self.result {
            Ok(op) => format!(
                "{},{},{},{},{},{}",
                self.axis.name(),
                value,
                fmt_f64(op.tau),
                fmt_f64(op.p),
                fmt_f64(op.q),
                op.iterations
            ),
            Err(_) => format!("{},{},,,,", self.axis.name(), value),
        }
    }

    fn json(&self, curve: Option<&'_ str>) -> serde_json::Value {
        let ok = self.result.as_ref().ok();
        serde_json::to_value(RowJson {
            curve,
            axis: self.axis.name(),
            value: self.value,
            tau: ok.map(|o| o.tau),
            p_c: ok.map(|o| o.p),
            q: ok.map(|o| o.q),
            iterations: ok.map(|o| o.iterations),
            error: self.result.as_ref().err().map(String::as_str),
        })
        .expect("row serializes")
    }

    pub fn render_csv(rows: &[SweepRow]) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for row in rows {
            out.push_str(&row.csv_fields());
            out.push('\n');
        }
        out
    }

    pub fn render_json(rows: &[SweepRow]) -> String {
        let values: Vec<_> = rows.iter().map(|r| r.json(None)).collect();
        serde_json::to_string_pretty(&values).expect("rows serialize") + "\n"
    }
}

/// Solves one operating point per value of `axis`, rows in input order.
pub fn sweep(params: &ModelParams, axis: Axis, values: &[f64], exec: Execution) -> Vec<SweepRow> {
    map_slice(exec, values, |&value| SweepRow {
        axis,
        value,
        result: axis
            .apply(params, value)
            .and_then(|p| solve_fixed_point(&p))
            .map_err(|e| e.to_string()),
    })
}

/// Named parameter set of one plotted curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub params: ModelParams,
}

/// A curve's sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub curve: String,
    pub row: SweepRow,
}

impl CurveRow {
    pub fn render_csv(rows: &[CurveRow]) -> String {
        let mut out = format!("curve,{SWEEP_CSV_HEADER}\n");
        for r in rows {
            out.push_str(&format!("{},{}\n", r.curve, r.row.csv_fields()));
        }
        out
    }

    pub fn render_json(rows: &[CurveRow]) -> String {
        let values: Vec<_> = rows.iter().map(|r| r.row.json(Some(&r.curve))).collect();
        serde_json::to_string_pretty(&values).expect("rows serialize") + "\n"
    }
}

/// Sweeps every curve along `axis`; curve-major order.
pub fn sweep_curves(curves: &[Curve], axis: Axis, values: &[f64], exec: Execution) -> Vec<CurveRow> {
    let jobs: Vec<(usize, f64)> = (0..curves.len())
        .flat_map(|c| values.iter().map(move |&v| (c, v)))
        .collect();
    map_slice(exec, &jobs, |&(c, value)| CurveRow {
        curve: curves[c].label.clone(),
        row: sweep(&curves[c].params, axis, &[value], Execution::Sequential).remove(0),
    })
}

/// Figure reproductions. Figures come in pairs (attempt and collision
/// probability) over the same parameterization; the tables carry both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Detection probability × {W=32, W=64}, m=3.
    Fig3,
    Fig4,
    /// Detection probability × {m=3, m=5}, W=32.
    Fig5,
    Fig6,
    /// Activity × channel count at P_d=0.5, W=32, m=3.
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Fig3, Preset::Fig4, Preset::Fig5, Preset::Fig6, Preset::Fig7, Preset::Fig8];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    pub fn axis(self) -> Axis {
        Axis::Stations
    }

    /// Station counts 2, 4, …, 50.
    pub fn axis_values(self) -> Vec<f64> {
        (1..=25).map(|i| (2 * i) as f64).collect()
    }

    pub fn curves(self) -> Vec<Curve> {
        preset_curves(self)
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}`; expected fig3..fig8"))
    }
}

pub const PRESET_DETECTION_PROBS: [f64; 3] = [0.1, 0.5, 0.9];

/// Curves of a preset, on the TV-band sensing defaults (−15 dB, 2 ms, 6 MHz).
pub fn preset_curves(preset: Preset) -> Vec<Curve> {
    let base = ModelParams { channels: 1, activity: 0.5, ..ModelParams::default() };
    let mut curves = Vec::new();
    match preset {
        Preset::Fig3 | Preset::Fig4 | Preset::Fig5 | Preset::Fig6 => {
            let shapes: [(u32, u32); 2] = if matches!(preset, Preset::Fig3 | Preset::Fig4) {
                [(32, 3), (64, 3)]
            } else {
                [(32, 3), (32, 5)]
            };
            for (w, m) in shapes {
                for pd in PRESET_DETECTION_PROBS {
                    curves.push(Curve {
                        label: format!("pd={pd};W={w};m={m}"),
                        params: ModelParams {
                            min_window: w,
                            max_stage: m,
                            detection: base.detection.with_pd(pd),
                            ..base
                        },
                    });
                }
            }
        }
        Preset::Fig7 | Preset::Fig8 => {
            for c in [1u32, 3, 6] {
                for a in [0.0, 0.5, 0.8] {
                    curves.push(Curve {
                        label: format!("a={a};C={c}"),
                        params: ModelParams { channels: c, activity: a, ..base },
                    });
                }
            }
        }
    }
    curves
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_sweep_matches_solver() {
        let params = ModelParams::default();
        let rows = sweep(&params, Axis::Stations, &[10.0], Execution::Sequential);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result.clone().unwrap(), solve_fixed_point(&params).unwrap());
    }

    #[test]
    fn bad_points_are_marked_not_fatal() {
        let rows = sweep(&ModelParams::default(), Axis::DetectionProb, &[0.5, 1.5, 0.9], Execution::Sequential);
        assert!(rows[0].is_ok() && !rows[1].is_ok() && rows[2].is_ok());
        let csv = SweepRow::render_csv(&rows);
        assert_eq!(csv.lines().nth(2).unwrap(), "pd,1.5000000000000000e0,,,,");
        let rows = sweep(&ModelParams::default(), Axis::Stations, &[2.5], Execution::Sequential);
        assert!(rows[0].result.as_ref().unwrap_err().contains("`n`"));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let values: Vec<f64> = (1..=40).map(f64::from).collect();
        let a = sweep(&ModelParams::default(), Axis::Stations, &values, Execution::Sequential);
        let b = sweep(&ModelParams::default(), Axis::Stations, &values, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn tau_falls_with_stations() {
        let values: Vec<f64> = (1..=25).map(|i| (2 * i) as f64).collect();
        let rows = sweep(&ModelParams::default(), Axis::Stations, &values, Execution::Sequential);
        let taus: Vec<f64> = rows.iter().map(|r| r.result.as_ref().unwrap().tau).collect();
        assert!(taus.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn csv_layout() {
        let rows = sweep(&ModelParams::default(), Axis::Channels, &[1.0, 3.0, 6.0], Execution::Sequential);
        let csv = SweepRow::render_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!((first[0], first[1]), ("C", "1"));
        let json: serde_json::Value = serde_json::from_str(&SweepRow::render_json(&rows)).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 3);
        assert!(json[0].get("error").is_none());
    }

    #[test]
    fn preset_shapes() {
        for p in Preset::ALL {
            let curves = p.curves();
            assert_eq!(curves.len(), if matches!(p, Preset::Fig7 | Preset::Fig8) { 9 } else { 6 });
            assert!(curves.iter().all(|c| c.params.validate().is_ok()));
        }
        let fig3 = Preset::Fig3.curves();
        assert!(fig3.iter().all(|c| c.params.max_stage == 3 && c.params.channels == 1));
        assert_eq!(fig3.iter().filter(|c| c.params.min_window == 64).count(), 3);
        let fig5 = Preset::Fig5.curves();
        assert!(fig5.iter().all(|c| c.params.min_window == 32));
        assert_eq!(fig5.iter().filter(|c| c.params.max_stage == 5).count(), 3);
        let fig7 = Preset::Fig7.curves();
        assert!(fig7.iter().all(|c| c.params.pd() == 0.5 && c.params.max_stage == 3));
        assert_eq!(Preset::Fig3.axis_values().len(), 25);
    }
}
