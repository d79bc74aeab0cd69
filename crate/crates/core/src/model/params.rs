//! Scenario parameters and their canonical `key=value` text form.

use serde::{Deserialize, Serialize};

use super::detection::{false_alarm_from_detection, perceived_busy_probability};
use super::spse::SensingDynamics;
use crate::error::{check_probability, invalid, Error, Result};

pub const DEFAULT_SNR_DB: f64 = -15.0;
pub const DEFAULT_SENSING_TIME: f64 = 2e-3;
pub const DEFAULT_SAMPLING_RATE: f64 = 6e6;

/// Keeps `2^m · W` and the state count comfortably inside `usize`.
const MAX_STAGE: u32 = 24;
const MAX_CHANNELS: u32 = 1024;

/// How the sensing operating point is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Detection {
    /// Detection and false-alarm probabilities given directly.
    Explicit { pd: f64, pf: f64 },
    /// False-alarm probability derived from the energy-detector relation.
    Energy {
        pd: f64,
        snr_db: f64,
        ts: f64,
        fs: f64,
    },
}

impl Detection {
    pub fn pd(&self) -> f64 {
        match *self {
            Detection::Explicit { pd, .. } | Detection::Energy { pd, .. } => pd,
        }
    }

    pub fn with_pd(self, pd: f64) -> Self {
        match self {
            Detection::Explicit { pf, .. } => Detection::Explicit { pd, pf },
            Detection::Energy { snr_db, ts, fs, .. } => Detection::Energy { pd, snr_db, ts, fs },
        }
    }

    /// False-alarm probability, computed in energy mode.
    pub fn pf(&self) -> Result<f64> {
        match *self {
            Detection::Explicit { pf, .. } => Ok(pf),
            Detection::Energy { pd, snr_db, ts, fs } => {
                false_alarm_from_detection(pd, snr_db, ts, fs)
            }
        }
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, Detection::Energy { .. })
    }
}

/// Full description of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Secondary stations contending.
    #[serde(rename = "n")]
    pub stations: u32,
    /// Minimum contention window `W`.
    #[serde(rename = "W")]
    pub min_window: u32,
    /// Maximum backoff stage `m`.
    #[serde(rename = "m")]
    pub max_stage: u32,
    /// Sensed primary channels `C`.
    #[serde(rename = "C")]
    pub channels: u32,
    /// Per-channel primary activity `a`.
    #[serde(rename = "a")]
    pub activity: f64,
    pub detection: Detection,
    pub dynamics: SensingDynamics,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            stations: 10,
            min_window: 32,
            max_stage: 3,
            channels: 1,
            activity: 0.5,
            detection: Detection::Energy {
                pd: 0.5,
                snr_db: DEFAULT_SNR_DB,
                ts: DEFAULT_SENSING_TIME,
                fs: DEFAULT_SAMPLING_RATE,
            },
            dynamics: SensingDynamics::BirthDeath,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.stations < 1 {
            return Err(invalid("n", "at least one station is required"));
        }
        if self.min_window < 2 {
            return Err(invalid("W", format!("must be at least 2, got {}", self.min_window)));
        }
        if self.max_stage > MAX_STAGE {
            return Err(invalid("m", format!("must be at most {MAX_STAGE}, got {}", self.max_stage)));
        }
        if (self.min_window as u64) << self.max_stage > u32::MAX as u64 {
            return Err(invalid("W", "2^m * W overflows"));
        }
        if !(1..=MAX_CHANNELS).contains(&self.channels) {
            return Err(invalid(
                "C",
                format!("must lie in [1, {MAX_CHANNELS}], got {}", self.channels),
            ));
        }
        check_probability("a", self.activity)?;
        check_probability("pd", self.detection.pd())?;
        match self.detection {
            Detection::Explicit { pf, .. } => check_probability("pf", pf)?,
            Detection::Energy { pd, .. } => {
                if pd <= 0.0 || pd >= 1.0 {
                    return Err(invalid(
                        "pd",
                        format!("must lie in (0, 1) when P_f is derived, got {pd}"),
                    ));
                }
                let pf = self.detection.pf()?;
                check_probability("pf", pf)?;
            }
        }
        Ok(())
    }

    /// Contention window at backoff stage `stage`: `2^stage · W`.
    pub fn window(&self, stage: u32) -> usize {
        (self.min_window as usize) << stage
    }

    pub fn pd(&self) -> f64 {
        self.detection.pd()
    }

    pub fn pf(&self) -> Result<f64> {
        self.detection.pf()
    }

    /// Perceived-busy probability `q` of a single channel.
    pub fn busy_probability(&self) -> Result<f64> {
        Ok(perceived_busy_probability(self.activity, self.pd(), self.pf()?))
    }

    /// Canonical `key=value` text, one pair per line.
    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "n={}\nW={}\nm={}\nC={}\na={}\npd={}\n",
            self.stations,
            self.min_window,
            self.max_stage,
            self.channels,
            self.activity,
            self.pd()
        );
        match self.detection {
            Detection::Explicit { pf, .. } => out.push_str(&format!("pf={pf}\n")),
            Detection::Energy { snr_db, ts, fs, .. } => {
                out.push_str(&format!("snr_db={snr_db}\nts={ts}\nfs={fs}\n"))
            }
        }
        out.push_str(&format!("dynamics={}\n", self.dynamics.name()));
        out
    }

    /// Parses canonical `key=value` text; unknown keys are rejected and
    /// missing keys take their defaults.
    pub fn from_kv(text: &str) -> Result<ModelParams> {
        let mut partial = PartialParams::default();
        for entry in parse_kv_lines(text)? {
            if !PartialParams::is_key(&entry.key) {
                return Err(Error::Config {
                    line: entry.line,
                    reason: format!("unknown key `{}`", entry.key),
                });
            }
            partial.set(&entry.key, &entry.value)?;
        }
        partial.resolve()
    }
}

/// One `key=value` line of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits config text into entries. `#` starts a comment; blank lines are skipped.
pub fn parse_kv_lines(text: &str) -> Result<Vec<KvEntry>> {
    let mut entries: Vec<KvEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected `key=value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Config { line, reason: "empty key".into() });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(Error::Config { line, reason: format!("duplicate key `{key}`") });
        }
        entries.push(KvEntry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(entries)
}

/// Model parameters with every field optional, for layering config sources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialParams {
    pub stations: Option<u32>,
    pub min_window: Option<u32>,
    pub max_stage: Option<u32>,
    pub channels: Option<u32>,
    pub activity: Option<f64>,
    pub pd: Option<f64>,
    pub pf: Option<f64>,
    pub snr_db: Option<f64>,
    pub ts: Option<f64>,
    pub fs: Option<f64>,
    pub dynamics: Option<SensingDynamics>,
}

fn parse_value<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

impl PartialParams {
    pub const KEYS: [&'static str; 11] =
        ["n", "W", "m", "C", "a", "pd", "pf", "snr_db", "ts", "fs", "dynamics"];

    pub fn is_key(key: &str) -> bool {
        Self::KEYS.contains(&key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.stations = Some(parse_value("n", value)?),
            "W" => self.min_window = Some(parse_value("W", value)?),
            "m" => self.max_stage = Some(parse_value("m", value)?),
            "C" => self.channels = Some(parse_value("C", value)?),
            "a" => self.activity = Some(parse_value("a", value)?),
            "pd" => self.pd = Some(parse_value("pd", value)?),
            "pf" => self.pf = Some(parse_value("pf", value)?),
            "snr_db" => self.snr_db = Some(parse_value("snr_db", value)?),
            "ts" => self.ts = Some(parse_value("ts", value)?),
            "fs" => self.fs = Some(parse_value("fs", value)?),
            "dynamics" => {
                self.dynamics = Some(value.parse().map_err(|e: String| invalid("dynamics", e))?)
            }
            other => {
                return Err(Error::Config { line: 0, reason: format!("unknown key `{other}`") })
            }
        }
        Ok(())
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(&self, top: &PartialParams) -> PartialParams {
        PartialParams {
            stations: top.stations.or(self.stations),
            min_window: top.min_window.or(self.min_window),
            max_stage: top.max_stage.or(self.max_stage),
            channels: top.channels.or(self.channels),
            activity: top.activity.or(self.activity),
            pd: top.pd.or(self.pd),
            pf: top.pf.or(self.pf),
            snr_db: top.snr_db.or(self.snr_db),
            ts: top.ts.or(self.ts),
            fs: top.fs.or(self.fs),
            dynamics: top.dynamics.or(self.dynamics),
        }
    }

    /// Fills gaps from [`ModelParams::default`] and validates. An explicit
    /// `pf` selects explicit detection; otherwise `pf` is derived.
    pub fn resolve(&self) -> Result<ModelParams> {
        let base = ModelParams::default();
        let pd = self.pd.unwrap_or(base.pd());
        let detection = match self.pf {
            Some(pf) => {
                if self.snr_db.is_some() || self.ts.is_some() || self.fs.is_some() {
                    return Err(invalid(
                        "pf",
                        "an explicit pf cannot be combined with snr_db/ts/fs",
                    ));
                }
                Detection::Explicit { pd, pf }
            }
            None => Detection::Energy {
                pd,
                snr_db: self.snr_db.unwrap_or(DEFAULT_SNR_DB),
                ts: self.ts.unwrap_or(DEFAULT_SENSING_TIME),
                fs: self.fs.unwrap_or(DEFAULT_SAMPLING_RATE),
            },
        };
        let params = ModelParams {
            stations: self.stations.unwrap_or(base.stations),
            min_window: self.min_window.unwrap_or(base.min_window),
            max_stage: self.max_stage.unwrap_or(base.max_stage),
            channels: self.channels.unwrap_or(base.channels),
            activity: self.activity.unwrap_or(base.activity),
            detection,
            dynamics: self.dynamics.unwrap_or(base.dynamics),
        };
        params.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid_and_derive_pf() {
        let p = ModelParams::default();
        p.validate().unwrap();
        assert!((p.pf().unwrap() - 2.6600275256962485e-4).abs() < 1e-12);
        assert_eq!(p.window(0), 32);
        assert_eq!(p.window(3), 256);
    }

    #[test]
    fn validation_names_the_key() {
        let p = ModelParams {
            detection: Detection::Explicit { pd: 1.5, pf: 0.0 },
            ..ModelParams::default()
        };
        match p.validate() {
            Err(Error::InvalidParameter { key, .. }) => assert_eq!(key, "pd"),
            other => panic!("unexpected {other:?}"),
        }
        let p = ModelParams { min_window: 1, ..ModelParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "W", .. })));
        let p = ModelParams { stations: 0, ..ModelParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "n", .. })));
        let p = ModelParams { channels: 0, ..ModelParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "C", .. })));
        let p = ModelParams { activity: -0.1, ..ModelParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "a", .. })));
    }

    #[test]
    fn derived_mode_rejects_degenerate_pd() {
        let p = ModelParams {
            detection: Detection::Energy { pd: 1.0, snr_db: -15.0, ts: 2e-3, fs: 6e6 },
            ..ModelParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "pd", .. })));
    }

    #[test]
    fn kv_parsing_handles_comments_and_rejects_unknown_keys() {
        let text = "# scenario\nn = 20\nW=64 # dashed curve\n\npd=0.9\npf=0.01\n";
        let p = ModelParams::from_kv(text).unwrap();
        assert_eq!(p.stations, 20);
        assert_eq!(p.min_window, 64);
        assert_eq!(p.detection, Detection::Explicit { pd: 0.9, pf: 0.01 });

        assert!(matches!(
            ModelParams::from_kv("n=3\nbogus=1\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(ModelParams::from_kv("n 3"), Err(Error::Config { line: 1, .. })));
        assert!(ModelParams::from_kv("n=3\nn=4").is_err());
        assert!(ModelParams::from_kv("pf=0.1\nsnr_db=-10").is_err());
    }

    #[test]
    fn overlay_prefers_top() {
        let mut file = PartialParams::default();
        file.set("n", "5").unwrap();
        file.set("W", "64").unwrap();
        let mut flags = PartialParams::default();
        flags.set("n", "7").unwrap();
        let merged = file.overlay(&flags).resolve().unwrap();
        assert_eq!((merged.stations, merged.min_window), (7, 64));
    }

    fn params_strategy() -> impl Strategy<Value = ModelParams> {
        (
            1u32..200,
            2u32..512,
            0u32..7,
            1u32..16,
            0.0f64..=1.0,
            0.001f64..0.999,
            prop::option::of(0.0f64..=1.0),
            prop::bool::ANY,
        )
            .prop_map(|(n, w, m, c, a, pd, pf, bd)| ModelParams {
                stations: n,
                min_window: w,
                max_stage: m,
                channels: c,
                activity: a,
                detection: match pf {
                    Some(pf) => Detection::Explicit { pd, pf },
                    None => Detection::Energy { pd, snr_db: -12.5, ts: 1e-3, fs: 6e6 },
                },
                dynamics: if bd {
                    SensingDynamics::BirthDeath
                } else {
                    SensingDynamics::IidPerSlot
                },
            })
    }

    proptest! {
        #[test]
        fn kv_round_trip(p in params_strategy()) {
            let back = ModelParams::from_kv(&p.to_kv()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
