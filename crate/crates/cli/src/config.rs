//! Run configuration: `key=value` files layered under command-line flags.

use std::path::Path;

use cogmac_core::model::{parse_kv_lines, PartialParams};
use cogmac_core::sim::{CollisionRule, SensingScope};
use cogmac_core::Error;

/// Simulation options, every field optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialSim {
    pub slots: Option<u64>,
    pub seed: Option<u64>,
    pub warmup: Option<u64>,
    pub sensing_scope: Option<SensingScope>,
    pub collision_rule: Option<CollisionRule>,
    pub pu_hits_collide: Option<bool>,
    pub batches: Option<usize>,
}

impl PartialSim {
    pub const KEYS: [&'static str; 7] = [
        "slots",
        "seed",
        "warmup",
        "sensing_scope",
        "collision_rule",
        "pu_hits_collide",
        "batches",
    ];

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value for `{key}`: cannot parse `{value}`"))
        }
        let tagged = |e: String| format!("invalid value for `{key}`: {e}");
        match key {
            "slots" => self.slots = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "warmup" => self.warmup = Some(num(key, value)?),
            "batches" => self.batches = Some(num(key, value)?),
            "pu_hits_collide" => self.pu_hits_collide = Some(num(key, value)?),
            "sensing_scope" => self.sensing_scope = Some(value.parse().map_err(tagged)?),
            "collision_rule" => self.collision_rule = Some(value.parse().map_err(tagged)?),
            _ => unreachable!("caller checks keys"),
        }
        Ok(())
    }

    pub fn overlay(&self, top: &PartialSim) -> PartialSim {
        PartialSim {
            slots: top.slots.or(self.slots),
            seed: top.seed.or(self.seed),
            warmup: top.warmup.or(self.warmup),
            sensing_scope: top.sensing_scope.or(self.sensing_scope),
            collision_rule: top.collision_rule.or(self.collision_rule),
            pu_hits_collide: top.pu_hits_collide.or(self.pu_hits_collide),
            batches: top.batches.or(self.batches),
        }
    }
}

/// Parsed config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfigFile {
    pub model: PartialParams,
    pub sim: PartialSim,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = RunConfigFile::default();
        for entry in parse_kv_lines(text).map_err(|e| e.to_string())? {
            let at = |e: String| format!("config line {}: {e}", entry.line);
            if PartialParams::is_key(&entry.key) {
                out.model
                    .set(&entry.key, &entry.value)
                    .map_err(|e: Error| at(e.to_string()))?;
            } else if PartialSim::KEYS.contains(&entry.key.as_str()) {
                out.sim.set(&entry.key, &entry.value).map_err(at)?;
            } else {
                return Err(at(format!("unknown key `{}`", entry.key)));
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }
}
