//! Slot-synchronous Monte Carlo simulation of saturated CSMA/CA stations
//! sensing `C` primary channels with imperfect detection.

mod stats;

pub use stats::{BatchSummary, SimStats};

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{map_slice, Execution};
use crate::model::{ModelParams, SensingDynamics};
use stats::Accumulator;

/// Generator used for every run: ChaCha with 8 rounds, seeded through
/// `SeedableRng::seed_from_u64`.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";
pub const DEFAULT_WARMUP_SLOTS: u64 = 10_000;
pub const DEFAULT_BATCHES: usize = 25;
pub const MIN_BATCHES: usize = 20;

/// Who shares a sensing outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingScope {
    /// One occupancy and one perceived-occupancy draw shared by all stations.
    Global,
    /// Shared true occupancy, perceived separately by each station.
    PerStation,
    /// Each station observes its own occupancy process and perceives it on
    /// its own, so stations' attempts are independent given their backoff.
    #[default]
    Independent,
}

impl SensingScope {
    pub fn name(self) -> &'static str {
        match self {
            SensingScope::Global => "global",
            SensingScope::PerStation => "per-station",
            SensingScope::Independent => "independent",
        }
    }
}

impl std::str::FromStr for SensingScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "global" => Ok(SensingScope::Global),
            "per-station" => Ok(SensingScope::PerStation),
            "independent" => Ok(SensingScope::Independent),
            other => Err(format!(
                "expected `global`, `per-station` or `independent`, got `{other}`"
            )),
        }
    }
}

/// Channel choice among the perceived-idle ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelPick {
    #[default]
    UniformIdle,
}

/// Which overlaps send a station to the next backoff stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionRule {
    /// Any other station attempting in the same slot.
    #[default]
    AnyAttempt,
    /// Another station attempting on the same channel.
    SameChannel,
}

impl std::str::FromStr for CollisionRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "any-attempt" => Ok(CollisionRule::AnyAttempt),
            "same-channel" => Ok(CollisionRule::SameChannel),
            other => Err(format!("expected `any-attempt` or `same-channel`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Total slots, warmup included.
    pub slots: u64,
    pub seed: u64,
    pub warmup_slots: u64,
    pub sensing_scope: SensingScope,
    pub channel_pick: ChannelPick,
    pub collision_rule: CollisionRule,
    /// Count transmissions on a truly busy channel as collisions.
    pub pu_hits_collide: bool,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(params: ModelParams, slots: u64, seed: u64) -> Self {
        SimConfig {
            params,
            slots,
            seed,
            warmup_slots: DEFAULT_WARMUP_SLOTS,
            sensing_scope: SensingScope::default(),
            channel_pick: ChannelPick::default(),
            collision_rule: CollisionRule::default(),
            pu_hits_collide: false,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn measured_slots(&self) -> u64 {
        self.slots.saturating_sub(self.warmup_slots)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.slots < 1 {
            return Err(invalid("slots", "at least one slot is required"));
        }
        if self.warmup_slots >= self.slots {
            return Err(invalid(
                "warmup",
                format!("must be below slots ({}), got {}", self.slots, self.warmup_slots),
            ));
        }
        if self.batches < MIN_BATCHES {
            return Err(invalid(
                "batches",
                format!("at least {MIN_BATCHES} batches are required, got {}", self.batches),
            ));
        }
        if self.measured_slots() < self.batches as u64 {
            return Err(invalid(
                "slots",
                format!(
                    "{} measured slots cannot fill {} batches",
                    self.measured_slots(),
                    self.batches
                ),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over `base + index·φ`; seeds for runs in a grid.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// True primary occupancy seen by one or more stations.
struct Occupancy {
    busy: Vec<bool>,
}

impl Occupancy {
    fn new(channels: usize, activity: &Bernoulli, rng: &mut ChaCha8Rng) -> Self {
        Occupancy { busy: (0..channels).map(|_| activity.sample(rng)).collect() }
    }

    fn advance(&mut self, dynamics: SensingDynamics, activity: &Bernoulli, rng: &mut ChaCha8Rng) {
        match dynamics {
            SensingDynamics::IidPerSlot => {
                for b in &mut self.busy {
                    *b = activity.sample(rng);
                }
            }
            SensingDynamics::BirthDeath => {
                let c = rng.random_range(0..self.busy.len());
                self.busy[c] = activity.sample(rng);
            }
        }
    }
}

struct Sensor {
    detect: Bernoulli,
    false_alarm: Bernoulli,
}

impl Sensor {
    fn perceive(&self, truth: &[bool], idle: &mut Vec<usize>, rng: &mut ChaCha8Rng) {
        idle.clear();
        for (c, &busy) in truth.iter().enumerate() {
            let flagged = if busy {
                self.detect.sample(rng)
            } else {
                self.false_alarm.sample(rng)
            };
            if !flagged {
                idle.push(c);
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Station {
    stage: u32,
    timer: u64,
}

struct Attempt {
    station: usize,
    channel: usize,
    primary_hit: bool,
}

/// Runs one simulation. Deterministic in `config` (seed included).
///
/// Per slot: occupancy advances, stations sense, each station that sees at
/// least one idle channel counts down or, at timer zero, transmits on a
/// uniformly chosen idle channel; stations seeing every channel busy freeze.
/// Collided stations move to stage `min(i+1, m)`, successful ones to stage 0,
/// both with a uniform fresh timer.
pub fn run_simulation(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let params = &config.params;
    let n = params.stations as usize;
    let channels = params.channels as usize;
    let windows: Vec<u64> = (0..=params.max_stage).map(|i| params.window(i) as u64).collect();

    let activity = Bernoulli::new(params.activity).map_err(|e| invalid("a", e.to_string()))?;
    let sensor = Sensor {
        detect: Bernoulli::new(params.pd()).map_err(|e| invalid("pd", e.to_string()))?,
        false_alarm: Bernoulli::new(params.pf()?).map_err(|e| invalid("pf", e.to_string()))?,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let worlds = match config.sensing_scope {
        SensingScope::Independent => n,
        SensingScope::Global | SensingScope::PerStation => 1,
    };
    let mut occupancy: Vec<Occupancy> =
        (0..worlds).map(|_| Occupancy::new(channels, &activity, &mut rng)).collect();
    let mut stations: Vec<Station> = (0..n)
        .map(|_| Station { stage: 0, timer: rng.random_range(0..windows[0]) })
        .collect();

    let mut acc = Accumulator::new(config.batches, config.measured_slots());
    let mut idle: Vec<usize> = Vec::with_capacity(channels);
    let mut attempts: Vec<Attempt> = Vec::with_capacity(n);
    let mut per_channel = vec![0u32; channels];

    for slot in 0..config.slots {
        for world in &mut occupancy {
            world.advance(params.dynamics, &activity, &mut rng);
        }
        if config.sensing_scope == SensingScope::Global {
            sensor.perceive(&occupancy[0].busy, &mut idle, &mut rng);
        }

        attempts.clear();
        for (j, st) in stations.iter_mut().enumerate() {
            let truth = &occupancy[if worlds == 1 { 0 } else { j }].busy;
            if config.sensing_scope != SensingScope::Global {
                sensor.perceive(truth, &mut idle, &mut rng);
            }
            if idle.is_empty() {
                continue;
            }
            if st.timer > 0 {
                st.timer -= 1;
                continue;
            }
            let channel = match config.channel_pick {
                ChannelPick::UniformIdle => idle[rng.random_range(0..idle.len())],
            };
            attempts.push(Attempt { station: j, channel, primary_hit: truth[channel] });
        }

        for a in &attempts {
            per_channel[a.channel] += 1;
        }
        let measuring = slot >= config.warmup_slots;
        if measuring {
            acc.begin_slot(slot - config.warmup_slots, n as u64);
        }
        for a in &attempts {
            let any = attempts.len() > 1;
            let same = per_channel[a.channel] > 1;
            if measuring {
                acc.record_attempt(any, same, a.primary_hit);
            }
            let collided = match config.collision_rule {
                CollisionRule::AnyAttempt => any,
                CollisionRule::SameChannel => same,
            } || (config.pu_hits_collide && a.primary_hit);
            let st = &mut stations[a.station];
            st.stage = if collided { (st.stage + 1).min(params.max_stage) } else { 0 };
            st.timer = rng.random_range(0..windows[st.stage as usize]);
        }
        for a in &attempts {
            per_channel[a.channel] = 0;
        }
    }
    Ok(acc.finish())
}

/// Runs independent configurations, results in input order.
pub fn run_many(configs: &[SimConfig], exec: Execution) -> Vec<Result<SimStats>> {
    map_slice(exec, configs, run_simulation)
}

/// Serializable record of a run: configuration echo, derived sensing
/// quantities, generator identity and statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub rng: &'static str,
    pub seed: u64,
    pub config: SimConfig,
    pub pf: f64,
    pub q: f64,
    pub stats: SimStats,
}

impl SimReport {
    pub fn new(config: SimConfig, stats: SimStats) -> Result<Self> {
        Ok(SimReport {
            rng: RNG_NAME,
            seed: config.seed,
            pf: config.params.pf()?,
            q: config.params.busy_probability()?,
            config,
            stats,
        })
    }
}
