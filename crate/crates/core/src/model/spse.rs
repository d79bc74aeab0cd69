//! Perceived channel-occupancy process over `C` homogeneous channels.
//!
//! The state is the number of channels perceived busy, `s ∈ [0, C]`.

use serde::{Deserialize, Serialize};

/// Per-slot evolution of the channel occupancy process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingDynamics {
    /// Every channel is re-drawn independently each slot.
    IidPerSlot,
    /// One uniformly chosen channel is re-drawn each slot.
    #[default]
    BirthDeath,
}

impl SensingDynamics {
    pub fn name(self) -> &'static str {
        match self {
            SensingDynamics::IidPerSlot => "iid-per-slot",
            SensingDynamics::BirthDeath => "birth-death",
        }
    }
}

impl std::str::FromStr for SensingDynamics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "iid-per-slot" | "iid" => Ok(SensingDynamics::IidPerSlot),
            "birth-death" => Ok(SensingDynamics::BirthDeath),
            other => Err(format!(
                "expected `birth-death` or `iid-per-slot`, got `{other}`"
            )),
        }
    }
}

/// Stationary law of the perceived-busy channel count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpSeDistribution {
    pub probs: Vec<f64>,
}

impl SpSeDistribution {
    pub fn channels(&self) -> usize {
        self.probs.len() - 1
    }

    /// Probability that at least one channel is perceived idle.
    pub fn idle_mass(&self) -> f64 {
        self.probs[..self.channels()].iter().sum()
    }
}

/// Birth-death kernel: one channel toggles per slot, so
/// `P(s→s+1) = q(C−s)/C`, `P(s→s−1) = (1−q)s/C`, the rest stays.
pub fn spse_transition_matrix(channels: usize, q: f64) -> Vec<Vec<f64>> {
    assert!(channels >= 1, "at least one channel is required");
    let c = channels as f64;
    (0..=channels)
        .map(|s| {
            let mut row = vec![0.0; channels + 1];
            let up = q * (channels - s) as f64 / c;
            let down = (1.0 - q) * s as f64 / c;
            if s < channels {
                row[s + 1] = up;
            }
            if s > 0 {
                row[s - 1] = down;
            }
            row[s] = 1.0 - up - down;
            row
        })
        .collect()
}

/// Kernel of the chosen dynamics. In iid mode every row is the stationary law.
pub fn sensing_kernel(channels: usize, q: f64, dynamics: SensingDynamics) -> Vec<Vec<f64>> {
    match dynamics {
        SensingDynamics::BirthDeath => spse_transition_matrix(channels, q),
        SensingDynamics::IidPerSlot => {
            let row = spse_stationary(channels, q).probs;
            vec![row; channels + 1]
        }
    }
}

/// Binomial(C, q) stationary distribution of either kernel.
pub fn spse_stationary(channels: usize, q: f64) -> SpSeDistribution {
    assert!(channels >= 1, "at least one channel is required");
    let mut binom = 1.0_f64;
    let probs = (0..=channels)
        .map(|s| {
            if s > 0 {
                binom = binom * (channels - s + 1) as f64 / s as f64;
            }
            binom * q.powi(s as i32) * (1.0 - q).powi((channels - s) as i32)
        })
        .collect();
    SpSeDistribution { probs }
}

/// `P(at least one channel perceived idle) = 1 − q^C`.
pub fn idle_availability(channels: usize, q: f64) -> f64 {
    1.0 - q.powi(channels as i32)
}
