//! Scenario parameters, energy detection and the channel-occupancy process.

pub mod detection;
pub mod params;
pub mod spse;

pub use detection::{
    db_to_linear, false_alarm_from_detection, inverse_q, perceived_busy_probability, q_function,
};
pub use params::{parse_kv_lines, Detection, KvEntry, ModelParams, PartialParams};
pub use spse::{
    idle_availability, sensing_kernel, spse_stationary, spse_transition_matrix,
    SensingDynamics, SpSeDistribution,
};
