//! The joint backoff × sensing Markov chain and its stationary analysis.

mod matrix;
mod state;
mod stationary;

pub use matrix::{build_transition_matrix, TransitionMatrix};
pub use state::{enumerate_states, ChainState, StateSpace, DEFAULT_STATE_CAP};
pub use stationary::{
    stationary_distribution, stationary_distribution_with, SolverOptions, StationaryDistribution,
};

use crate::error::Result;
use crate::model::ModelParams;

/// Attempt probability read off the joint distribution: mass of states with
/// timer 0 and at least one channel perceived idle.
pub fn transmission_probability_full(pi: &StationaryDistribution, space: &StateSpace) -> f64 {
    let width = space.channels() + 1;
    (0..=space.max_stage())
        .map(|stage| {
            let base = space.backoff_index(stage, 0) * width;
            pi.pi[base..base + width - 1].iter().sum::<f64>()
        })
        .sum()
}

/// A built and solved chain for one scenario.
#[derive(Debug, Clone)]
pub struct SolvedChain {
    pub space: StateSpace,
    pub matrix: TransitionMatrix,
    pub stationary: StationaryDistribution,
    pub q: f64,
    pub p_cond: f64,
}

impl SolvedChain {
    pub fn tau(&self) -> f64 {
        transmission_probability_full(&self.stationary, &self.space)
    }
}

/// Builds the chain for `params` at collision probability `p_cond` and solves it.
pub fn solve_chain(params: &ModelParams, p_cond: f64, opts: &SolverOptions) -> Result<SolvedChain> {
    params.validate()?;
    let q = params.busy_probability()?;
    solve_chain_at(
        params.min_window,
        params.max_stage,
        params.channels,
        q,
        p_cond,
        params.dynamics,
        opts,
    )
}

/// Same as [`solve_chain`] with `q` given directly.
pub fn solve_chain_at(
    min_window: u32,
    max_stage: u32,
    channels: u32,
    q: f64,
    p_cond: f64,
    dynamics: crate::model::SensingDynamics,
    opts: &SolverOptions,
) -> Result<SolvedChain> {
    let space = StateSpace::new(min_window, max_stage, channels)?;
    let matrix = build_transition_matrix(&space, q, p_cond, dynamics)?;
    let stationary = stationary_distribution_with(&matrix, opts)?;
    Ok(SolvedChain { space, matrix, stationary, q, p_cond })
}
