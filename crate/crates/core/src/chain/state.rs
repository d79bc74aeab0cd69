use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

/// One state `(i, k, s)`: backoff stage, backoff timer, perceived-busy count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ChainState {
    pub stage: u32,
    pub timer: u32,
    pub busy: u32,
}

impl ChainState {
    pub const fn new(stage: u32, timer: u32, busy: u32) -> Self {
        ChainState { stage, timer, busy }
    }
}

/// Lexicographic `(i, k, s)` layout of the 3-D state space.
///
/// Index of `(i, k, s)` is `(offset[i] + k)·(C + 1) + s`, where `offset[i]`
/// is the number of timer values in stages `0..i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    min_window: usize,
    max_stage: u32,
    channels: usize,
    offsets: Vec<usize>,
}

impl StateSpace {
    pub fn new(min_window: u32, max_stage: u32, channels: u32) -> Result<Self> {
        Self::with_cap(min_window, max_stage, channels, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(min_window: u32, max_stage: u32, channels: u32, cap: usize) -> Result<Self> {
        if min_window < 2 {
            return Err(invalid("W", format!("must be at least 2, got {min_window}")));
        }
        if channels < 1 {
            return Err(invalid("C", "at least one channel is required"));
        }
        if max_stage > 40 {
            return Err(invalid("m", format!("must be at most 40, got {max_stage}")));
        }
        // Total in u128 so absurd inputs report Capacity rather than overflow.
        let timers = (min_window as u128) * ((1u128 << (max_stage + 1)) - 1);
        let total = timers * (channels as u128 + 1);
        if total > cap as u128 {
            return Err(Error::Capacity {
                states: usize::try_from(total).unwrap_or(usize::MAX),
                cap,
            });
        }
        let mut offsets = Vec::with_capacity(max_stage as usize + 2);
        let mut acc = 0usize;
        offsets.push(0);
        for stage in 0..=max_stage {
            acc += (min_window as usize) << stage;
            offsets.push(acc);
        }
        Ok(StateSpace {
            min_window: min_window as usize,
            max_stage,
            channels: channels as usize,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.timer_slots() * (self.channels + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn max_stage(&self) -> u32 {
        self.max_stage
    }

    /// Contention window `2^stage · W`.
    pub fn window(&self, stage: u32) -> usize {
        self.min_window << stage
    }

    /// Number of `(i, k)` pairs.
    pub fn timer_slots(&self) -> usize {
        *self.offsets.last().expect("offsets are never empty")
    }

    /// Flat index of the `(i, k)` pair, the layout of backoff marginals.
    pub fn backoff_index(&self, stage: u32, timer: u32) -> usize {
        self.offsets[stage as usize] + timer as usize
    }

    pub fn index(&self, state: ChainState) -> usize {
        debug_assert!(state.stage <= self.max_stage);
        debug_assert!((state.timer as usize) < self.window(state.stage));
        debug_assert!(state.busy as usize <= self.channels);
        self.backoff_index(state.stage, state.timer) * (self.channels + 1) + state.busy as usize
    }

    pub fn state(&self, index: usize) -> ChainState {
        let pair = index / (self.channels + 1);
        let busy = (index % (self.channels + 1)) as u32;
        let stage = self.offsets.partition_point(|&o| o <= pair) - 1;
        ChainState {
            stage: stage as u32,
            timer: (pair - self.offsets[stage]) as u32,
            busy,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ChainState> + '_ {
        (0..=self.max_stage).flat_map(move |stage| {
            (0..self.window(stage) as u32).flat_map(move |timer| {
                (0..=self.channels as u32).map(move |busy| ChainState { stage, timer, busy })
            })
        })
    }
}

/// All states in canonical `(i, k, s)` order.
pub fn enumerate_states(min_window: u32, max_stage: u32, channels: u32) -> Result<Vec<ChainState>> {
    Ok(StateSpace::new(min_window, max_stage, channels)?.iter().collect())
}
