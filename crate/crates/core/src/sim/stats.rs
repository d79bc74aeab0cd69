use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Batch-means detail behind the confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub count: usize,
    /// Two-sided 95% Student-t quantile with `count − 1` degrees of freedom.
    pub t_quantile: f64,
    pub tau: Vec<f64>,
    /// Per-batch collision fraction; batches without attempts are skipped.
    pub pc_any: Vec<f64>,
}

/// Monte Carlo estimates over the measured (post-warmup) slots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    /// Attempts per (station, slot) pair.
    pub tau_hat: f64,
    /// Fraction of attempts overlapping any other attempt.
    pub pc_hat_any: f64,
    /// Fraction of attempts overlapping another attempt on the same channel.
    pub pc_hat_same_channel: f64,
    /// Fraction of attempts on a channel that was truly busy.
    pub pu_collision_rate: f64,
    pub attempts: u64,
    pub measured_slots: u64,
    pub station_slots: u64,
    pub ci95_tau: f64,
    pub ci95_pc: f64,
    pub batches: BatchSummary,
}

#[derive(Default, Clone, Copy)]
struct Batch {
    station_slots: u64,
    attempts: u64,
    any: u64,
    same: u64,
    primary: u64,
}

pub(super) struct Accumulator {
    batches: Vec<Batch>,
    measured: u64,
    current: usize,
}

impl Accumulator {
    pub(super) fn new(count: usize, measured: u64) -> Self {
        Accumulator { batches: vec![Batch::default(); count], measured, current: 0 }
    }

    /// Opens measured slot `index` (0-based after warmup).
    pub(super) fn begin_slot(&mut self, index: u64, stations: u64) {
        let count = self.batches.len() as u128;
        self.current = (index as u128 * count / self.measured as u128) as usize;
        self.batches[self.current].station_slots += stations;
    }

    pub(super) fn record_attempt(&mut self, any: bool, same: bool, primary: bool) {
        let b = &mut self.batches[self.current];
        b.attempts += 1;
        b.any += any as u64;
        b.same += same as u64;
        b.primary += primary as u64;
    }

    pub(super) fn finish(self) -> SimStats {
        let sum = |f: fn(&Batch) -> u64| self.batches.iter().map(f).sum::<u64>();
        let station_slots = sum(|b| b.station_slots);
        let attempts = sum(|b| b.attempts);
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };

        let tau: Vec<f64> = self
            .batches
            .iter()
            .map(|b| ratio(b.attempts, b.station_slots))
            .collect();
        let pc_any: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| b.attempts > 0)
            .map(|b| ratio(b.any, b.attempts))
            .collect();
        let t_quantile = StudentsT::new(0.0, 1.0, (self.batches.len() - 1) as f64)
            .expect("at least two batches")
            .inverse_cdf(0.975);

        SimStats {
            tau_hat: ratio(attempts, station_slots),
            pc_hat_any: ratio(sum(|b| b.any), attempts),
            pc_hat_same_channel: ratio(sum(|b| b.same), attempts),
            pu_collision_rate: ratio(sum(|b| b.primary), attempts),
            attempts,
            measured_slots: self.measured,
            station_slots,
            ci95_tau: half_width(&tau, t_quantile),
            ci95_pc: half_width(&pc_any, t_quantile),
            batches: BatchSummary { count: self.batches.len(), t_quantile, tau, pc_any },
        }
    }
}

fn half_width(samples: &[f64], t_quantile: f64) -> f64 {
    let k = samples.len();
    if k < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    t_quantile * (var / k as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_partition_measured_slots() {
        let mut acc = Accumulator::new(20, 100);
        for i in 0..100 {
            acc.begin_slot(i, 2);
            if i % 4 == 0 {
                acc.record_attempt(i % 8 == 0, false, false);
            }
        }
        let s = acc.finish();
        assert_eq!(s.station_slots, 200);
        assert_eq!(s.attempts, 25);
        assert!((s.tau_hat - 0.125).abs() < 1e-15);
        assert!((s.pc_hat_any - 13.0 / 25.0).abs() < 1e-15);
        assert_eq!(s.batches.tau.len(), 20);
        assert!((s.batches.t_quantile - 2.093024054).abs() < 1e-6);
    }

    #[test]
    fn constant_batches_have_zero_width() {
        assert!(half_width(&[0.2; 30], 2.0) < 1e-15);
        assert_eq!(half_width(&[0.2], 2.0), 0.0);
        let w = half_width(&[0.0, 1.0], 12.7);
        assert!((w - 12.7 * 0.5).abs() < 1e-12);
    }
}
