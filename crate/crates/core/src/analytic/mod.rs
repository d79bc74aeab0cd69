//! Closed-form attempt and collision probabilities and their fixed point.

mod sweep;

pub use sweep::{
    preset_curves, sweep, sweep_curves, Axis, Curve, CurveRow, Preset, SweepRow,
    SWEEP_CSV_HEADER,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{idle_availability, ModelParams};

/// Damping factor of the fixed-point iteration.
pub const DAMPING: f64 = 0.5;
/// Convergence target on `|p − collision(tau(p))|`.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;
pub const MAX_DAMPED_ITERATIONS: usize = 10_000;

/// Per-station attempt probability of saturated binary exponential backoff,
/// given conditional collision probability `p`:
///
/// `τ = 2(1−2p) / ((1−2p)(W+1) + pW(1−(2p)^m))`.
///
/// Evaluated as `2 / ((W+1) + pW·Σ_{j<m}(2p)^j)`, the same expression with the
/// common factor `1−2p` cancelled. That form has no singularity at `p = 1/2`.
pub fn bianchi_tau(p: f64, min_window: u32, max_stage: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain {
            function: "bianchi_tau",
            reason: format!("collision probability must lie in [0, 1), got {p}"),
        });
    }
    let w = min_window as f64;
    let mut geometric = 0.0;
    let mut power = 1.0;
    for _ in 0..max_stage {
        geometric += power;
        power *= 2.0 * p;
    }
    Ok(2.0 / ((w + 1.0) + p * w * geometric))
}

/// Cross-layer attempt probability: backoff attempt rate times the
/// probability that some channel is perceived idle.
pub fn cross_layer_tau(p: f64, min_window: u32, max_stage: u32, channels: u32, q: f64) -> Result<f64> {
    Ok(bianchi_tau(p, min_window, max_stage)? * idle_availability(channels as usize, q))
}

/// `1 − (1−τ)^{n−1}`: probability at least one of the other stations attempts.
pub fn collision_probability(tau: f64, stations: u32) -> f64 {
    if stations <= 1 {
        return 0.0;
    }
    1.0 - (1.0 - tau).powi(stations as i32 - 1)
}

/// Self-consistent `(τ, p)` pair for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub tau: f64,
    pub p: f64,
    /// Perceived-busy probability the point was solved at.
    pub q: f64,
    pub iterations: usize,
    /// `|p − collision(tau)|` at the returned `p`.
    pub residual: f64,
}

/// Scalar problem `p = collision(cross_layer_tau(p))`.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointProblem {
    pub stations: u32,
    pub min_window: u32,
    pub max_stage: u32,
    pub channels: u32,
    pub q: f64,
}

impl FixedPointProblem {
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(FixedPointProblem {
            stations: params.stations,
            min_window: params.min_window,
            max_stage: params.max_stage,
            channels: params.channels,
            q: params.busy_probability()?,
        })
    }

    pub fn tau(&self, p: f64) -> Result<f64> {
        cross_layer_tau(p, self.min_window, self.max_stage, self.channels, self.q)
    }

    /// The map `p ↦ collision(τ(p))`.
    pub fn image(&self, p: f64) -> Result<f64> {
        Ok(collision_probability(self.tau(p)?, self.stations))
    }

    fn point(&self, p: f64, iterations: usize) -> Result<OperatingPoint> {
        let tau = self.tau(p)?;
        Ok(OperatingPoint {
            tau,
            p,
            q: self.q,
            iterations,
            residual: (collision_probability(tau, self.stations) - p).abs(),
        })
    }

    /// Damped iteration `p ← (1−λ)p + λ·collision(τ(p))` from `p = 0`,
    /// falling back to bisection if it fails to settle.
    pub fn solve(&self) -> Result<OperatingPoint> {
        let mut p = 0.0;
        for iteration in 1..=MAX_DAMPED_ITERATIONS {
            let image = self.image(p)?;
            if (image - p).abs() <= FIXED_POINT_TOLERANCE {
                return self.point(p, iteration);
            }
            p = ((1.0 - DAMPING) * p + DAMPING * image).clamp(0.0, 1.0 - f64::EPSILON);
        }
        self.bisect(MAX_DAMPED_ITERATIONS)
    }

    /// `g(p) = p − collision(τ(p))` is increasing with `g(0) ≤ 0`, so the
    /// root is bracketed by `[0, 1)`.
    fn bisect(&self, spent: usize) -> Result<OperatingPoint> {
        let (mut lo, mut hi) = (0.0_f64, 1.0 - f64::EPSILON);
        if self.image(hi)? - hi > 0.0 {
            return Err(Error::NonConvergence {
                solver: "fixed point",
                iterations: spent,
                residual: self.image(hi)? - hi,
            });
        }
        let mut iterations = spent;
        while hi - lo > f64::EPSILON * 0.5 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mid - self.image(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        let point = self.point(0.5 * (lo + hi), iterations)?;
        if point.residual > FIXED_POINT_TOLERANCE {
            return Err(Error::NonConvergence {
                solver: "fixed point",
                iterations,
                residual: point.residual,
            });
        }
        Ok(point)
    }
}

/// Operating point `(τ*, p*)` of the scenario.
pub fn solve_fixed_point(params: &ModelParams) -> Result<OperatingPoint> {
    FixedPointProblem::from_params(params)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Detection;

    /// The textbook expression, without the cancellation.
    fn raw_bianchi(p: f64, w: f64, m: i32) -> f64 {
        2.0 * (1.0 - 2.0 * p) / ((1.0 - 2.0 * p) * (w + 1.0) + p * w * (1.0 - (2.0 * p).powi(m)))
    }

    #[test]
    fn bianchi_without_collisions() {
        assert!((bianchi_tau(0.0, 32, 3).unwrap() - 2.0 / 33.0).abs() < 1e-15);
        assert!((bianchi_tau(0.0, 64, 3).unwrap() - 2.0 / 65.0).abs() < 1e-15);
    }

    #[test]
    fn bianchi_matches_textbook_form_away_from_half() {
        for &(w, m) in &[(2u32, 0u32), (4, 2), (32, 3), (64, 5), (16, 7)] {
            for i in 0..100 {
                let p = i as f64 / 100.0;
                if (p - 0.5).abs() < 1e-3 {
                    continue;
                }
                let got = bianchi_tau(p, w, m).unwrap();
                let want = raw_bianchi(p, w as f64, m as i32);
                assert!((got - want).abs() < 1e-12 * want.max(1.0), "p={p} W={w} m={m}");
            }
        }
    }

    #[test]
    fn bianchi_is_continuous_at_half() {
        // Two-sided numerical limit of the textbook form.
        let limit = 0.5 * (raw_bianchi(0.5 + 1e-7, 4.0, 2) + raw_bianchi(0.5 - 1e-7, 4.0, 2));
        let at_half = bianchi_tau(0.5, 4, 2).unwrap();
        assert!((at_half - limit).abs() < 1e-5);
        assert!((at_half - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn bianchi_domain() {
        assert!(bianchi_tau(1.0, 32, 3).is_err());
        assert!(bianchi_tau(-0.1, 32, 3).is_err());
        assert!(bianchi_tau(0.99, 32, 3).unwrap() > 0.0);
    }

    #[test]
    fn cross_layer_examples() {
        assert_eq!(cross_layer_tau(0.2, 32, 3, 2, 0.0).unwrap(), bianchi_tau(0.2, 32, 3).unwrap());
        assert_eq!(cross_layer_tau(0.2, 32, 3, 2, 1.0).unwrap(), 0.0);
        let t = cross_layer_tau(0.0, 32, 3, 6, 0.5).unwrap();
        assert!((t - 2.0 / 33.0 * 0.984375).abs() < 1e-15);
    }

    #[test]
    fn collision_examples() {
        assert_eq!(collision_probability(0.7, 1), 0.0);
        assert_eq!(collision_probability(0.0, 12), 0.0);
        assert!((collision_probability(0.1, 10) - (1.0 - 0.9f64.powi(9))).abs() < 1e-15);
        assert!((collision_probability(0.1, 10) - 0.612579511).abs() < 1e-9);
    }

    #[test]
    fn single_station_decouples() {
        let params = ModelParams {
            stations: 1,
            detection: Detection::Explicit { pd: 0.9, pf: 0.1 },
            activity: 0.5,
            ..ModelParams::default()
        };
        let op = solve_fixed_point(&params).unwrap();
        assert_eq!(op.p, 0.0);
        assert!((op.tau - 2.0 / 33.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_operating_point() {
        // 50-digit bisection on g(p) with q = 0.5·0.1 + 0.5·2.7e-3.
        let params = ModelParams {
            stations: 10,
            detection: Detection::Explicit { pd: 0.1, pf: 2.7e-3 },
            ..ModelParams::default()
        };
        let op = solve_fixed_point(&params).unwrap();
        assert!((op.q - 0.05135).abs() < 1e-15);
        assert!((op.p - 0.290_091_207_545_183_86).abs() < 1e-11);
        assert!((op.tau - 0.037_353_246_399_955_28).abs() < 1e-11);
        assert!(op.residual <= FIXED_POINT_TOLERANCE);
    }

    #[test]
    fn fig3_operating_point() {
        let params = ModelParams { stations: 20, ..ModelParams::default() };
        let op = solve_fixed_point(&params).unwrap();
        assert!((op.p - 0.376_854_285_636_897_55).abs() < 1e-11);
        assert!((op.tau - 0.024_586_129_594_893_22).abs() < 1e-11);
    }

    #[test]
    fn bisection_fallback_agrees() {
        let problem = FixedPointProblem { stations: 30, min_window: 16, max_stage: 4, channels: 2, q: 0.3 };
        let damped = problem.solve().unwrap();
        let bisected = problem.bisect(0).unwrap();
        assert!((damped.p - bisected.p).abs() < 1e-11);
    }
}
