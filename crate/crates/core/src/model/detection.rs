//! Energy-detection relations over an AWGN channel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{invalid, Error, Result};

/// Largest |x| for which `q_function` is distinguishable from 0 or 1 in f64.
const TAIL_LIMIT: f64 = 38.5;

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_function`] on the open interval `(0, 1)`.
///
/// Safeguarded Newton iteration inside a shrinking bracket. Inputs above 0.5
/// are reflected through `Q(-x) = 1 - Q(x)` so the search always runs in the
/// upper tail where `Q` has full relative precision.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            function: "inverse_q",
            reason: format!("probability must lie in (0, 1), got {p}"),
        });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return inverse_q(1.0 - p).map(|x| -x);
    }

    // Q is decreasing: Q(lo) > p > Q(hi).
    let (mut lo, mut hi) = (0.0_f64, TAIL_LIMIT);
    let mut x = 1.0_f64.min(hi);
    for _ in 0..200 {
        let fx = q_function(x) - p;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = normal_pdf(x);
        let mut next = if slope > 0.0 { x + fx / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// False-alarm probability of an energy detector operated at detection
/// probability `pd`, sensed SNR `snr_db`, sensing time `sensing_time` (s) and
/// sampling rate `sampling_rate` (Hz):
///
/// `P_f = Q( Q⁻¹(P_d)·sqrt(2γ + 1) + sqrt(T_s·f_s)·γ )`, γ linear SNR.
pub fn false_alarm_from_detection(
    pd: f64,
    snr_db: f64,
    sensing_time: f64,
    sampling_rate: f64,
) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(invalid("snr_db", format!("must be finite, got {snr_db}")));
    }
    if !(sensing_time > 0.0 && sensing_time.is_finite()) {
        return Err(invalid("ts", format!("must be positive, got {sensing_time}")));
    }
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(invalid("fs", format!("must be positive, got {sampling_rate}")));
    }
    let samples = sensing_time * sampling_rate;
    if samples < 1.0 {
        return Err(invalid(
            "ts",
            format!("sensing time times sampling rate must be at least 1, got {samples}"),
        ));
    }
    let threshold = inverse_q(pd).map_err(|_| Error::Domain {
        function: "false_alarm_from_detection",
        reason: format!("detection probability must lie in (0, 1), got {pd}"),
    })?;
    let gamma = db_to_linear(snr_db);
    let arg = threshold * (2.0 * gamma + 1.0).sqrt() + samples.sqrt() * gamma;
    Ok(q_function(arg).clamp(0.0, 1.0))
}

/// Probability a single channel is perceived busy under imperfect sensing:
/// `q = a·P_d + (1 − a)·P_f`.
pub fn perceived_busy_probability(activity: f64, pd: f64, pf: f64) -> f64 {
    (activity * pd + (1.0 - activity) * pf).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision references (50-digit erfc) computed offline.
    const Q_1_6448536269514722: f64 = 0.050000000000000053100812763254153;
    const Q_3: f64 = 0.0013498980316300945266518147675950;
    const Q_6: f64 = 9.8658764503769814070086413239804e-10;
    const Q_MINUS_1_25: f64 = 0.89435022633314474231122723597425;
    const INV_Q_0_05: f64 = 1.6448536269514727148638489079916;
    const INV_Q_0_9: f64 = -1.281_551_565_544_600_4;
    const INV_Q_1E_6: f64 = 4.7534243088228989481939881870043;

    #[test]
    fn q_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.6448536269514722) - Q_1_6448536269514722).abs() < 1e-12);
        assert!((q_function(3.0) - Q_3).abs() < 1e-12);
        assert!((q_function(-3.0) - (1.0 - Q_3)).abs() < 1e-12);
        assert!((q_function(6.0) - Q_6).abs() < 1e-12);
        assert!((q_function(-1.25) - Q_MINUS_1_25).abs() < 1e-12);
    }

    #[test]
    fn q_is_strictly_decreasing() {
        let grid: Vec<f64> = (-80..=80).map(|i| i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            assert!(q_function(w[0]) > q_function(w[1]), "at {:?}", w);
        }
    }

    #[test]
    fn inverse_q_reference_values() {
        assert_eq!(inverse_q(0.5).unwrap(), 0.0);
        assert!((inverse_q(0.05).unwrap() - INV_Q_0_05).abs() < 1e-9);
        assert!((inverse_q(0.9).unwrap() - INV_Q_0_9).abs() < 1e-9);
        assert!((inverse_q(1e-6).unwrap() - INV_Q_1E_6).abs() < 1e-9);
        assert!((inverse_q(q_function(2.0)).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_q_round_trips() {
        for i in -50..=60 {
            let x = i as f64 * 0.1;
            let p = q_function(x);
            let back = inverse_q(p).unwrap();
            assert!((back - x).abs() < 1e-9, "x={x} back={back}");
            assert!((q_function(back) - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_q_lower_tail_is_limited_by_representation() {
        // Near p = 1 one ulp of p spans ulp/φ(x) in x, about 1.8e-8 at x = -6.
        for i in -60..-50 {
            let x = i as f64 * 0.1;
            let p = q_function(x);
            let back = inverse_q(p).unwrap();
            let spread = f64::EPSILON / normal_pdf(x);
            assert!((back - x).abs() <= spread, "x={x} back={back} spread={spread}");
            assert!((q_function(back) - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_q_rejects_boundaries() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(inverse_q(p), Err(Error::Domain { .. })), "p={p}");
        }
    }

    #[test]
    fn false_alarm_at_tv_band_parameters() {
        // Q(sqrt(12000) * 10^-1.5) = Q(3.4641016...) from the offline oracle.
        let pf = false_alarm_from_detection(0.5, -15.0, 2e-3, 6e6).unwrap();
        assert!((pf - 2.6600275256962485e-4).abs() < 1e-12);
        let pf_high = false_alarm_from_detection(0.9, -15.0, 2e-3, 6e6).unwrap();
        assert!((pf_high - 0.016_070_802_986_421_8).abs() < 1e-12);
        let pf_low = false_alarm_from_detection(0.1, -15.0, 2e-3, 6e6).unwrap();
        assert!((pf_low - 8.525_641_674_004_533e-7).abs() < 1e-12);
    }

    #[test]
    fn false_alarm_monotonicity() {
        let pds: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
        let pfs: Vec<f64> = pds
            .iter()
            .map(|&pd| false_alarm_from_detection(pd, -15.0, 2e-3, 6e6).unwrap())
            .collect();
        assert!(pfs.windows(2).all(|w| w[1] > w[0]));

        let times = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3];
        let pfs: Vec<f64> = times
            .iter()
            .map(|&ts| false_alarm_from_detection(0.9, -15.0, ts, 6e6).unwrap())
            .collect();
        assert!(pfs.windows(2).all(|w| w[1] < w[0]), "{pfs:?}");
    }

    #[test]
    fn false_alarm_vanishes_for_long_sensing() {
        let pf = false_alarm_from_detection(0.5, -15.0, 10.0, 6e6).unwrap();
        assert!(pf < 1e-300);
    }

    #[test]
    fn false_alarm_errors() {
        assert!(matches!(
            false_alarm_from_detection(1.0, -15.0, 2e-3, 6e6),
            Err(Error::Domain { .. })
        ));
        assert!(false_alarm_from_detection(0.5, -15.0, 0.0, 6e6).is_err());
        assert!(false_alarm_from_detection(0.5, -15.0, 1e-9, 6e6).is_err());
    }

    #[test]
    fn perceived_busy_is_affine_in_activity() {
        assert_eq!(perceived_busy_probability(0.5, 0.9, 0.1), 0.5);
        assert_eq!(perceived_busy_probability(0.0, 0.7, 0.2), 0.2);
        assert_eq!(perceived_busy_probability(1.0, 0.7, 0.2), 0.7);
        let (pd, pf) = (0.8, 0.05);
        for a in [0.0, 0.3, 1.0] {
            let line = pf + a * (pd - pf);
            assert!((perceived_busy_probability(a, pd, pf) - line).abs() < 1e-15);
        }
    }
}
