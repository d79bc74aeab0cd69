use serde::Serialize;

use super::matrix::TransitionMatrix;
use super::state::StateSpace;
use crate::error::{Error, Result};
use crate::exec::{fill_indexed, Execution};

/// Power-iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `max |x_{t+1} − x_t|` falls to this value.
    pub step_tolerance: f64,
    /// Required `max |πP − π|` at the returned vector.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            step_tolerance: 1e-15,
            residual_tolerance: 1e-10,
            max_iterations: 1_000_000,
            execution: Execution::Sequential,
        }
    }
}

/// Stationary probability vector in the matrix's state order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub iterations: usize,
    /// `max |πP − π|` at `pi`.
    pub residual: f64,
}

impl StationaryDistribution {
    pub fn total(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// Mass on the perceived-busy count `s`, for `s = 0..=C`.
    pub fn sensing_marginal(&self, space: &StateSpace) -> Vec<f64> {
        let width = space.channels() + 1;
        let mut out = vec![0.0; width];
        for (idx, &p) in self.pi.iter().enumerate() {
            out[idx % width] += p;
        }
        out
    }

    /// Mass on each `(i, k)` pair, indexed by [`StateSpace::backoff_index`].
    pub fn backoff_marginal(&self, space: &StateSpace) -> Vec<f64> {
        self.pi
            .chunks(space.channels() + 1)
            .map(|c| c.iter().sum())
            .collect()
    }

    /// `max |π(i,k,s) − π(i,k)·π(s)|`, zero when the coordinates are independent.
    pub fn factorization_error(&self, space: &StateSpace) -> f64 {
        let sensing = self.sensing_marginal(space);
        let backoff = self.backoff_marginal(space);
        let width = sensing.len();
        self.pi
            .iter()
            .enumerate()
            .map(|(idx, &p)| (p - backoff[idx / width] * sensing[idx % width]).abs())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution with default options.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<StationaryDistribution> {
    stationary_distribution_with(matrix, &SolverOptions::default())
}

/// Power iteration `x ← xP` from the uniform vector.
///
/// Every kernel built here has a self-loop somewhere on each recurrent class,
/// so the iteration converges. When `q ∈ {0, 1}` some states are transient
/// and simply end up with zero mass; at `q = 1` the limit depends on the
/// uniform start, with all mass on `s = C`.
pub fn stationary_distribution_with(
    matrix: &TransitionMatrix,
    opts: &SolverOptions,
) -> Result<StationaryDistribution> {
    let dim = matrix.dim();
    if dim == 0 {
        return Err(Error::Matrix("empty matrix".into()));
    }
    let (col_ptr, rows, vals) = matrix.columns();
    let step = |x: &[f64], out: &mut [f64]| {
        fill_indexed(opts.execution, out, |j| {
            (col_ptr[j]..col_ptr[j + 1])
                .map(|e| x[rows[e]] * vals[e])
                .sum()
        });
    };

    let mut x = vec![1.0 / dim as f64; dim];
    let mut next = vec![0.0; dim];
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        step(&x, &mut next);
        iterations += 1;
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta <= opts.step_tolerance {
            break;
        }
    }

    step(&x, &mut next);
    let residual = x
        .iter()
        .zip(&next)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if delta > opts.step_tolerance && residual > opts.residual_tolerance {
        return Err(Error::NonConvergence {
            solver: "power iteration",
            iterations,
            residual,
        });
    }
    Ok(StationaryDistribution { pi: x, iterations, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_chain() {
        let m = TransitionMatrix::from_dense(&[vec![0.7, 0.3], vec![0.7, 0.3]]).unwrap();
        let d = stationary_distribution(&m).unwrap();
        assert!((d.pi[0] - 0.7).abs() < 1e-15 && (d.pi[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_state_chain() {
        // Balance: 0.2·π0 = 0.6·π1.
        let m = TransitionMatrix::from_dense(&[vec![0.8, 0.2], vec![0.6, 0.4]]).unwrap();
        let d = stationary_distribution(&m).unwrap();
        assert!((d.pi[0] - 0.75).abs() < 1e-13);
        assert!(d.residual <= 1e-10);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let m = TransitionMatrix::from_dense(&[vec![0.999, 0.001], vec![0.001, 0.999]]).unwrap();
        let opts = SolverOptions { max_iterations: 3, residual_tolerance: 1e-30, ..Default::default() };
        let start = TransitionMatrix::from_dense(&[vec![0.9, 0.1], vec![0.0, 1.0]]).unwrap();
        // Uniform start is already stationary for the symmetric chain.
        assert!(stationary_distribution_with(&m, &opts).is_ok());
        assert!(matches!(
            stationary_distribution_with(&start, &opts),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn transient_states_get_zero_mass() {
        let m = TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let d = stationary_distribution(&m).unwrap();
        assert!(d.pi[0] < 1e-14 && (d.pi[1] - 1.0).abs() < 1e-14);
    }
}
