use std::io::{self, Write};

use super::state::{ChainState, StateSpace};
use crate::error::{check_probability, Error, Result};
use crate::model::{sensing_kernel, SensingDynamics};

/// Sparse row-stochastic matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from per-row `(col, prob)` lists. Duplicate columns are summed,
    /// zero entries dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                if c >= dim {
                    return Err(Error::Matrix(format!("row {r}: column {c} out of range")));
                }
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Matrix(format!("row {r}: invalid entry {v}")));
                }
                if v == 0.0 {
                    continue;
                }
                if cols.len() > start && cols[cols.len() - 1] == c {
                    *vals.last_mut().expect("nonempty") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(TransitionMatrix { dim, row_ptr, cols, vals })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Matrix("dense matrix is not square".into()));
        }
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().copied().enumerate().collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Largest `|row sum − 1|`.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim)
            .map(|r| (self.row(r).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.vals.iter().all(|&v| (0.0..=1.0 + tol).contains(&v)) && self.max_row_sum_error() <= tol
    }

    /// Relabels states: old index `r` becomes `perm[r]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::Matrix("permutation length mismatch".into()));
        }
        let mut rows = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            rows[perm[r]] = self.row(r).map(|(c, v)| (perm[c], v)).collect();
        }
        Self::from_rows(rows)
    }

    /// Column-major view: for each column, its `(row, prob)` entries.
    pub(crate) fn columns(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut counts = vec![0usize; self.dim + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for j in 0..self.dim {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut rows = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                let at = fill[c];
                rows[at] = r;
                vals[at] = v;
                fill[c] += 1;
            }
        }
        (col_ptr, rows, vals)
    }

    /// Coordinate text dump: a `# states=N ordering=i,k,s` header, then one
    /// `row col probability` line per nonzero.
    pub fn write_coordinate<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# states={} ordering=i,k,s", self.dim)?;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Joint kernel over `(i, k, s)` for a perceived-busy probability `q` and a
/// per-attempt collision probability `p_cond`.
///
/// Each slot the sensing count moves `s → u` first. The backoff move then
/// depends on `u`: with `u = C` (every channel perceived busy) the timer is
/// frozen; otherwise it counts down, and at zero the station transmits. A
/// success restarts at stage 0 and a collision moves to stage `min(i+1, m)`,
/// both with a uniform fresh timer. The fresh timer is independent of `u`.
pub fn build_transition_matrix(
    space: &StateSpace,
    q: f64,
    p_cond: f64,
    dynamics: SensingDynamics,
) -> Result<TransitionMatrix> {
    check_probability("q", q)?;
    check_probability("p_cond", p_cond)?;
    let channels = space.channels();
    let kernel = sensing_kernel(channels, q, dynamics);
    let max_stage = space.max_stage();
    let base_window = space.window(0);

    let rows = space
        .iter()
        .map(|st| {
            let mut row = Vec::new();
            for (u, &p_sense) in kernel[st.busy as usize].iter().enumerate() {
                if p_sense == 0.0 {
                    continue;
                }
                let u = u as u32;
                let at = |stage, timer| space.index(ChainState::new(stage, timer, u));
                if u as usize == channels {
                    row.push((at(st.stage, st.timer), p_sense));
                } else if st.timer > 0 {
                    row.push((at(st.stage, st.timer - 1), p_sense));
                } else {
                    let success = p_sense * (1.0 - p_cond) / base_window as f64;
                    for l in 0..base_window as u32 {
                        row.push((at(0, l), success));
                    }
                    let next_stage = (st.stage + 1).min(max_stage);
                    let window = space.window(next_stage);
                    let collide = p_sense * p_cond / window as f64;
                    for l in 0..window as u32 {
                        row.push((at(next_stage, l), collide));
                    }
                }
            }
            row
        })
        .collect();
    TransitionMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(w: u32, m: u32, c: u32) -> StateSpace {
        StateSpace::new(w, m, c).unwrap()
    }

    #[test]
    fn deterministic_countdown_without_sensing_or_collisions() {
        let s = space(2, 0, 1);
        let p = build_transition_matrix(&s, 0.0, 0.0, SensingDynamics::BirthDeath).unwrap();
        let idx = |i, k, b| s.index(ChainState::new(i, k, b));
        assert_eq!(p.get(idx(0, 1, 0), idx(0, 0, 0)), 1.0);
        assert_eq!(p.get(idx(0, 0, 0), idx(0, 0, 0)), 0.5);
        assert_eq!(p.get(idx(0, 0, 0), idx(0, 1, 0)), 0.5);
        assert_eq!(p.row_nnz(idx(0, 1, 0)), 1);
    }

    #[test]
    fn all_busy_limit_freezes_backoff() {
        let s = space(4, 1, 2);
        let p = build_transition_matrix(&s, 1.0, 0.3, SensingDynamics::BirthDeath).unwrap();
        for st in s.iter().filter(|st| st.busy == 2) {
            let r = s.index(st);
            assert_eq!(p.get(r, r), 1.0, "{st:?}");
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let s = space(4, 1, 2);
        for dynamics in [SensingDynamics::BirthDeath, SensingDynamics::IidPerSlot] {
            let p = build_transition_matrix(&s, 0.4, 0.3, dynamics).unwrap();
            assert_eq!(p.dim(), s.len());
            assert!(p.is_row_stochastic(1e-12));
        }
    }

    #[test]
    fn row_fanout_bound() {
        // Up to three sensing moves, each fanning out over both reset windows.
        for (w, m, c) in [(4, 1, 2), (8, 2, 3), (32, 3, 1), (2, 0, 4)] {
            let s = space(w, m, c);
            let p = build_transition_matrix(&s, 0.4, 0.3, SensingDynamics::BirthDeath).unwrap();
            let bound = 3 * (s.window(0) + s.window(m));
            assert!((0..p.dim()).all(|r| p.row_nnz(r) <= bound));
        }
    }

    #[test]
    fn collision_at_last_stage_stays() {
        let s = space(2, 1, 1);
        let p = build_transition_matrix(&s, 0.0, 1.0, SensingDynamics::BirthDeath).unwrap();
        let r = s.index(ChainState::new(1, 0, 0));
        for l in 0..4 {
            assert_eq!(p.get(r, s.index(ChainState::new(1, l, 0))), 0.25);
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let s = space(2, 0, 1);
        assert!(build_transition_matrix(&s, 1.2, 0.0, SensingDynamics::BirthDeath).is_err());
        assert!(build_transition_matrix(&s, 0.2, -0.1, SensingDynamics::BirthDeath).is_err());
    }

    #[test]
    fn from_rows_merges_and_validates() {
        let m = TransitionMatrix::from_rows(vec![vec![(1, 0.25), (0, 0.5), (1, 0.25)], vec![(0, 1.0)]])
            .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 0.5);
        assert!(TransitionMatrix::from_rows(vec![vec![(3, 1.0)]]).is_err());
        assert!(TransitionMatrix::from_dense(&[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn coordinate_dump_format() {
        let m = TransitionMatrix::from_dense(&[vec![0.7, 0.3], vec![1.0, 0.0]]).unwrap();
        let mut out = Vec::new();
        m.write_coordinate(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# states=2 ordering=i,k,s");
        assert_eq!(lines.len(), 4);
        let parts: Vec<&str> = lines[2].split(' ').collect();
        assert_eq!((parts[0], parts[1]), ("0", "1"));
        assert_eq!(parts[2].parse::<f64>().unwrap(), 0.3);
    }
}
