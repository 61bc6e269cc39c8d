//! Output-stationary systolic array.
//!
//! Activation lanes enter from the left edge, one row per PE row, skewed by
//! the row index; weight lane pairs enter from the top, skewed by the column
//! index. Each PE multiplies whatever meets in it, adds into its own psum,
//! and forwards both operands. Timing is functional only: one hop per step.

use super::{check_inner, Accumulator, Mode, Multiplier};
use crate::error::Result;
use crate::tensorio::Matrix;
use crate::vsparq::PairEncoding;

#[derive(Debug, Clone, Copy, Default)]
struct Pe {
    act: Option<PairEncoding>,
    wgt: Option<(i8, i8)>,
    psum: Accumulator,
}

/// A `rows x cols` grid of processing elements.
#[derive(Debug, Clone)]
pub struct SystolicArray {
    rows: usize,
    cols: usize,
    multiplier: Multiplier,
}

impl SystolicArray {
    pub const DEFAULT_DIM: usize = 16;

    pub fn new(rows: usize, cols: usize, multiplier: Multiplier) -> Self {
        assert!(rows > 0 && cols > 0, "systolic array needs at least one PE");
        Self { rows, cols, multiplier }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Streams one output tile through the grid. `act_rows.len() <= rows`,
    /// `wgt_cols.len() <= cols`, and all streams share one length.
    fn run_tile(&self, act_rows: &[Vec<PairEncoding>], wgt_cols: &[Vec<(i8, i8)>]) -> Result<Vec<Vec<i32>>> {
        let (tr, tc) = (act_rows.len(), wgt_cols.len());
        let len = act_rows.first().map_or(0, Vec::len);
        let mut grid = vec![vec![Pe::default(); tc]; tr];
        if len == 0 {
            return Ok(vec![vec![0; tc]; tr]);
        }
        let steps = len + tr + tc - 2;
        for t in 0..steps {
            // Walk bottom-right to top-left so neighbours still hold last step's operands.
            for i in (0..tr).rev() {
                for j in (0..tc).rev() {
                    let act = if j == 0 {
                        t.checked_sub(i).and_then(|k| act_rows[i].get(k)).copied()
                    } else {
                        grid[i][j - 1].act
                    };
                    let wgt = if i == 0 {
                        t.checked_sub(j).and_then(|k| wgt_cols[j].get(k)).copied()
                    } else {
                        grid[i - 1][j].wgt
                    };
                    let pe = &mut grid[i][j];
                    if let (Some(a), Some(w)) = (act, wgt) {
                        let product = self.multiplier.lane(&a, w)?;
                        pe.psum.add(product)?;
                    }
                    pe.act = act;
                    pe.wgt = wgt;
                }
            }
        }
        Ok(grid.into_iter().map(|r| r.into_iter().map(|pe| pe.psum.value).collect()).collect())
    }

    /// Tiles the output over the grid and drains each tile's psums.
    pub fn matmul(&self, a: &Matrix<u8>, b: &Matrix<i8>, mode: &Mode) -> Result<Matrix<i32>> {
        check_inner(a, b)?;
        let act: Vec<_> = (0..a.rows()).map(|i| mode.activation_lanes(a.row(i))).collect();
        let wgt: Vec<_> = (0..b.cols()).map(|j| mode.weight_lanes(&b.col(j))).collect();
        let mut out = Matrix::from_fn(a.rows(), b.cols(), |_, _| 0i32);
        for r0 in (0..a.rows()).step_by(self.rows) {
            let r1 = (r0 + self.rows).min(a.rows());
            for c0 in (0..b.cols()).step_by(self.cols) {
                let c1 = (c0 + self.cols).min(b.cols());
                let tile = self.run_tile(&act[r0..r1], &wgt[c0..c1])?;
                for (di, row) in tile.iter().enumerate() {
                    for (dj, &v) in row.iter().enumerate() {
                        out.set(r0 + di, c0 + dj, v);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Matmul on a default-sized output-stationary array.
pub fn sa_matmul(a: &Matrix<u8>, b: &Matrix<i8>, mode: &Mode) -> Result<Matrix<i32>> {
    SystolicArray::new(SystolicArray::DEFAULT_DIM, SystolicArray::DEFAULT_DIM, mode.multiplier()).matmul(a, b, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitquant::TrimConfig;
    use crate::datapath::reference_matmul;

    #[test]
    fn single_sparse_pair() {
        let a = Matrix::new(1, 2, vec![0u8, 200]).unwrap();
        let b = Matrix::new(2, 1, vec![5i8, -3]).unwrap();
        let mode = Mode::sparq(TrimConfig::five_opt(), true, true);
        assert_eq!(sa_matmul(&a, &b, &mode).unwrap().data(), &[-600]);
    }

    #[test]
    fn identity_weights_pass_small_activations() {
        let a = Matrix::from_fn(4, 4, |i, j| (i * 4 + j) as u8 % 16);
        let b = Matrix::from_fn(4, 4, |i, j| (i == j) as i8);
        for cfg in TrimConfig::named().into_iter().filter(|c| c.bits() == 4) {
            let mode = Mode::sparq(cfg, false, true);
            assert_eq!(sa_matmul(&a, &b, &mode).unwrap(), a.map(|v| v as i32));
        }
    }

    #[test]
    fn tiling_matches_reference_on_ragged_shapes() {
        let a = Matrix::from_fn(7, 9, |i, j| ((i * 37 + j * 11) % 256) as u8 * ((i + j) % 3 != 0) as u8);
        let b = Matrix::from_fn(9, 5, |i, j| ((i * 13 + j * 29) % 256) as u8 as i8);
        let mode = Mode::sparq(TrimConfig::three_opt(), true, true);
        let reference = reference_matmul(&a, &b, &mode).unwrap().map(|v| v as i32);
        for dims in [(1, 1), (2, 3), (4, 4), (16, 16)] {
            let sa = SystolicArray::new(dims.0, dims.1, mode.multiplier());
            assert_eq!(sa.matmul(&a, &b, &mode).unwrap(), reference, "array {dims:?}");
        }
    }

    #[test]
    fn empty_reduction_gives_zeros() {
        let a = Matrix::new(2, 0, vec![]).unwrap();
        let b = Matrix::new(0, 3, vec![]).unwrap();
        assert_eq!(sa_matmul(&a, &b, &Mode::Exact).unwrap().data(), &[0; 6]);
    }
}
