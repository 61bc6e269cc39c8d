//! Tensor-core dot-product unit: four dual multipliers feeding an adder
//! tree together with an incoming accumulator value.

use super::{check_inner, Accumulator, Mode, Multiplier};
use crate::error::{Result, SparqError};
use crate::tensorio::Matrix;
use crate::vsparq::{encode_vector, weight_pairs, PairEncoding, SparqParams};

/// Multipliers per DP unit.
pub const TC_LANES: usize = 4;

#[derive(Debug, Clone)]
pub struct DotProductUnit {
    multiplier: Multiplier,
}

impl DotProductUnit {
    pub fn new(multiplier: Multiplier) -> Self {
        Self { multiplier }
    }

    /// One step: up to four lanes reduced into `acc`.
    pub fn step(&self, acts: &[PairEncoding], wgts: &[(i8, i8)], acc: Accumulator) -> Result<Accumulator> {
        if acts.len() > TC_LANES || acts.len() != wgts.len() {
            return Err(SparqError::LaneCount { expected: TC_LANES, found: acts.len().max(wgts.len()) });
        }
        let mut products = [0i32; TC_LANES];
        for (slot, (a, &w)) in products.iter_mut().zip(acts.iter().zip(wgts)) {
            *slot = self.multiplier.lane(a, w)?;
        }
        // Two-level adder tree, then the third input.
        let tree = (products[0] + products[1]) + (products[2] + products[3]);
        let mut out = acc;
        out.add(tree)?;
        Ok(out)
    }

    /// Full reduction over lane streams, four lanes per step.
    pub fn reduce(&self, acts: &[PairEncoding], wgts: &[(i8, i8)]) -> Result<i32> {
        let mut acc = Accumulator::default();
        for (a, w) in acts.chunks(TC_LANES).zip(wgts.chunks(TC_LANES)) {
            acc = self.step(a, w, acc)?;
        }
        Ok(acc.value)
    }
}

/// Eight activations (four pairs) against eight weights, added to `acc`.
pub fn tc_dot4(x: &[u8], w: &[i8], acc: Accumulator, params: &SparqParams) -> Result<Accumulator> {
    const WIDTH: usize = 2 * TC_LANES;
    if x.len() != WIDTH || w.len() != WIDTH {
        return Err(SparqError::LaneCount { expected: WIDTH, found: if x.len() != WIDTH { x.len() } else { w.len() } });
    }
    DotProductUnit::new(Multiplier::from_config(&params.cfg)).step(&encode_vector(x, params), &weight_pairs(w), acc)
}

/// Matmul composed from DP-unit steps, one output element at a time.
pub fn tc_matmul(a: &Matrix<u8>, b: &Matrix<i8>, mode: &Mode) -> Result<Matrix<i32>> {
    check_inner(a, b)?;
    let unit = DotProductUnit::new(mode.multiplier());
    let wgt: Vec<_> = (0..b.cols()).map(|j| mode.weight_lanes(&b.col(j))).collect();
    let mut out = Matrix::from_fn(a.rows(), b.cols(), |_, _| 0i32);
    for i in 0..a.rows() {
        let act = mode.activation_lanes(a.row(i));
        for (j, w) in wgt.iter().enumerate() {
            out.set(i, j, unit.reduce(&act, w)?);
        }
    }
    Ok(out)
}
