//! Functional models of the accelerator datapaths.
//!
//! Every engine consumes the same lane streams: activation rows are encoded
//! into [`PairEncoding`]s once at the array edge, weights travel as
//! (even, odd) pairs, and each multiplier evaluates one lane per step. The
//! engines differ only in how lanes are scheduled and reduced, so their
//! outputs must agree bit for bit with [`reference_matmul`].

mod multiplier;
mod sparse;
mod systolic;
mod tensor_core;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use multiplier::{dual_multiply, Accumulator, DualMultInput, MuxSel, Multiplier};
pub use sparse::{make_24_mask, stc_filter, stc_matmul, SparseWeights};
pub use systolic::{sa_matmul, SystolicArray};
pub use tensor_core::{tc_dot4, tc_matmul, DotProductUnit, TC_LANES};

use crate::bitquant::TrimConfig;
use crate::error::{Result, SparqError};
use crate::tensorio::{Matrix, QuantTensor};
use crate::vsparq::{encode_vector, pair_contribution, weight_pairs, PairEncoding, SparqParams};

/// Arithmetic applied to activations before multiplication.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Plain INT8: one full-precision product per lane.
    Exact,
    Sparq(SparqParams),
}

impl Mode {
    pub fn sparq(cfg: TrimConfig, rounding: bool, vsparq: bool) -> Self {
        Mode::Sparq(SparqParams::new(cfg, rounding, vsparq))
    }

    /// Multiplier whose shifter table matches this mode.
    pub fn multiplier(&self) -> Multiplier {
        match self {
            Mode::Exact => Multiplier::from_config(&TrimConfig::two_opt()),
            Mode::Sparq(p) => Multiplier::from_config(&p.cfg),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mode::Exact => "int8".into(),
            Mode::Sparq(p) => p.label(),
        }
    }

    /// Activation lanes for one reduction vector.
    pub fn activation_lanes(&self, x: &[u8]) -> Vec<PairEncoding> {
        match self {
            Mode::Exact => x.iter().map(|&v| PairEncoding::exact(v)).collect(),
            Mode::Sparq(p) => encode_vector(x, p),
        }
    }

    /// Weight lanes matching [`Mode::activation_lanes`].
    pub fn weight_lanes(&self, w: &[i8]) -> Vec<(i8, i8)> {
        match self {
            Mode::Exact => w.iter().map(|&v| (v, 0)).collect(),
            Mode::Sparq(_) => weight_pairs(w),
        }
    }
}

impl From<SparqParams> for Mode {
    fn from(p: SparqParams) -> Self {
        Mode::Sparq(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Direct pair-wise evaluation.
    Ref,
    /// Output-stationary systolic array.
    Sa,
    /// Tensor-core dot-product units.
    Tc,
    /// Sparse tensor core (2:4 weights).
    Stc,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Ref, Engine::Sa, Engine::Tc, Engine::Stc];
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Ref => "ref",
            Engine::Sa => "sa",
            Engine::Tc => "tc",
            Engine::Stc => "stc",
        })
    }
}

impl FromStr for Engine {
    type Err = SparqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ref" => Ok(Engine::Ref),
            "sa" => Ok(Engine::Sa),
            "tc" => Ok(Engine::Tc),
            "stc" => Ok(Engine::Stc),
            other => Err(SparqError::Usage(format!("unknown engine '{other}'"))),
        }
    }
}

fn check_inner(a: &Matrix<u8>, b: &Matrix<i8>) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(SparqError::ShapeMismatch(format!(
            "inner dimensions differ: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Plain INT8 matmul with 64-bit accumulation.
pub fn exact_matmul(a: &Matrix<u8>, b: &Matrix<i8>) -> Result<Matrix<i64>> {
    check_inner(a, b)?;
    Ok(Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        a.row(i)
            .iter()
            .enumerate()
            .map(|(k, &x)| x as i64 * b.get(k, j) as i64)
            .sum()
    }))
}

/// Matmul by direct pair-wise evaluation: each row is encoded once and
/// every pair's contribution is summed without any dataflow modelling.
pub fn reference_matmul(a: &Matrix<u8>, b: &Matrix<i8>, mode: &Mode) -> Result<Matrix<i64>> {
    let params = match mode {
        Mode::Exact => return exact_matmul(a, b),
        Mode::Sparq(p) => p,
    };
    check_inner(a, b)?;
    let cols: Vec<Vec<(i8, i8)>> = (0..b.cols()).map(|j| weight_pairs(&b.col(j))).collect();
    let mut out = Matrix::from_fn(a.rows(), b.cols(), |_, _| 0i64);
    for i in 0..a.rows() {
        let lanes = encode_vector(a.row(i), params);
        for (j, col) in cols.iter().enumerate() {
            let y = lanes
                .iter()
                .zip(col)
                .map(|(p, &(we, wo))| pair_contribution(p, we, wo) as i64)
                .sum();
            out.set(i, j, y);
        }
    }
    Ok(out)
}

/// Runs `a x b` on the chosen engine. The STC engine requires `b` to
/// already satisfy the 2:4 pattern along its rows.
pub fn run_engine(engine: Engine, a: &Matrix<u8>, b: &Matrix<i8>, mode: &Mode) -> Result<Matrix<i32>> {
    match engine {
        Engine::Ref => {
            let wide = reference_matmul(a, b, mode)?;
            let mut data = Vec::with_capacity(wide.data().len());
            for &v in wide.data() {
                data.push(i32::try_from(v).map_err(|_| SparqError::AccumulatorOverflow)?);
            }
            Matrix::new(wide.rows(), wide.cols(), data)
        }
        Engine::Sa => sa_matmul(a, b, mode),
        Engine::Tc => tc_matmul(a, b, mode),
        Engine::Stc => stc_matmul(a, &SparseWeights::from_dense(b)?, mode),
    }
}

/// [`run_engine`] on quantized tensors, checking dtypes and ranks.
pub fn matmul(engine: Engine, a: &QuantTensor, b: &QuantTensor, mode: &Mode) -> Result<Matrix<i32>> {
    run_engine(engine, &a.to_u8_matrix()?, &b.to_i8_matrix()?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.to_string().parse::<Engine>().unwrap(), e);
        }
        assert!("gpu".parse::<Engine>().is_err());
    }

    #[test]
    fn exact_lanes_are_singletons() {
        let lanes = Mode::Exact.activation_lanes(&[3, 0, 255]);
        assert_eq!(lanes.len(), 3);
        assert_eq!(lanes[2].dequant(), (255, 0));
        assert_eq!(Mode::Exact.weight_lanes(&[1, -2]), vec![(1, 0), (-2, 0)]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Matrix::new(1, 3, vec![1u8, 2, 3]).unwrap();
        let b = Matrix::new(2, 1, vec![1i8, 2]).unwrap();
        for e in Engine::ALL {
            assert!(run_engine(e, &a, &b, &Mode::Exact).is_err());
        }
    }
}
