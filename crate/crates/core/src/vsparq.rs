//! Pairwise activation encoding.
//!
//! Activations are taken two at a time along the reduction axis. When one
//! member of a pair is zero the other member gets the pair's whole `2n`-bit
//! budget; otherwise both members are window-trimmed to `n` bits.

use serde::{Deserialize, Serialize};

use crate::bitquant::{dequant, trim, trim_wide, TrimConfig, TrimmedValue};
use crate::error::{Result, SparqError};

/// Which of the three pair cases applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairMode {
    /// Odd member is zero; even member uses the full budget.
    LeftFull,
    /// Even member is zero; odd member uses the full budget.
    RightFull,
    /// Both members trimmed independently.
    BothTrimmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairEncoding {
    pub mode: PairMode,
    pub left: TrimmedValue,
    pub right: TrimmedValue,
    /// Set when the pair runs as a single 8b-8b product.
    pub mux_ctrl: bool,
}

impl PairEncoding {
    /// A lone untrimmed activation occupying the even slot, as used by a
    /// conventional 8b-8b lane.
    pub fn exact(x: u8) -> Self {
        Self::full_left(TrimmedValue::exact(x))
    }

    fn full_left(v: TrimmedValue) -> Self {
        Self { mode: PairMode::LeftFull, left: v, right: TrimmedValue::default(), mux_ctrl: true }
    }

    fn full_right(v: TrimmedValue) -> Self {
        Self { mode: PairMode::RightFull, left: TrimmedValue::default(), right: v, mux_ctrl: true }
    }

    fn both(left: TrimmedValue, right: TrimmedValue) -> Self {
        Self { mode: PairMode::BothTrimmed, left, right, mux_ctrl: false }
    }

    /// Dequantized (even, odd) activations as seen by the multiplier.
    pub fn dequant(&self) -> (u8, u8) {
        match self.mode {
            PairMode::LeftFull => (dequant(self.left), 0),
            PairMode::RightFull => (0, dequant(self.right)),
            PairMode::BothTrimmed => (dequant(self.left), dequant(self.right)),
        }
    }
}

/// Trimming parameters shared by every engine.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparqParams {
    pub cfg: TrimConfig,
    pub rounding: bool,
    pub vsparq: bool,
}

impl SparqParams {
    pub fn new(cfg: TrimConfig, rounding: bool, vsparq: bool) -> Self {
        Self { cfg, rounding, vsparq }
    }

    /// Encodes one pair, honouring the `vsparq` switch.
    pub fn encode(&self, x_even: u8, x_odd: u8) -> PairEncoding {
        if self.vsparq {
            encode_pair(x_even, x_odd, &self.cfg, self.rounding)
        } else {
            encode_pair_trimmed(x_even, x_odd, &self.cfg, self.rounding)
        }
    }

    /// `5opt+R`, `3opt-R-vS`, ...
    pub fn label(&self) -> String {
        format!(
            "{}{}{}",
            self.cfg,
            if self.rounding { "+R" } else { "-R" },
            if self.vsparq { "" } else { "-vS" }
        )
    }
}

/// Encodes an activation pair. A (0, 0) pair is `LeftFull`.
pub fn encode_pair(x_even: u8, x_odd: u8, cfg: &TrimConfig, rounding: bool) -> PairEncoding {
    let n = cfg.bits();
    let wide = |x| trim_wide(x, 2 * n, n, rounding).expect("2n is a valid width for any TrimConfig");
    if x_odd == 0 {
        PairEncoding::full_left(wide(x_even))
    } else if x_even == 0 {
        PairEncoding::full_right(wide(x_odd))
    } else {
        PairEncoding::both(trim(x_even, cfg, rounding), trim(x_odd, cfg, rounding))
    }
}

/// Pair encoding with the zero-partner case disabled: both members are
/// always trimmed to `n` bits.
pub fn encode_pair_trimmed(x_even: u8, x_odd: u8, cfg: &TrimConfig, rounding: bool) -> PairEncoding {
    PairEncoding::both(trim(x_even, cfg, rounding), trim(x_odd, cfg, rounding))
}

/// The pair's contribution to a dot product.
pub fn pair_contribution(p: &PairEncoding, w_even: i8, w_odd: i8) -> i32 {
    let (a, b) = p.dequant();
    match p.mode {
        PairMode::LeftFull => a as i32 * w_even as i32,
        PairMode::RightFull => b as i32 * w_odd as i32,
        PairMode::BothTrimmed => a as i32 * w_even as i32 + b as i32 * w_odd as i32,
    }
}

/// Encodes a whole activation vector into pairs, zero-padding an odd tail.
pub fn encode_vector(x: &[u8], params: &SparqParams) -> Vec<PairEncoding> {
    x.chunks(2)
        .map(|c| params.encode(c[0], c.get(1).copied().unwrap_or(0)))
        .collect()
}

/// Splits a weight vector into (even, odd) pairs, zero-padding an odd tail.
pub fn weight_pairs(w: &[i8]) -> Vec<(i8, i8)> {
    w.chunks(2)
        .map(|c| (c[0], c.get(1).copied().unwrap_or(0)))
        .collect()
}

/// Reference dot product under the given trimming parameters.
pub fn dot_product(x: &[u8], w: &[i8], params: &SparqParams) -> Result<i64> {
    if x.len() != w.len() {
        return Err(SparqError::LengthMismatch { left: x.len(), right: w.len() });
    }
    Ok(encode_vector(x, params)
        .iter()
        .zip(weight_pairs(w))
        .map(|(p, (we, wo))| pair_contribution(p, we, wo) as i64)
        .sum())
}

/// Plain INT8 dot product.
pub fn exact_dot(x: &[u8], w: &[i8]) -> Result<i64> {
    if x.len() != w.len() {
        return Err(SparqError::LengthMismatch { left: x.len(), right: w.len() });
    }
    Ok(x.iter().zip(w).map(|(&a, &b)| a as i64 * b as i64).sum())
}
