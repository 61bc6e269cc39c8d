//! Dynamic bit-window trimming of 8-bit activations.
//!
//! An 8-bit unsigned value is reduced to an `n`-bit mantissa by locating its
//! leading toggled bit and keeping the `n` consecutive bits starting there.
//! The window may only sit at a fixed set of placements; the chosen placement
//! doubles as a power-of-two scale (the shift-left needed to reconstruct).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SparqError};

/// Width of the activations being trimmed.
pub const ACT_BITS: u32 = 8;

/// Window bit-width plus the allowed window LSB positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrimConfig {
    bits: u32,
    placements: Vec<u8>,
}

impl TrimConfig {
    /// Builds a configuration, checking that placements are strictly
    /// decreasing, span `[8 - bits, 0]` and fit inside the byte.
    pub fn new(bits: u32, placements: Vec<u8>) -> Result<Self> {
        if !(2..=4).contains(&bits) {
            return Err(SparqError::InvalidConfig(format!(
                "window width {bits} outside 2..=4"
            )));
        }
        if placements.is_empty() {
            return Err(SparqError::InvalidConfig("no placements".into()));
        }
        if placements.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SparqError::InvalidConfig(format!(
                "placements {placements:?} not strictly decreasing"
            )));
        }
        let top = (ACT_BITS - bits) as u8;
        if placements[0] != top {
            return Err(SparqError::InvalidConfig(format!(
                "highest placement must be {top} so bit 7 is reachable, got {}",
                placements[0]
            )));
        }
        if *placements.last().unwrap() != 0 {
            return Err(SparqError::InvalidConfig(
                "lowest placement must be 0".into(),
            ));
        }
        Ok(Self { bits, placements })
    }

    pub fn five_opt() -> Self {
        Self { bits: 4, placements: vec![4, 3, 2, 1, 0] }
    }

    /// Windows [7:4], [5:2], [3:0].
    pub fn three_opt() -> Self {
        Self { bits: 4, placements: vec![4, 2, 0] }
    }

    /// Windows [7:4] or [3:0].
    pub fn two_opt() -> Self {
        Self { bits: 4, placements: vec![4, 0] }
    }

    /// 3-bit window over all six placements.
    pub fn six_opt() -> Self {
        Self { bits: 3, placements: vec![5, 4, 3, 2, 1, 0] }
    }

    /// 2-bit window over all seven placements.
    pub fn seven_opt() -> Self {
        Self { bits: 2, placements: vec![6, 5, 4, 3, 2, 1, 0] }
    }

    /// All five named configurations, 4-bit ones first.
    pub fn named() -> [TrimConfig; 5] {
        [
            Self::five_opt(),
            Self::three_opt(),
            Self::two_opt(),
            Self::six_opt(),
            Self::seven_opt(),
        ]
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Window LSB positions, highest first.
    pub fn placements(&self) -> &[u8] {
        &self.placements
    }

    /// Bits needed to identify the chosen placement (the ShiftCtrl field).
    pub fn shift_ctrl_bits(&self) -> u32 {
        ceil_log2(self.placements.len())
    }

    /// Short name such as `5opt`, or `None` for a custom table.
    pub fn name(&self) -> Option<&'static str> {
        match (self.bits, self.placements.as_slice()) {
            (4, [4, 3, 2, 1, 0]) => Some("5opt"),
            (4, [4, 2, 0]) => Some("3opt"),
            (4, [4, 0]) => Some("2opt"),
            (3, [5, 4, 3, 2, 1, 0]) => Some("6opt"),
            (2, [6, 5, 4, 3, 2, 1, 0]) => Some("7opt"),
            _ => None,
        }
    }
}

impl fmt::Display for TrimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => f.write_str(name),
            None => write!(f, "n{}{:?}", self.bits, self.placements),
        }
    }
}

impl FromStr for TrimConfig {
    type Err = SparqError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "5opt" => Ok(Self::five_opt()),
            "3opt" => Ok(Self::three_opt()),
            "2opt" => Ok(Self::two_opt()),
            "6opt" => Ok(Self::six_opt()),
            "7opt" => Ok(Self::seven_opt()),
            other => Err(SparqError::InvalidConfig(format!(
                "unknown configuration '{other}' (expected 5opt, 3opt, 2opt, 6opt or 7opt)"
            ))),
        }
    }
}

pub(crate) fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// One trimmed activation: `mantissa << shift` approximates the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TrimmedValue {
    pub mantissa: u8,
    pub shift: u8,
    /// Rounding overflowed the window and the mantissa was clamped.
    pub saturated: bool,
}

impl TrimmedValue {
    /// The untrimmed representation of `x` (full 8-bit window).
    pub fn exact(x: u8) -> Self {
        Self { mantissa: x, shift: 0, saturated: false }
    }

    pub fn dequant(self) -> u8 {
        dequant(self)
    }
}

/// Position of the leading toggled bit, or `None` for zero.
#[inline]
fn leading_bit(x: u8) -> Option<u32> {
    (x != 0).then(|| 7 - x.leading_zeros())
}

/// Core window search shared by `select_window` and `trim_wide`.
/// `placements` is highest first; returns the lowest one whose window
/// still holds the leading toggled bit.
#[inline]
fn lowest_covering(x: u8, bits: u32, placements: &[u8]) -> u8 {
    let lead = match leading_bit(x) {
        Some(b) => b,
        None => return *placements.last().unwrap(),
    };
    placements
        .iter()
        .rev()
        .copied()
        .find(|&p| lead < p as u32 + bits)
        .unwrap_or(placements[0])
}

#[inline]
fn trim_with(x: u8, bits: u32, placements: &[u8], rounding: bool) -> TrimmedValue {
    let shift = lowest_covering(x, bits, placements);
    let mut mantissa = (x as u16) >> shift;
    if rounding && shift > 0 && (x >> (shift - 1)) & 1 == 1 {
        mantissa += 1;
    }
    let limit = 1u16 << bits;
    let saturated = mantissa >= limit;
    if saturated {
        mantissa = limit - 1;
    }
    TrimmedValue { mantissa: mantissa as u8, shift, saturated }
}

/// Window LSB position chosen for `x`: the lowest placement whose window
/// contains the leading toggled bit. Zero maps to placement 0.
pub fn select_window(x: u8, cfg: &TrimConfig) -> u8 {
    lowest_covering(x, cfg.bits, &cfg.placements)
}

/// Trims `x` to the configuration's window, optionally rounding half-up on
/// the bits below the window. Overflow from rounding clamps the mantissa.
pub fn trim(x: u8, cfg: &TrimConfig, rounding: bool) -> TrimmedValue {
    trim_with(x, cfg.bits, &cfg.placements, rounding)
}

/// Reconstructs the trimmed value, `mantissa << shift`.
pub fn dequant(t: TrimmedValue) -> u8 {
    let v = (t.mantissa as u16) << t.shift;
    debug_assert!(v <= u8::MAX as u16, "trimmed value {t:?} exceeds a byte");
    v as u8
}

/// Trims with a window of `width = 2 * cfg_bits` bits over every placement
/// `[8 - width, ..., 0]`. Used when a zero partner donates its budget.
pub fn trim_wide(x: u8, width: u32, cfg_bits: u32, rounding: bool) -> Result<TrimmedValue> {
    if width != 2 * cfg_bits || !(4..=ACT_BITS).contains(&width) {
        return Err(SparqError::InvalidWidth { width, bits: cfg_bits });
    }
    if width == ACT_BITS {
        return Ok(TrimmedValue::exact(x));
    }
    let placements: Vec<u8> = (0..=(ACT_BITS - width) as u8).rev().collect();
    Ok(trim_with(x, width, &placements, rounding))
}
