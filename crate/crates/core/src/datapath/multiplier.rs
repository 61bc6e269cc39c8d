use crate::bitquant::{TrimConfig, ACT_BITS};
use crate::error::{Result, SparqError};
use crate::vsparq::{PairEncoding, PairMode};

/// Weight routing of the dual multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MuxSel {
    /// Only the first product contributes.
    First,
    /// Only the second product contributes.
    Second,
    Both,
}

/// Operands of one dual 4b-8b multiply: `x1 << opt1 * w1 + x2 << opt2 * w2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DualMultInput {
    pub x1: u8,
    pub x2: u8,
    pub w1: i8,
    pub w2: i8,
    pub opt1: u8,
    pub opt2: u8,
    pub mux: MuxSel,
}

impl DualMultInput {
    /// Splits an 8-bit activation into nibbles so both multipliers together
    /// compute the full product `x * w`.
    pub fn recombination(x: u8, w: i8) -> Self {
        Self { x1: x >> 4, x2: x & 0xF, w1: w, w2: w, opt1: 4, opt2: 0, mux: MuxSel::Both }
    }

    /// Maps one encoded pair and its weights onto the multiplier. Full-budget
    /// members are split into high and low `n`-bit halves sharing one weight.
    pub fn from_pair(p: &PairEncoding, w_even: i8, w_odd: i8, bits: u32) -> Self {
        let split = |m: u8, shift: u8, w: i8| {
            let lo_mask = ((1u16 << bits) - 1) as u8;
            Self {
                x1: m >> bits,
                x2: m & lo_mask,
                w1: w,
                w2: w,
                opt1: shift + bits as u8,
                opt2: shift,
                mux: MuxSel::Both,
            }
        };
        match p.mode {
            PairMode::LeftFull => split(p.left.mantissa, p.left.shift, w_even),
            PairMode::RightFull => split(p.right.mantissa, p.right.shift, w_odd),
            PairMode::BothTrimmed => Self {
                x1: p.left.mantissa,
                x2: p.right.mantissa,
                w1: w_even,
                w2: w_odd,
                opt1: p.left.shift,
                opt2: p.right.shift,
                mux: MuxSel::Both,
            },
        }
    }
}

/// Two `n`-bit x 8-bit multipliers with dynamic shift-left units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multiplier {
    bits: u32,
    shifts: Vec<u8>,
}

impl Multiplier {
    pub fn from_config(cfg: &TrimConfig) -> Self {
        Self { bits: cfg.bits(), shifts: cfg.placements().to_vec() }
    }

    /// Builds a multiplier from an arbitrary shifter table; only checks that
    /// every shift keeps the mantissa inside a byte.
    pub fn with_shifts(bits: u32, shifts: Vec<u8>) -> Result<Self> {
        if !(1..=ACT_BITS).contains(&bits) {
            return Err(SparqError::InvalidConfig(format!("multiplier width {bits}")));
        }
        if let Some(&s) = shifts.iter().find(|&&s| s as u32 + bits > ACT_BITS) {
            return Err(SparqError::InvalidShift { shift: s, table: shifts });
        }
        Ok(Self { bits, shifts })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn shifts(&self) -> &[u8] {
        &self.shifts
    }

    fn term(&self, x: u8, w: i8, opt: u8) -> Result<i32> {
        if (x as u32) >> self.bits != 0 {
            return Err(SparqError::MantissaRange { mantissa: x, bits: self.bits });
        }
        if !self.shifts.contains(&opt) {
            return Err(SparqError::InvalidShift { shift: opt, table: self.shifts.clone() });
        }
        Ok((x as i32 * w as i32) << opt)
    }

    pub fn multiply(&self, input: &DualMultInput) -> Result<i32> {
        let first = || self.term(input.x1, input.w1, input.opt1);
        let second = || self.term(input.x2, input.w2, input.opt2);
        match input.mux {
            MuxSel::First => first(),
            MuxSel::Second => second(),
            MuxSel::Both => Ok(first()? + second()?),
        }
    }

    /// Evaluates one lane: an encoded pair against its weight pair.
    pub fn lane(&self, p: &PairEncoding, w: (i8, i8)) -> Result<i32> {
        self.multiply(&DualMultInput::from_pair(p, w.0, w.1, self.bits))
    }
}

/// Evaluates the dual multiplier with shift units built from `cfg`.
pub fn dual_multiply(input: &DualMultInput, cfg: &TrimConfig) -> Result<i32> {
    Multiplier::from_config(cfg).multiply(input)
}

/// 32-bit partial-sum register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Accumulator {
    pub value: i32,
}

impl Accumulator {
    pub fn new(value: i32) -> Self {
        Self { value }
    }

    pub fn add(&mut self, v: i32) -> Result<()> {
        self.value = self.value.checked_add(v).ok_or(SparqError::AccumulatorOverflow)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsparq::{encode_pair, encode_pair_trimmed, pair_contribution};

    #[test]
    fn recombination_of_171() {
        let input = DualMultInput::recombination(171, -3);
        assert_eq!((input.x1, input.x2), (10, 11));
        for cfg in [TrimConfig::five_opt(), TrimConfig::three_opt(), TrimConfig::two_opt()] {
            assert_eq!(dual_multiply(&input, &cfg).unwrap(), -513);
        }
    }

    #[test]
    fn single_term_and_magnitude() {
        let single = DualMultInput { x1: 13, x2: 9, w1: 5, w2: 100, opt1: 2, opt2: 0, mux: MuxSel::First };
        assert_eq!(dual_multiply(&single, &TrimConfig::five_opt()).unwrap(), 260);
        let second = DualMultInput { mux: MuxSel::Second, ..single };
        assert_eq!(dual_multiply(&second, &TrimConfig::five_opt()).unwrap(), 900);

        let worst = DualMultInput { x1: 15, x2: 15, w1: -128, w2: -128, opt1: 4, opt2: 4, mux: MuxSel::Both };
        assert_eq!(dual_multiply(&worst, &TrimConfig::two_opt()).unwrap(), -61440);
    }

    #[test]
    fn rejects_shift_outside_table() {
        let input = DualMultInput { x1: 1, x2: 0, w1: 1, w2: 0, opt1: 3, opt2: 0, mux: MuxSel::Both };
        assert!(matches!(
            dual_multiply(&input, &TrimConfig::three_opt()),
            Err(SparqError::InvalidShift { shift: 3, .. })
        ));
        // The unused term is not inspected in single-weight modes.
        let masked = DualMultInput { mux: MuxSel::Second, ..input };
        assert_eq!(dual_multiply(&masked, &TrimConfig::three_opt()).unwrap(), 0);
    }

    #[test]
    fn rejects_wide_mantissa() {
        let input = DualMultInput { x1: 16, x2: 0, w1: 1, w2: 0, opt1: 0, opt2: 0, mux: MuxSel::First };
        assert!(matches!(dual_multiply(&input, &TrimConfig::five_opt()), Err(SparqError::MantissaRange { .. })));
        assert!(Multiplier::with_shifts(4, vec![5]).is_err());
    }

    #[test]
    fn lanes_match_pair_contribution_exhaustively_on_a_grid() {
        let weights = [-128i8, -77, -1, 0, 1, 64, 127];
        for cfg in TrimConfig::named() {
            let m = Multiplier::from_config(&cfg);
            for a in (0..=255u8).step_by(3) {
                for b in [0u8, 1, 17, 100, 254, 255] {
                    for rounding in [false, true] {
                        for p in [encode_pair(a, b, &cfg, rounding), encode_pair_trimmed(a, b, &cfg, rounding)] {
                            for &we in &weights {
                                for &wo in &weights {
                                    assert_eq!(m.lane(&p, (we, wo)).unwrap(), pair_contribution(&p, we, wo));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn accumulator_overflow_is_reported() {
        let mut acc = Accumulator::new(i32::MAX - 1);
        acc.add(1).unwrap();
        assert!(matches!(acc.add(1), Err(SparqError::AccumulatorOverflow)));
    }
}
