//! Exhaustive built-in checks run by `sparq selftest`.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::analysis::{synthetic_weights, SyntheticActivations};
use crate::bitquant::{dequant, trim, TrimConfig};
use crate::datapath::{
    reference_matmul, sa_matmul, stc_matmul, tc_matmul, DualMultInput, Mode, Multiplier, SparseWeights,
};
use crate::error::Result;
use crate::tensorio::Matrix;

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Replaces the multiplier's shifter table in the recombination suite.
    pub shifter_override: Option<Vec<u8>>,
    /// Seeded matmuls per configuration in the engine suite.
    pub engine_cases: usize,
}

impl SelftestOptions {
    pub fn new() -> Self {
        Self { shifter_override: None, engine_cases: 20 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    cases: usize,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self { cases: 0, failures: 0, first: None }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, name: &'static str, start: Instant) -> SuiteResult {
        SuiteResult { name, cases: self.cases, failures: self.failures, first_failure: self.first, elapsed: start.elapsed() }
    }
}

/// Candidate approximation of `x` for every window that holds its leading
/// bit, keeping the lowest such window. Uses division instead of shifts.
fn window_oracle(x: u8, cfg: &TrimConfig, rounding: bool) -> (u32, u32, bool) {
    let n = cfg.bits();
    let mut best = None;
    for &p in cfg.placements() {
        let scale = 1u32 << p;
        if (x as u32) < (1u32 << n) * scale {
            best = Some(p as u32);
        }
    }
    let p = best.expect("highest placement covers every byte");
    let scale = 1u32 << p;
    let mut m = if rounding { (x as u32 + scale / 2) / scale } else { x as u32 / scale };
    let saturated = m >= 1 << n;
    if saturated {
        m = (1 << n) - 1;
    }
    (m * scale, p, saturated)
}

/// Trim results against the window oracle and the error bounds, for all
/// named configurations and both rounding modes.
pub fn trim_bounds_suite() -> SuiteResult {
    let start = Instant::now();
    let mut t = Tally::new();
    for cfg in TrimConfig::named() {
        for rounding in [false, true] {
            for x in 0..=255u8 {
                let got = trim(x, &cfg, rounding);
                let approx = dequant(got) as i32;
                let (want, shift, sat) = window_oracle(x, &cfg, rounding);
                let err = x as i32 - approx;
                let step = 1i32 << got.shift;
                let bounded = if !rounding || got.saturated {
                    (0..step).contains(&err)
                } else {
                    err.abs() <= step / 2
                };
                t.check(
                    approx as u32 == want && got.shift as u32 == shift && got.saturated == sat && bounded,
                    || format!("{cfg} rounding={rounding} x={x}: got {got:?}, oracle ({want}, {shift}, {sat})"),
                );
            }
        }
    }
    t.finish("trim-bounds", start)
}

/// Nibble recombination reproduces every 8b x 8b product.
pub fn recombination_suite(multiplier: &Multiplier) -> SuiteResult {
    let start = Instant::now();
    let mut t = Tally::new();
    for x in 0..=255u8 {
        for w in i8::MIN..=i8::MAX {
            let got = multiplier.multiply(&DualMultInput::recombination(x, w));
            let want = x as i32 * w as i32;
            t.check(matches!(got, Ok(v) if v == want), || format!("x={x} w={w}: {got:?}, want {want}"));
        }
    }
    t.finish("recombination", start)
}

/// Systolic array, tensor core and reference agree bit for bit; the sparse
/// core on pruned weights matches its dense exact counterpart.
pub fn engine_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut t = Tally::new();
    for (ci, cfg) in TrimConfig::named().into_iter().enumerate() {
        for case in 0..cases {
            let s = seed ^ ((ci as u64) << 32 | case as u64);
            let (m, k, n) = (1 + (s % 16) as usize, 4 * (1 + (s / 16 % 4) as usize), 1 + (s / 64 % 16) as usize);
            let a = SyntheticActivations::new(40.0, 0.5, s).matrix(m, k);
            let b = synthetic_weights(k, n, 40.0, s.wrapping_add(1));
            let mode = Mode::sparq(cfg.clone(), case % 2 == 0, case % 3 != 0);
            let reference = reference_matmul(&a, &b, &mode)?.map(|v| v as i32);
            let sa = sa_matmul(&a, &b, &mode)?;
            let tc = tc_matmul(&a, &b, &mode)?;
            t.check(sa == reference && tc == reference, || format!("{} case {case}: engines disagree", mode.label()));

            let (_, pruned) = crate::datapath::make_24_mask(b.data(), &[k, n], 0)?;
            let pruned = Matrix::new(k, n, pruned)?;
            let sparse = SparseWeights::from_dense(&pruned)?;
            let stc = stc_matmul(&a, &sparse, &Mode::Exact)?;
            let dense = reference_matmul(&a, &pruned, &Mode::Exact)?.map(|v| v as i32);
            t.check(stc == dense, || format!("{} case {case}: sparse core differs from dense", mode.label()));
        }
    }
    Ok(t.finish("engine-equivalence", start))
}

pub fn run(opts: &SelftestOptions) -> Result<Vec<SuiteResult>> {
    let multiplier = match &opts.shifter_override {
        Some(table) => Multiplier::with_shifts(4, table.clone())?,
        None => Multiplier::from_config(&TrimConfig::two_opt()),
    };
    Ok(vec![trim_bounds_suite(), recombination_suite(&multiplier), engine_suite(opts.engine_cases, 0x5EED)?])
}
