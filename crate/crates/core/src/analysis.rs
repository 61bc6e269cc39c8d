//! Diagnostics: bit-toggle statistics, window probabilities, sparsity,
//! error metrics against the exact INT8 result, and metadata accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bitquant::TrimConfig;
use crate::datapath::{exact_matmul, run_engine, Engine, Mode};
use crate::error::{Result, SparqError};
use crate::tensorio::Matrix;

/// Per-bit toggle frequencies over the nonzero elements of a tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToggleStats {
    /// Index `b` holds the rate of bit `b` (LSB = 0).
    pub rates: [f64; 8],
    pub nonzero: usize,
    /// No nonzero element was seen; all rates are zero.
    pub empty: bool,
}

pub fn bit_toggle_stats(x: &[u8]) -> ToggleStats {
    let mut counts = [0usize; 8];
    let mut nonzero = 0usize;
    for &v in x.iter().filter(|&&v| v != 0) {
        nonzero += 1;
        for (b, c) in counts.iter_mut().enumerate() {
            *c += ((v >> b) & 1) as usize;
        }
    }
    let rates = if nonzero == 0 { [0.0; 8] } else { counts.map(|c| c as f64 / nonzero as f64) };
    ToggleStats { rates, nonzero, empty: nonzero == 0 }
}

/// Probability that at least one bit in `window` is set, treating bits as
/// independent: `1 - prod(1 - rate_b)`.
pub fn msb_window_probability(rates: &[f64; 8], window: &[u32]) -> f64 {
    1.0 - window.iter().map(|&b| 1.0 - rates[b as usize]).product::<f64>()
}

/// Measured fraction of nonzero elements with any bit of `window` set.
/// Unlike [`msb_window_probability`] this makes no independence assumption.
pub fn empirical_window_probability(x: &[u8], window: &[u32]) -> f64 {
    let mask = window.iter().fold(0u8, |m, &b| m | (1 << b));
    let nonzero = x.iter().filter(|&&v| v != 0).count();
    if nonzero == 0 {
        return 0.0;
    }
    x.iter().filter(|&&v| v & mask != 0).count() as f64 / nonzero as f64
}

/// Fraction of zero elements.
pub fn activation_sparsity(x: &[u8]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|&&v| v == 0).count() as f64 / x.len() as f64
}

/// Fraction of adjacent pairs with at least one zero, pairing within rows
/// of length `row_len` (an odd row's last element pairs with padding).
pub fn pair_zero_fraction(x: &[u8], row_len: usize) -> f64 {
    if x.is_empty() || row_len == 0 {
        return 0.0;
    }
    let (mut pairs, mut hits) = (0usize, 0usize);
    for row in x.chunks(row_len) {
        for p in row.chunks(2) {
            pairs += 1;
            hits += (p[0] == 0 || p.get(1).is_none_or(|&v| v == 0)) as usize;
        }
    }
    hits as f64 / pairs as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mse: f64,
    /// `+inf` when the approximation is exact, `-inf` when the signal is
    /// zero but the approximation is not.
    #[serde(with = "float_or_inf")]
    pub sqnr_db: f64,
}

pub fn error_metrics(exact: &[i64], approx: &[i64]) -> Result<ErrorMetrics> {
    if exact.len() != approx.len() {
        return Err(SparqError::ShapeMismatch(format!(
            "{} exact values vs {} approximate",
            exact.len(),
            approx.len()
        )));
    }
    if exact.is_empty() {
        return Ok(ErrorMetrics { mse: 0.0, sqnr_db: f64::INFINITY });
    }
    let n = exact.len() as f64;
    let noise: f64 = exact.iter().zip(approx).map(|(&e, &a)| ((e - a) as f64).powi(2)).sum();
    let signal: f64 = exact.iter().map(|&e| (e as f64).powi(2)).sum();
    let mse = noise / n;
    let sqnr_db = if noise == 0.0 {
        f64::INFINITY
    } else if signal == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (signal / noise).log10()
    };
    Ok(ErrorMetrics { mse, sqnr_db })
}

/// ShiftCtrl bits plus one MuxCtrl bit when pair encoding is on.
pub fn metadata_overhead(cfg: &TrimConfig, vsparq: bool) -> u32 {
    cfg.shift_ctrl_bits() + vsparq as u32
}

/// Half-Gaussian activations with extra zeros standing in for ReLU sparsity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticActivations {
    pub sigma: f64,
    /// Probability that an element is forced to zero.
    pub zero_fraction: f64,
    pub seed: u64,
}

impl SyntheticActivations {
    pub fn new(sigma: f64, zero_fraction: f64, seed: u64) -> Self {
        Self { sigma, zero_fraction, seed }
    }

    pub fn generate(&self, n: usize) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.sigma).expect("sigma must be finite and positive");
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < self.zero_fraction {
                    0
                } else {
                    (normal.sample(&mut rng).abs() + 0.5).floor().min(255.0) as u8
                }
            })
            .collect()
    }

    pub fn matrix(&self, rows: usize, cols: usize) -> Matrix<u8> {
        Matrix::new(rows, cols, self.generate(rows * cols)).expect("generated length matches")
    }
}

/// Gaussian weights rounded and clamped to the symmetric signed range.
pub fn synthetic_weights(rows: usize, cols: usize, sigma: f64, seed: u64) -> Matrix<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and positive");
    let data = (0..rows * cols)
        .map(|_| (normal.sample(&mut rng) + 0.5).floor().clamp(-127.0, 127.0) as i8)
        .collect();
    Matrix::new(rows, cols, data).expect("generated length matches")
}

/// Everything measured for one simulated matmul. Serialises flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: String,
    pub engine: String,
    pub rounding: bool,
    pub vsparq: bool,
    pub seed: Option<u64>,
    pub outputs: usize,
    pub mse: f64,
    #[serde(with = "float_or_inf")]
    pub sqnr_db: f64,
    pub activation_sparsity: f64,
    pub pair_zero_fraction: f64,
    pub toggle_rates: [f64; 8],
    pub metadata_bits_per_activation: u32,
}

impl SimReport {
    /// Builds the report for `approx`, an engine's output on `a x b`.
    pub fn measure(
        a: &Matrix<u8>,
        b: &Matrix<i8>,
        approx: &Matrix<i32>,
        engine: Engine,
        mode: &Mode,
        seed: Option<u64>,
    ) -> Result<Self> {
        let exact = exact_matmul(a, b)?;
        let approx: Vec<i64> = approx.data().iter().map(|&v| v as i64).collect();
        let metrics = error_metrics(exact.data(), &approx)?;
        let (config, rounding, vsparq, metadata) = match mode {
            Mode::Exact => ("int8".to_string(), false, false, 0),
            Mode::Sparq(p) => (p.cfg.to_string(), p.rounding, p.vsparq, metadata_overhead(&p.cfg, p.vsparq)),
        };
        Ok(Self {
            config,
            engine: engine.to_string(),
            rounding,
            vsparq,
            seed,
            outputs: approx.len(),
            mse: metrics.mse,
            sqnr_db: metrics.sqnr_db,
            activation_sparsity: activation_sparsity(a.data()),
            pair_zero_fraction: pair_zero_fraction(a.data(), a.cols()),
            toggle_rates: bit_toggle_stats(a.data()).rates,
            metadata_bits_per_activation: metadata,
        })
    }
}

/// Runs one engine and measures it against the exact INT8 result.
pub fn simulate(
    a: &Matrix<u8>,
    b: &Matrix<i8>,
    engine: Engine,
    mode: &Mode,
    seed: Option<u64>,
) -> Result<(Matrix<i32>, SimReport)> {
    let out = run_engine(engine, a, b, mode)?;
    let report = SimReport::measure(a, b, &out, engine, mode, seed)?;
    Ok((out, report))
}

/// JSON has no infinities; they travel as the strings `"inf"` / `"-inf"`.
pub mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid float '{t}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggle_examples() {
        let s = bit_toggle_stats(&[1, 2, 3, 0]);
        assert_eq!(s.nonzero, 3);
        assert!((s.rates[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.rates[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(s.rates[2..].iter().all(|&r| r == 0.0));
        assert!(!s.empty);

        let z = bit_toggle_stats(&[0, 0]);
        assert!(z.empty && z.rates == [0.0; 8]);
        assert_eq!(bit_toggle_stats(&[255; 5]).rates, [1.0; 8]);
    }

    #[test]
    fn window_probability_examples() {
        let mut rates = [0.0; 8];
        rates[7] = 0.005;
        rates[6] = 0.092;
        rates[5] = 0.338;
        rates[4] = 0.448;
        let p = msb_window_probability(&rates, &[7, 6, 5, 4]);
        assert!((p - 0.67).abs() <= 0.005, "{p}");
        rates[5] = 1.0;
        assert_eq!(msb_window_probability(&rates, &[7, 6, 5, 4]), 1.0);
        assert_eq!(msb_window_probability(&[0.0; 8], &[7, 6, 5, 4]), 0.0);
    }

    #[test]
    fn empirical_probability() {
        assert_eq!(empirical_window_probability(&[0, 16, 1, 255], &[7, 6, 5, 4]), 2.0 / 3.0);
        assert_eq!(empirical_window_probability(&[0, 0], &[7]), 0.0);
    }

    #[test]
    fn error_metric_examples() {
        let m = error_metrics(&[10], &[8]).unwrap();
        assert_eq!(m.mse, 4.0);
        assert!((m.sqnr_db - 10.0 * 25f64.log10()).abs() < 1e-12);
        assert!((m.sqnr_db - 13.98).abs() < 0.005);
        assert_eq!(error_metrics(&[1, -2], &[1, -2]).unwrap().sqnr_db, f64::INFINITY);
        let degenerate = error_metrics(&[0, 0], &[3, 0]).unwrap();
        assert_eq!(degenerate.sqnr_db, f64::NEG_INFINITY);
        assert!(error_metrics(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn metadata_examples() {
        assert_eq!(metadata_overhead(&TrimConfig::three_opt(), true), 3);
        assert_eq!(metadata_overhead(&TrimConfig::five_opt(), true), 4);
        assert_eq!(metadata_overhead(&TrimConfig::two_opt(), false), 1);
        assert_eq!(metadata_overhead(&TrimConfig::six_opt(), true), 4);
        assert_eq!(metadata_overhead(&TrimConfig::seven_opt(), false), 3);
    }

    #[test]
    fn sparsity_measures() {
        assert_eq!(activation_sparsity(&[0, 1, 0, 2]), 0.5);
        assert_eq!(pair_zero_fraction(&[0, 1, 3, 2], 4), 0.5);
        // Rows of three: (0,1),(5,pad) and (1,1),(0,pad).
        assert_eq!(pair_zero_fraction(&[0, 1, 5, 1, 1, 0], 3), 0.75);
    }

    #[test]
    fn synthetic_generators_are_seeded() {
        let g = SyntheticActivations::new(40.0, 0.5, 7);
        let a = g.generate(10_000);
        assert_eq!(a, g.generate(10_000));
        let zeros = activation_sparsity(&a);
        assert!((0.45..0.6).contains(&zeros), "{zeros}");
        assert_ne!(a, SyntheticActivations::new(40.0, 0.5, 8).generate(10_000));
        let w = synthetic_weights(8, 8, 30.0, 1);
        assert!(w.data().iter().all(|&v| v != i8::MIN));
    }

    #[test]
    fn report_json_handles_infinity() {
        let a = Matrix::new(1, 2, vec![0u8, 9]).unwrap();
        let b = Matrix::new(2, 1, vec![3i8, 4]).unwrap();
        let mode = Mode::sparq(TrimConfig::five_opt(), true, true);
        let (out, report) = simulate(&a, &b, Engine::Sa, &mode, Some(3)).unwrap();
        assert_eq!(out.data(), &[36]);
        assert_eq!(report.sqnr_db, f64::INFINITY);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"sqnr_db\":\"inf\""));
        let back: SimReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
