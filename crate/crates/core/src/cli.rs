//! Command-line front end for the `sparq` binary.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    activation_sparsity, bit_toggle_stats, empirical_window_probability, msb_window_probability, pair_zero_fraction,
    synthetic_weights, SimReport, SyntheticActivations,
};
use crate::bitquant::TrimConfig;
use crate::datapath::{make_24_mask, run_engine, stc_matmul, Engine, Mode, SparseWeights};
use crate::error::{Result, SparqError};
use crate::selftest::{self, SelftestOptions};
use crate::tensorio::{
    dequantize_output, kernels_to_matrix, lower_conv, quantize_activations, quantize_weights_per_kernel, read_npy,
    ManifestEntry, Matrix, NpyArray, NpyData, QuantData, QuantTensor, Role, Scale, TensorManifest,
};

#[derive(Debug, Parser)]
#[command(name = "sparq", version, about = "Bit-window activation trimming and datapath simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantize every tensor in a manifest to 8-bit codes.
    Quantize(QuantizeArgs),
    /// Run one matrix multiply on a simulated engine.
    Matmul(MatmulArgs),
    /// Compare several trimming configurations on the same inputs.
    Sweep(SweepArgs),
    /// Bit statistics of an activation tensor.
    Analyze(AnalyzeArgs),
    /// Run the built-in exhaustive checks.
    Selftest(SelftestArgs),
}

/// Trimming switches shared by `matmul`.
#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    /// 5opt, 3opt, 2opt, 6opt, 7opt, or a custom `n<bits>:<p>,<p>,...`.
    #[arg(long, default_value = "5opt", value_parser = parse_config)]
    pub config: TrimConfig,
    #[arg(long, overrides_with = "no_rounding")]
    pub rounding: bool,
    #[arg(long, overrides_with = "rounding")]
    pub no_rounding: bool,
    #[arg(long, overrides_with = "no_vsparq")]
    pub vsparq: bool,
    #[arg(long, overrides_with = "vsparq")]
    pub no_vsparq: bool,
    /// Disable trimming and run plain INT8.
    #[arg(long)]
    pub no_trim: bool,
}

impl ModeArgs {
    pub fn mode(&self) -> Mode {
        if self.no_trim {
            Mode::Exact
        } else {
            Mode::sparq(self.config.clone(), !self.no_rounding, !self.no_vsparq)
        }
    }
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the `.npy` codes and the updated manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatmulArgs {
    /// Activation matrix (`u1`, M x K).
    #[arg(long, requires = "b", conflicts_with_all = ["manifest", "synthetic"])]
    pub a: Option<PathBuf>,
    /// Weight matrix (`i1`, K x N).
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    #[arg(long, requires = "layer", conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub layer: Option<String>,
    /// Seeded random inputs, `MxKxN`.
    #[arg(long, value_parser = parse_dims)]
    pub synthetic: Option<[usize; 3]>,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, default_value = "sa")]
    pub engine: Engine,
    /// 2:4 keep-mask for the weights (`u1`, K x N, nonzero = keep).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// INT32 result (`i4` `.npy`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dequantized result (`f4` `.npy`); manifest inputs only.
    #[arg(long, requires = "manifest")]
    pub fp_out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated labels such as `5opt+R`, `3opt-R-vS`, `int8`.
    #[arg(long, value_delimiter = ',')]
    pub configs: Vec<String>,
    /// Every named configuration with and without rounding and pair encoding.
    #[arg(long, conflicts_with = "configs")]
    pub grid: bool,
    #[arg(long, default_value = "ref")]
    pub engine: Engine,
    #[arg(long, requires = "b")]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub rows: usize,
    #[arg(long, default_value_t = 256)]
    pub inner: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    #[arg(long, default_value_t = 40.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 40.0)]
    pub weight_sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub zero_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Activation tensor (`u1`, or `f4` quantized against its own maximum).
    #[arg(long)]
    pub input: PathBuf,
    /// Bit window as `hi:lo`.
    #[arg(long, default_value = "7:4", value_parser = parse_window)]
    pub window: (u32, u32),
    /// Pairing row length; defaults to the last dimension.
    #[arg(long)]
    pub row_len: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Seeded matmuls per configuration in the engine suite.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Replace the recombination shifter table (fault injection).
    #[arg(long, value_delimiter = ',', hide = true)]
    pub shifter_table: Option<Vec<u8>>,
}

pub fn parse_config(s: &str) -> Result<TrimConfig> {
    let Some(rest) = s.strip_prefix('n') else { return s.parse() };
    let (bits, places) = rest
        .split_once(':')
        .ok_or_else(|| SparqError::InvalidConfig(format!("expected n<bits>:<placements>, got '{s}'")))?;
    let bits = bits.parse().map_err(|_| SparqError::InvalidConfig(format!("bad bit count in '{s}'")))?;
    let placements = places
        .split(',')
        .map(|p| p.trim().parse::<u8>().map_err(|_| SparqError::InvalidConfig(format!("bad placement '{p}'"))))
        .collect::<Result<Vec<_>>>()?;
    TrimConfig::new(bits, placements)
}

/// Parses a sweep label: a configuration name followed by any of `+R`, `-R`,
/// `+vS`, `-vS` (both default on), or `int8` for the untrimmed baseline.
pub fn parse_label(s: &str) -> Result<Mode> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("int8") {
        return Ok(Mode::Exact);
    }
    let cut = s.find(['+', '-']).unwrap_or(s.len());
    let cfg = parse_config(&s[..cut])?;
    let (mut rounding, mut vsparq) = (true, true);
    let mut rest = &s[cut..];
    while !rest.is_empty() {
        let (on, tail) = match rest.as_bytes()[0] {
            b'+' => (true, &rest[1..]),
            _ => (false, &rest[1..]),
        };
        if let Some(t) = tail.strip_prefix("vS") {
            vsparq = on;
            rest = t;
        } else if let Some(t) = tail.strip_prefix('R') {
            rounding = on;
            rest = t;
        } else {
            return Err(SparqError::Usage(format!("unknown modifier in label '{s}'")));
        }
    }
    Ok(Mode::sparq(cfg, rounding, vsparq))
}

fn parse_dims(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<_> = s.split('x').map(str::parse::<usize>).collect();
    match parts.as_slice() {
        [Ok(m), Ok(k), Ok(n)] => Ok([*m, *k, *n]),
        _ => Err(SparqError::Usage(format!("expected MxKxN, got '{s}'"))),
    }
}

fn parse_window(s: &str) -> Result<(u32, u32)> {
    let bad = || SparqError::Usage(format!("expected hi:lo bit window within 7..0, got '{s}'"));
    let (hi, lo) = s.split_once(':').ok_or_else(bad)?;
    let (hi, lo): (u32, u32) = (hi.parse().map_err(|_| bad())?, lo.parse().map_err(|_| bad())?);
    if hi > 7 || lo > hi {
        return Err(bad());
    }
    Ok((hi, lo))
}

/// Every named configuration with each rounding and pair-encoding setting,
/// plus the INT8 baseline.
pub fn grid_modes() -> Vec<Mode> {
    let mut modes = vec![Mode::Exact];
    for cfg in TrimConfig::named() {
        for vsparq in [true, false] {
            for rounding in [true, false] {
                modes.push(Mode::sparq(cfg.clone(), rounding, vsparq));
            }
        }
    }
    modes
}

/// Files staged in memory and written together, so a failure leaves no
/// partial outputs behind.
#[derive(Default)]
struct Artifacts(Vec<(PathBuf, Vec<u8>)>);

impl Artifacts {
    fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.0.push((path.to_path_buf(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(path, text.into_bytes());
        Ok(())
    }

    fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.0.len());
        for (path, bytes) in &self.0 {
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e.into());
            }
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            fs::rename(tmp, path)?;
        }
        Ok(())
    }
}

fn scales_of(entry: &ManifestEntry) -> Vec<f64> {
    entry.scale.as_ref().map_or_else(|| vec![1.0], Scale::values)
}

/// Loads a manifest entry as 8-bit codes, quantizing float tensors.
fn load_entry(entry: &ManifestEntry) -> Result<QuantTensor> {
    let arr = read_npy(&entry.path)?;
    if arr.shape != entry.shape {
        return Err(SparqError::ShapeMismatch(format!(
            "entry '{}': manifest says {:?}, file holds {:?}",
            entry.name, entry.shape, arr.shape
        )));
    }
    let found = arr.data.dtype();
    let with_entry = |e: SparqError| match e {
        SparqError::NegativeActivation(m) => SparqError::NegativeActivation(format!("entry '{}': {m}", entry.name)),
        other => other,
    };
    match (entry.role, arr.data) {
        (Role::Activation, NpyData::F32(v)) => {
            let peak = v.iter().fold(0.0f64, |m, &x| m.max(x as f64));
            let max_abs = entry.max_abs.unwrap_or(if peak > 0.0 { peak } else { 1.0 });
            quantize_activations(&v, &arr.shape, max_abs).map_err(with_entry)
        }
        (Role::Weight, NpyData::F32(v)) => quantize_weights_per_kernel(&v, &arr.shape),
        (Role::Activation, NpyData::U8(v)) => QuantTensor::new(QuantData::U8(v), arr.shape, scales_of(entry)),
        (Role::Weight, NpyData::I8(v)) => QuantTensor::new(QuantData::I8(v), arr.shape, scales_of(entry)),
        (role, _) => Err(SparqError::DtypeMismatch {
            expected: match role {
                Role::Activation => "f4 or u1".into(),
                Role::Weight => "f4 or i1".into(),
            },
            found: format!("{found} in entry '{}'", entry.name),
        }),
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn cmd_quantize(args: &QuantizeArgs) -> Result<String> {
    let manifest = TensorManifest::load(&args.manifest)?;
    let mut out = TensorManifest { model: manifest.model.clone(), entries: Vec::new() };
    let mut artifacts = Artifacts::default();
    let mut used = HashSet::new();
    for entry in &manifest.entries {
        let q = load_entry(entry)?;
        let mut stem = file_stem(&entry.name);
        while !used.insert(stem.clone()) {
            stem.push('_');
        }
        let file = format!("{stem}.npy");
        let (data, dtype, scale) = match q.data {
            QuantData::U8(v) => (NpyData::U8(v), "u1", Scale::PerLayer(q.scales[0])),
            QuantData::I8(v) => (NpyData::I8(v), "i1", Scale::PerKernel(q.scales.clone())),
        };
        artifacts.add(&args.out.join(&file), NpyArray::new(q.shape.clone(), data)?.to_bytes());
        out.entries.push(ManifestEntry {
            path: PathBuf::from(file),
            scale: Some(scale),
            dtype: Some(dtype.into()),
            ..entry.clone()
        });
    }
    let manifest_path = args.out.join("manifest.json");
    artifacts.add_json(&manifest_path, &out)?;
    fs::create_dir_all(&args.out)?;
    let count = out.entries.len();
    artifacts.commit()?;
    Ok(format!("quantized {count} tensors into {}\n", manifest_path.display()))
}

fn read_u8_matrix(path: &Path) -> Result<Matrix<u8>> {
    let (shape, data) = read_npy(path)?.into_u8()?;
    match *shape.as_slice() {
        [r, c] => Matrix::new(r, c, data),
        _ => Err(SparqError::ShapeMismatch(format!("{}: expected a 2-D array, got {shape:?}", path.display()))),
    }
}

fn read_i8_matrix(path: &Path) -> Result<Matrix<i8>> {
    let (shape, data) = read_npy(path)?.into_i8()?;
    match *shape.as_slice() {
        [r, c] => Matrix::new(r, c, data),
        _ => Err(SparqError::ShapeMismatch(format!("{}: expected a 2-D array, got {shape:?}", path.display()))),
    }
}

/// Weights as seen by `engine`: the sparse core and an explicit mask both
/// prune to 2:4 along the reduction axis.
fn effective_weights(engine: Engine, b: &Matrix<i8>, mask: Option<&Matrix<u8>>) -> Result<Matrix<i8>> {
    if let Some(mask) = mask {
        if mask.shape() != b.shape() {
            return Err(SparqError::ShapeMismatch(format!(
                "mask {:?} does not match weights {:?}",
                mask.shape(),
                b.shape()
            )));
        }
        let keep: Vec<bool> = mask.data().iter().map(|&m| m != 0).collect();
        let pruned = Matrix::new(b.rows(), b.cols(), b.data().iter().zip(&keep).map(|(&w, &k)| if k { w } else { 0 }).collect())?;
        SparseWeights::from_mask(&pruned, &keep)?;
        return Ok(pruned);
    }
    if engine == Engine::Stc {
        let (_, pruned) = make_24_mask(b.data(), &b.shape(), 0)?;
        return Matrix::new(b.rows(), b.cols(), pruned);
    }
    Ok(b.clone())
}

/// Runs one engine on prepared operands.
pub fn execute_engine(
    engine: Engine,
    a: &Matrix<u8>,
    b: &Matrix<i8>,
    mask: Option<&Matrix<u8>>,
    mode: &Mode,
) -> Result<(Matrix<i32>, Matrix<i8>)> {
    let b = effective_weights(engine, b, mask)?;
    let out = match (engine, mask) {
        (Engine::Stc, Some(m)) => {
            let keep: Vec<bool> = m.data().iter().map(|&v| v != 0).collect();
            stc_matmul(a, &SparseWeights::from_mask(&b, &keep)?, mode)?
        }
        _ => run_engine(engine, a, &b, mode)?,
    };
    Ok((out, b))
}

#[derive(Debug, Serialize)]
struct MatmulReport {
    #[serde(flatten)]
    sim: SimReport,
    shape: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    layer: Option<String>,
    exempt: bool,
}

struct LayerInputs {
    a: Matrix<u8>,
    b: Matrix<i8>,
    act_scale: f64,
    w_scales: Vec<f64>,
    exempt: bool,
}

fn layer_inputs(manifest: &Path, layer: &str) -> Result<LayerInputs> {
    let manifest = TensorManifest::load(manifest)?;
    let (ae, we) = manifest.layer(layer)?;
    let act = load_entry(ae)?;
    let w = load_entry(we)?;
    let (a, b) = if act.shape.len() == 2 && w.shape.len() == 2 {
        let QuantData::I8(wv) = &w.data else { unreachable!("weights load as i8") };
        let (b, _) = kernels_to_matrix(wv, &w.shape)?;
        (act.to_u8_matrix()?, b)
    } else {
        let stride = we.stride.or(ae.stride).unwrap_or(1);
        let padding = we.padding.or(ae.padding).unwrap_or(0);
        lower_conv(&act, &w, stride, padding)?
    };
    Ok(LayerInputs { a, b, act_scale: act.scales[0], w_scales: w.scales.clone(), exempt: ae.exempt || we.exempt })
}

fn cmd_matmul(args: &MatmulArgs) -> Result<String> {
    let mut mode = args.mode.mode();
    let mut layer = None;
    let (a, b) = if let (Some(pa), Some(pb)) = (&args.a, &args.b) {
        (read_u8_matrix(pa)?, read_i8_matrix(pb)?)
    } else if let (Some(m), Some(id)) = (&args.manifest, &args.layer) {
        let inputs = layer_inputs(m, id)?;
        if inputs.exempt {
            mode = Mode::Exact;
        }
        let (a, b) = (inputs.a.clone(), inputs.b.clone());
        layer = Some((id.clone(), inputs));
        (a, b)
    } else if let Some([m, k, n]) = args.synthetic {
        let seed = args.seed.unwrap_or(0);
        (SyntheticActivations::new(40.0, 0.5, seed).matrix(m, k), synthetic_weights(k, n, 40.0, seed.wrapping_add(1)))
    } else {
        return Err(SparqError::Usage("matmul needs --a/--b, --manifest/--layer or --synthetic".into()));
    };
    let mask = args.mask.as_deref().map(read_u8_matrix).transpose()?;
    let (out, b_eff) = execute_engine(args.engine, &a, &b, mask.as_ref(), &mode)?;
    let sim = SimReport::measure(&a, &b_eff, &out, args.engine, &mode, args.seed)?;

    let mut artifacts = Artifacts::default();
    if let Some(path) = &args.out {
        artifacts.add(path, NpyArray::new(out.shape().to_vec(), NpyData::I32(out.data().to_vec()))?.to_bytes());
    }
    if let (Some(path), Some((_, inputs))) = (&args.fp_out, &layer) {
        let y = dequantize_output(out.data(), &out.shape(), 1, inputs.act_scale, &inputs.w_scales)?;
        artifacts.add(path, NpyArray::new(out.shape().to_vec(), NpyData::F32(y))?.to_bytes());
    }
    let text = format!(
        "{} {}: {}x{} outputs, mse {:.4}, sqnr {}\n",
        args.engine,
        mode.label(),
        out.rows(),
        out.cols(),
        sim.mse,
        fmt_db(sim.sqnr_db)
    );
    let report = MatmulReport {
        sim,
        shape: [a.rows(), a.cols(), b.cols()],
        exempt: layer.as_ref().is_some_and(|(_, l)| l.exempt),
        layer: layer.map(|(id, _)| id),
    };
    if let Some(path) = &args.report {
        artifacts.add_json(path, &report)?;
    }
    artifacts.commit()?;
    Ok(text)
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf dB".into()
    } else {
        format!("{v:.2} dB")
    }
}

#[derive(Debug, Serialize)]
struct SweepInputs {
    rows: usize,
    inner: usize,
    cols: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Serialize)]
struct SyntheticSpec {
    sigma: f64,
    weight_sigma: f64,
    zero_fraction: f64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    inputs: SweepInputs,
    results: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    label: String,
    #[serde(flatten)]
    sim: SimReport,
}

fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let modes = if args.grid {
        grid_modes()
    } else {
        let labels: Vec<_> = args.configs.iter().filter(|c| !c.trim().is_empty()).collect();
        if labels.is_empty() {
            return Err(SparqError::Usage("sweep needs at least one configuration (--configs or --grid)".into()));
        }
        labels.into_iter().map(|l| parse_label(l)).collect::<Result<Vec<_>>>()?
    };
    let (a, b, synthetic) = match (&args.a, &args.b) {
        (Some(pa), Some(pb)) => (read_u8_matrix(pa)?, read_i8_matrix(pb)?, None),
        _ => (
            SyntheticActivations::new(args.sigma, args.zero_fraction, args.seed).matrix(args.rows, args.inner),
            synthetic_weights(args.inner, args.cols, args.weight_sigma, args.seed.wrapping_add(1)),
            Some(SyntheticSpec {
                sigma: args.sigma,
                weight_sigma: args.weight_sigma,
                zero_fraction: args.zero_fraction,
                seed: args.seed,
            }),
        ),
    };
    let seed = synthetic.as_ref().map(|s| s.seed);
    let mut results = Vec::with_capacity(modes.len());
    for mode in &modes {
        let (out, b_eff) = execute_engine(args.engine, &a, &b, None, mode)?;
        let sim = SimReport::measure(&a, &b_eff, &out, args.engine, mode, seed)?;
        results.push(SweepRow { label: mode.label(), sim });
    }

    let width = results.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
    let mut text = String::new();
    let _ = writeln!(text, "{:<width$}  {:>14}  {:>10}  {:>9}", "config", "mse", "sqnr", "meta bits");
    for r in &results {
        let _ = writeln!(
            text,
            "{:<width$}  {:>14.4}  {:>10}  {:>9}",
            r.label,
            r.sim.mse,
            fmt_db(r.sim.sqnr_db),
            r.sim.metadata_bits_per_activation
        );
    }
    if let Some(path) = &args.report {
        let report = SweepReport {
            inputs: SweepInputs { rows: a.rows(), inner: a.cols(), cols: b.cols(), synthetic },
            results,
        };
        let mut artifacts = Artifacts::default();
        artifacts.add_json(path, &report)?;
        artifacts.commit()?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    shape: Vec<usize>,
    elements: usize,
    nonzero: usize,
    activation_sparsity: f64,
    row_len: usize,
    pair_zero_fraction: f64,
    toggle_rates: [f64; 8],
    window: [u32; 2],
    msb_window_probability: f64,
    empirical_window_probability: f64,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    let arr = read_npy(&args.input)?;
    let shape = arr.shape.clone();
    let codes = match arr.data {
        NpyData::U8(v) => v,
        NpyData::F32(v) => {
            let peak = v.iter().fold(0.0f64, |m, &x| m.max(x as f64));
            let q = quantize_activations(&v, &shape, if peak > 0.0 { peak } else { 1.0 })?;
            match q.data {
                QuantData::U8(v) => v,
                QuantData::I8(_) => unreachable!("activations quantize unsigned"),
            }
        }
        other => return Err(SparqError::DtypeMismatch { expected: "u1 or f4".into(), found: other.dtype().into() }),
    };
    let row_len = args.row_len.unwrap_or_else(|| shape.last().copied().unwrap_or(codes.len())).max(1);
    let (hi, lo) = args.window;
    let bits: Vec<u32> = (lo..=hi).collect();
    let stats = bit_toggle_stats(&codes);
    let report = AnalyzeReport {
        shape,
        elements: codes.len(),
        nonzero: stats.nonzero,
        activation_sparsity: activation_sparsity(&codes),
        row_len,
        pair_zero_fraction: pair_zero_fraction(&codes, row_len),
        toggle_rates: stats.rates,
        window: [hi, lo],
        msb_window_probability: msb_window_probability(&stats.rates, &bits),
        empirical_window_probability: empirical_window_probability(&codes, &bits),
    };
    let mut text = String::new();
    let _ = writeln!(text, "elements           {}", report.elements);
    let _ = writeln!(text, "sparsity           {:.4}", report.activation_sparsity);
    let _ = writeln!(text, "zero-pair fraction {:.4}", report.pair_zero_fraction);
    let rates: Vec<String> = report.toggle_rates.iter().rev().map(|r| format!("{r:.3}")).collect();
    let _ = writeln!(text, "toggle rates 7..0  {}", rates.join(" "));
    let _ = writeln!(
        text,
        "P(bits {hi}:{lo} used)  {:.4} (independent), {:.4} (measured)",
        report.msb_window_probability, report.empirical_window_probability
    );
    if let Some(path) = &args.report {
        let mut artifacts = Artifacts::default();
        artifacts.add_json(path, &report)?;
        artifacts.commit()?;
    }
    Ok(text)
}

fn cmd_selftest(args: &SelftestArgs) -> Result<String> {
    let opts = SelftestOptions { shifter_override: args.shifter_table.clone(), engine_cases: args.cases };
    let results = selftest::run(&opts)?;
    let mut text = String::new();
    for r in &results {
        let _ = writeln!(
            text,
            "{} {:<20} {:>7} cases {:>7} failures  {:.3}s",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.cases,
            r.failures,
            r.elapsed.as_secs_f64()
        );
        if let Some(f) = &r.first_failure {
            let _ = writeln!(text, "     first failure: {f}");
        }
    }
    if results.iter().all(|r| r.passed()) {
        Ok(text)
    } else {
        Err(SparqError::Invariant(format!("selftest failed\n{}", text.trim_end())))
    }
}

/// Runs a parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Quantize(a) => cmd_quantize(a),
        Command::Matmul(a) => cmd_matmul(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
