//! Min-max symmetric quantization: unsigned per-layer for activations,
//! signed per-kernel for weights.

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Result, SparqError};

/// Largest signed code; the range is kept symmetric.
pub const WEIGHT_MAX: i8 = 127;
pub const ACT_MAX: u8 = 255;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantData {
    U8(Vec<u8>),
    I8(Vec<i8>),
}

impl QuantData {
    pub fn len(&self) -> usize {
        match self {
            QuantData::U8(v) => v.len(),
            QuantData::I8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Integer tensor with its quantization scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantTensor {
    pub data: QuantData,
    pub shape: Vec<usize>,
    /// One scale per layer, or one per kernel along the leading axis.
    pub scales: Vec<f64>,
}

impl QuantTensor {
    pub fn new(data: QuantData, shape: Vec<usize>, scales: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(SparqError::ShapeMismatch(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(SparqError::InvalidScale(format!("scales must be positive, got {scales:?}")));
        }
        if scales.len() != 1 && scales.len() != shape.first().copied().unwrap_or(1) {
            return Err(SparqError::InvalidScale(format!(
                "{} scales for leading dimension {:?}",
                scales.len(),
                shape.first()
            )));
        }
        if let QuantData::I8(v) = &data {
            if v.contains(&i8::MIN) {
                return Err(SparqError::InvalidScale("signed codes must lie in [-127, 127]".into()));
            }
        }
        Ok(Self { data, shape, scales })
    }

    /// Unit-scale unsigned matrix, handy for feeding raw codes to engines.
    pub fn from_u8_matrix(m: &Matrix<u8>) -> Self {
        Self { data: QuantData::U8(m.data().to_vec()), shape: m.shape().to_vec(), scales: vec![1.0] }
    }

    pub fn from_i8_matrix(m: &Matrix<i8>) -> Self {
        Self { data: QuantData::I8(m.data().to_vec()), shape: m.shape().to_vec(), scales: vec![1.0] }
    }

    pub fn signed(&self) -> bool {
        matches!(self.data, QuantData::I8(_))
    }

    fn matrix_dims(&self) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [r, c] => Ok((r, c)),
            _ => Err(SparqError::ShapeMismatch(format!("expected a matrix, got shape {:?}", self.shape))),
        }
    }

    pub fn to_u8_matrix(&self) -> Result<Matrix<u8>> {
        let (r, c) = self.matrix_dims()?;
        match &self.data {
            QuantData::U8(v) => Matrix::new(r, c, v.clone()),
            QuantData::I8(_) => Err(SparqError::DtypeMismatch { expected: "u1".into(), found: "i1".into() }),
        }
    }

    pub fn to_i8_matrix(&self) -> Result<Matrix<i8>> {
        let (r, c) = self.matrix_dims()?;
        match &self.data {
            QuantData::I8(v) => Matrix::new(r, c, v.clone()),
            QuantData::U8(_) => Err(SparqError::DtypeMismatch { expected: "i1".into(), found: "u1".into() }),
        }
    }
}

#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Quantizes non-negative activations with `scale = max_abs / 255`.
pub fn quantize_activations(t: &[f32], shape: &[usize], max_abs: f64) -> Result<QuantTensor> {
    if !(max_abs > 0.0 && max_abs.is_finite()) {
        return Err(SparqError::InvalidScale(format!("max_abs must be positive, got {max_abs}")));
    }
    if let Some((i, v)) = t.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(SparqError::NegativeActivation(format!("element {i} is {v}")));
    }
    let codes = t
        .iter()
        .map(|&x| round_half_up(x as f64 * ACT_MAX as f64 / max_abs).min(ACT_MAX as f64) as u8)
        .collect();
    QuantTensor::new(QuantData::U8(codes), shape.to_vec(), vec![max_abs / ACT_MAX as f64])
}

/// Quantizes weights per kernel along the leading axis with
/// `scale = max|w| / 127`. All-zero kernels get scale 1.
pub fn quantize_weights_per_kernel(w: &[f32], shape: &[usize]) -> Result<QuantTensor> {
    let n: usize = shape.iter().product();
    if n != w.len() || shape.is_empty() {
        return Err(SparqError::ShapeMismatch(format!("{} weights for shape {shape:?}", w.len())));
    }
    if let Some(v) = w.iter().find(|v| !v.is_finite()) {
        return Err(SparqError::InvalidScale(format!("non-finite weight {v}")));
    }
    let kernels = shape[0];
    let per = n.checked_div(kernels).unwrap_or(0);
    let mut codes = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(kernels);
    let max_code = WEIGHT_MAX as f64;
    for k in 0..kernels {
        let kernel = &w[k * per..(k + 1) * per];
        let peak = kernel.iter().fold(0.0f64, |m, &v| m.max((v as f64).abs()));
        if peak == 0.0 {
            scales.push(1.0);
            codes.extend(std::iter::repeat_n(0i8, per));
            continue;
        }
        scales.push(peak / max_code);
        codes.extend(
            kernel
                .iter()
                .map(|&v| round_half_up(v as f64 * max_code / peak).clamp(-max_code, max_code) as i8),
        );
    }
    if scales.is_empty() {
        scales.push(1.0);
    }
    QuantTensor::new(QuantData::I8(codes), shape.to_vec(), scales)
}

/// `y * act_scale * w_scale[c]` where `c` is the index along `channel_axis`.
/// A single weight scale is broadcast.
pub fn dequantize_output(
    y: &[i32],
    shape: &[usize],
    channel_axis: usize,
    act_scale: f64,
    w_scales: &[f64],
) -> Result<Vec<f32>> {
    let n: usize = shape.iter().product();
    if n != y.len() {
        return Err(SparqError::ShapeMismatch(format!("{} values for shape {shape:?}", y.len())));
    }
    let channels = *shape
        .get(channel_axis)
        .ok_or_else(|| SparqError::ShapeMismatch(format!("no axis {channel_axis} in {shape:?}")))?;
    if w_scales.len() != 1 && w_scales.len() != channels {
        return Err(SparqError::InvalidScale(format!(
            "{} weight scales for {channels} output channels",
            w_scales.len()
        )));
    }
    let stride: usize = shape[channel_axis + 1..].iter().product();
    Ok(y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = if w_scales.len() == 1 { 0 } else { (i / stride) % channels };
            (v as f64 * act_scale * w_scales[c]) as f32
        })
        .collect())
}
