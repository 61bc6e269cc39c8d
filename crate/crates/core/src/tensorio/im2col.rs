//! Convolution lowering to matrix multiplication.

use serde::{Deserialize, Serialize};

use super::{Matrix, QuantData, QuantTensor};
use crate::error::{Result, SparqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub fn new(kh: usize, kw: usize, stride: usize, padding: usize) -> Self {
        Self { kh, kw, stride, padding }
    }

    /// Output spatial size for an `h x w` input.
    pub fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        if self.stride == 0 || self.kh == 0 || self.kw == 0 {
            return Err(SparqError::ShapeMismatch("kernel and stride must be positive".into()));
        }
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if self.kh > ph || self.kw > pw {
            return Err(SparqError::ShapeMismatch(format!(
                "kernel {}x{} larger than padded input {ph}x{pw}",
                self.kh, self.kw
            )));
        }
        Ok(((ph - self.kh) / self.stride + 1, (pw - self.kw) / self.stride + 1))
    }
}

/// Unrolls a `C x H x W` tensor into one row per output position. Columns
/// run channel-major, then kernel row, then kernel column; padding is zero.
pub fn im2col_raw<T: Copy + Default>(
    data: &[T],
    dims: [usize; 3],
    geom: &ConvGeometry,
) -> Result<Matrix<T>> {
    let [c, h, w] = dims;
    if data.len() != c * h * w {
        return Err(SparqError::ShapeMismatch(format!("{} values for input {dims:?}", data.len())));
    }
    let (oh, ow) = geom.output_dims(h, w)?;
    let k = c * geom.kh * geom.kw;
    let pad = geom.padding as isize;
    let mut out = Vec::with_capacity(oh * ow * k);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                for ky in 0..geom.kh {
                    for kx in 0..geom.kw {
                        let y = (oy * geom.stride + ky) as isize - pad;
                        let x = (ox * geom.stride + kx) as isize - pad;
                        let inside = y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w;
                        out.push(if inside {
                            data[(ch * h + y as usize) * w + x as usize]
                        } else {
                            T::default()
                        });
                    }
                }
            }
        }
    }
    Matrix::new(oh * ow, k, out)
}

/// Batch size and per-image `[C, H, W]` of a 3-D or 4-D input.
fn nchw(shape: &[usize]) -> Result<(usize, [usize; 3])> {
    match *shape {
        [c, h, w] => Ok((1, [c, h, w])),
        [n, c, h, w] => Ok((n, [c, h, w])),
        _ => Err(SparqError::ShapeMismatch(format!("expected C x H x W input, got {shape:?}"))),
    }
}

fn im2col_batch<T: Copy + Default>(data: &[T], shape: &[usize], geom: &ConvGeometry) -> Result<Matrix<T>> {
    let (n, dims) = nchw(shape)?;
    let per: usize = dims.iter().product();
    if data.len() != n * per {
        return Err(SparqError::ShapeMismatch(format!("{} values for input {shape:?}", data.len())));
    }
    let (oh, ow) = geom.output_dims(dims[1], dims[2])?;
    let k = dims[0] * geom.kh * geom.kw;
    let mut out = Vec::with_capacity(n * oh * ow * k);
    for img in 0..n {
        out.extend(im2col_raw(&data[img * per..(img + 1) * per], dims, geom)?.into_data());
    }
    Matrix::new(n * oh * ow, k, out)
}

/// Quantized im2col; a leading batch axis stacks each image's rows. The
/// result keeps the input's scales.
pub fn im2col(input: &QuantTensor, geom: &ConvGeometry) -> Result<QuantTensor> {
    let (data, shape) = match &input.data {
        QuantData::U8(v) => {
            let m = im2col_batch(v, &input.shape, geom)?;
            let shape = m.shape().to_vec();
            (QuantData::U8(m.into_data()), shape)
        }
        QuantData::I8(v) => {
            let m = im2col_batch(v, &input.shape, geom)?;
            let shape = m.shape().to_vec();
            (QuantData::I8(m.into_data()), shape)
        }
    };
    Ok(QuantTensor { data, shape, scales: input.scales.clone() })
}

/// Reshapes `O x C x kh x kw` kernels into a `K x O` weight matrix whose
/// row order matches [`im2col`] columns.
pub fn kernels_to_matrix(weights: &[i8], shape: &[usize]) -> Result<(Matrix<i8>, ConvGeometry)> {
    let [o, c, kh, kw] = match *shape {
        [o, c, kh, kw] => [o, c, kh, kw],
        [o, k] => [o, k, 1, 1],
        _ => return Err(SparqError::ShapeMismatch(format!("expected O x C x kh x kw weights, got {shape:?}"))),
    };
    let k = c * kh * kw;
    if weights.len() != o * k {
        return Err(SparqError::ShapeMismatch(format!("{} weights for shape {shape:?}", weights.len())));
    }
    let m = Matrix::from_fn(k, o, |r, col| weights[col * k + r]);
    Ok((m, ConvGeometry::new(kh, kw, 1, 0)))
}

/// Lowers a quantized convolution to `(activations P x K, weights K x O)`.
pub fn lower_conv(
    input: &QuantTensor,
    weights: &QuantTensor,
    stride: usize,
    padding: usize,
) -> Result<(Matrix<u8>, Matrix<i8>)> {
    let w = match &weights.data {
        QuantData::I8(v) => v,
        QuantData::U8(_) => {
            return Err(SparqError::DtypeMismatch { expected: "i1".into(), found: "u1".into() })
        }
    };
    let (wm, mut geom) = kernels_to_matrix(w, &weights.shape)?;
    geom.stride = stride;
    geom.padding = padding;
    let (_, dims) = nchw(&input.shape)?;
    if dims[0] * geom.kh * geom.kw != wm.rows() {
        return Err(SparqError::ShapeMismatch(format!(
            "input has {} channels but weights {:?} expect {}",
            dims[0],
            weights.shape,
            wm.rows() / (geom.kh * geom.kw)
        )));
    }
    let cols = im2col(input, &geom)?.to_u8_matrix()?;
    Ok((cols, wm))
}
