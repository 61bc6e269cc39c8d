//! Tensor ingestion and emission, quantization, and convolution lowering.

mod im2col;
mod manifest;
mod matrix;
pub mod npy;
mod quant;

pub use im2col::{im2col, im2col_raw, kernels_to_matrix, lower_conv, ConvGeometry};
pub use manifest::{LayerId, ManifestEntry, Role, Scale, TensorManifest};
pub use matrix::Matrix;
pub use npy::{read_npy, write_npy, NpyArray, NpyData};
pub use quant::{
    dequantize_output, quantize_activations, quantize_weights_per_kernel, QuantData, QuantTensor,
    ACT_MAX, WEIGHT_MAX,
};
