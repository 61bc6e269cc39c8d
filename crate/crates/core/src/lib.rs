//! Sparsity-aware quantization of 8-bit activations.
//!
//! * [`bitquant`] trims an 8-bit activation to an `n`-bit window placed at
//!   its leading toggled bit, with optional rounding.
//! * [`vsparq`] pairs adjacent activations so that a zero member hands its
//!   budget to its partner.
//! * [`datapath`] models the dual 4b-8b multiplier and the systolic-array,
//!   tensor-core and sparse-tensor-core engines built from it.
//! * [`tensorio`] handles `.npy` files, manifests, min-max quantization and
//!   im2col lowering.
//! * [`analysis`] measures toggle rates, sparsity, error and metadata cost.
//! * [`selftest`] runs the exhaustive built-in checks.
//! * [`cli`] drives all of the above from the `sparq` binary.

pub mod analysis;
pub mod bitquant;
pub mod cli;
pub mod datapath;
pub mod error;
pub mod selftest;
pub mod tensorio;
pub mod vsparq;

pub use bitquant::{dequant, select_window, trim, trim_wide, TrimConfig, TrimmedValue};
pub use datapath::{Engine, Mode};
pub use error::{Result, SparqError};
pub use vsparq::{dot_product, encode_pair, pair_contribution, PairEncoding, PairMode, SparqParams};
