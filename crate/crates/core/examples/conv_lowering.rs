//! Quantize a float convolution, lower it with im2col and run it trimmed.

use sparq::datapath::{exact_matmul, run_engine};
use sparq::tensorio::{dequantize_output, lower_conv, quantize_activations, quantize_weights_per_kernel};
use sparq::{Engine, Mode, TrimConfig};

fn main() -> sparq::Result<()> {
    let (c, h, w, o) = (3, 6, 6, 4);
    let x: Vec<f32> = (0..c * h * w).map(|i| ((i * 7) % 11) as f32 * 0.25).collect();
    let k: Vec<f32> = (0..o * c * 9).map(|i| ((i * 5) % 13) as f32 * 0.1 - 0.6).collect();

    let qx = quantize_activations(&x, &[1, c, h, w], 2.5)?;
    let qk = quantize_weights_per_kernel(&k, &[o, c, 3, 3])?;
    let (a, b) = lower_conv(&qx, &qk, 1, 1)?;
    println!("im2col {:?} x weights {:?}", a.shape(), b.shape());

    let y = run_engine(Engine::Tc, &a, &b, &Mode::sparq(TrimConfig::five_opt(), true, true))?;
    let fp = dequantize_output(y.data(), &y.shape(), 1, qx.scales[0], &qk.scales)?;
    let exact = exact_matmul(&a, &b)?;
    println!("position 0: int32 {:?} (exact {:?})", y.row(0), exact.row(0));
    println!("position 0 dequantized: {:?}", &fp[..o]);
    Ok(())
}
