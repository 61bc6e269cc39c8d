//! Tensor-core dot-product unit: four lanes per step into an accumulator.

use sparq::analysis::{synthetic_weights, SyntheticActivations};
use sparq::datapath::{reference_matmul, tc_dot4, tc_matmul, Accumulator};
use sparq::{Mode, SparqParams, TrimConfig};

fn main() -> sparq::Result<()> {
    let params = SparqParams::new(TrimConfig::five_opt(), true, true);
    let x = [12u8, 0, 0, 250, 64, 65, 3, 0];
    let w = [4i8, -1, 8, 2, -6, 6, 1, 127];
    let acc = tc_dot4(&x, &w, Accumulator::new(1000), &params)?;
    println!("one step from 1000: {}", acc.value);

    let a = SyntheticActivations::new(40.0, 0.5, 3).matrix(16, 48);
    let b = synthetic_weights(48, 16, 30.0, 4);
    let mode = Mode::Sparq(params);
    let tc = tc_matmul(&a, &b, &mode)?;
    let reference = reference_matmul(&a, &b, &mode)?;
    let same = tc.data().iter().zip(reference.data()).all(|(&t, &r)| t as i64 == r);
    println!("16x48x16 on the tensor core matches reference: {same}");
    Ok(())
}
