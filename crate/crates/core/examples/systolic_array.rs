//! Output-stationary systolic array against the pair-wise reference.

use sparq::analysis::{synthetic_weights, SyntheticActivations};
use sparq::datapath::{exact_matmul, reference_matmul, SystolicArray};
use sparq::{Mode, TrimConfig};

fn main() -> sparq::Result<()> {
    let a = SyntheticActivations::new(40.0, 0.5, 7).matrix(24, 64);
    let b = synthetic_weights(64, 20, 30.0, 8);
    let mode = Mode::sparq(TrimConfig::five_opt(), true, true);

    let array = SystolicArray::new(8, 8, mode.multiplier());
    let out = array.matmul(&a, &b, &mode)?;
    let reference = reference_matmul(&a, &b, &mode)?;
    let exact = exact_matmul(&a, &b)?;

    let same = out.data().iter().zip(reference.data()).all(|(&s, &r)| s as i64 == r);
    println!("{:?} grid, output {:?}, matches reference: {same}", array.dims(), out.shape());
    for j in 0..4 {
        println!("  y[0][{j}] = {:>7}  exact {:>7}", out.get(0, j), exact.get(0, j));
    }
    Ok(())
}
