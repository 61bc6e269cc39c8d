//! Zero-aware pair encoding and its effect on a dot product.

use sparq::vsparq::{encode_vector, exact_dot};
use sparq::{dot_product, SparqParams, TrimConfig};

fn main() -> sparq::Result<()> {
    let x = [0u8, 201, 37, 0, 90, 91, 0, 0, 17];
    let w = [3i8, -2, 7, 1, -5, 4, 9, 9, 2];

    for vsparq in [true, false] {
        let params = SparqParams::new(TrimConfig::five_opt(), true, vsparq);
        println!("{}", params.label());
        for (i, p) in encode_vector(&x, &params).iter().enumerate() {
            println!("  pair {i}: {:?} -> {:?}", p.mode, p.dequant());
        }
        println!("  dot = {} (exact {})", dot_product(&x, &w, &params)?, exact_dot(&x, &w)?);
    }
    Ok(())
}
