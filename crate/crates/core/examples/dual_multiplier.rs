//! The shared 4b x 8b dual multiplier: pair lanes and full-precision
//! recombination on the same hardware.

use sparq::datapath::{DualMultInput, Multiplier};
use sparq::vsparq::pair_contribution;
use sparq::{encode_pair, TrimConfig};

fn main() -> sparq::Result<()> {
    let cfg = TrimConfig::three_opt();
    let mult = Multiplier::from_config(&cfg);
    println!("shifter table {:?}", mult.shifts());

    let (x, w) = (187u8, -93i8);
    let full = mult.multiply(&DualMultInput::recombination(x, w))?;
    println!("{x} x {w} via nibbles = {full} (direct {})", x as i32 * w as i32);

    for (xe, xo) in [(0u8, 200u8), (150, 0), (150, 75)] {
        let p = encode_pair(xe, xo, &cfg, true);
        let lane = mult.lane(&p, (5, -3))?;
        println!("pair ({xe}, {xo}) {:?}: lane {lane}, reference {}", p.mode, pair_contribution(&p, 5, -3));
    }

    let broken = Multiplier::with_shifts(4, vec![3, 0])?;
    println!("table [3, 0] on recombination: {:?}", broken.multiply(&DualMultInput::recombination(x, w)));
    Ok(())
}
