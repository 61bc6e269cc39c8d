//! Error of every trimming variant on seeded half-Gaussian activations.

use sparq::analysis::{simulate, synthetic_weights, SyntheticActivations};
use sparq::cli::grid_modes;
use sparq::Engine;

fn main() -> sparq::Result<()> {
    let seed = 42;
    let a = SyntheticActivations::new(40.0, 0.5, seed).matrix(1024, 256);
    let b = synthetic_weights(256, 16, 40.0, seed + 1);
    println!("{:<12} {:>10} {:>6}", "config", "sqnr dB", "meta");
    for mode in grid_modes() {
        let (_, r) = simulate(&a, &b, Engine::Ref, &mode, Some(seed))?;
        println!("{:<12} {:>10.2} {:>6}", mode.label(), r.sqnr_db, r.metadata_bits_per_activation);
    }
    Ok(())
}
