//! Bit-level statistics of quantized activations.

use sparq::analysis::{
    activation_sparsity, bit_toggle_stats, empirical_window_probability, msb_window_probability, pair_zero_fraction,
    SyntheticActivations,
};

fn main() {
    for sigma in [10.0, 40.0, 100.0] {
        let x = SyntheticActivations::new(sigma, 0.5, 1).generate(1 << 18);
        let stats = bit_toggle_stats(&x);
        let window = [4, 5, 6, 7];
        println!("sigma {sigma}");
        println!("  sparsity {:.3}, zero pairs {:.3}", activation_sparsity(&x), pair_zero_fraction(&x, 256));
        let rates: Vec<String> = stats.rates.iter().rev().map(|r| format!("{r:.3}")).collect();
        println!("  toggle rates bit 7..0: {}", rates.join(" "));
        println!(
            "  P(any of bits 7:4 set | x != 0): {:.3} independent, {:.3} measured",
            msb_window_probability(&stats.rates, &window),
            empirical_window_probability(&x, &window)
        );
    }
}
