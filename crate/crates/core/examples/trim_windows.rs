//! Trimming single activations with each window configuration.

use sparq::{trim, TrimConfig};

fn main() {
    let values = [0u8, 5, 27, 33, 100, 126, 200, 255];
    for cfg in TrimConfig::named() {
        println!("{cfg}: {} bits, placements {:?}, {} shift-control bits", cfg.bits(), cfg.placements(), cfg.shift_ctrl_bits());
        for rounding in [false, true] {
            let row: Vec<String> = values
                .iter()
                .map(|&x| {
                    let t = trim(x, &cfg, rounding);
                    let mark = if t.saturated { "*" } else { "" };
                    format!("{x}->{}{mark}", t.dequant())
                })
                .collect();
            println!("  {:<6} {}", if rounding { "+R" } else { "-R" }, row.join("  "));
        }
    }
    println!("(* = rounding overflowed the window and was clamped)");
}
