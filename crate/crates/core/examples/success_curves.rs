//! Success probability against register size, and the GHZ optimum recovered
//! by brute force over splitter angles.

use spinnet::protocol::{default_curves, ghz_optimum_grid_search};

fn main() -> spinnet::Result<()> {
    println!("{:>4} {:>3} {:>8} {:>8} {:>8}", "T", "n", "P_GHZ", "P_W", "gap");
    for row in default_curves() {
        println!(
            "{:>4} {:>3} {:>8.4} {:>8.4} {:>8.4}",
            row.transmission,
            row.n,
            row.p_ghz,
            row.p_w,
            row.gap()
        );
    }

    let opt = ghz_optimum_grid_search(0.9, 3, 2000)?;
    println!(
        "\ngrid search t = 0.9, n = 3: alpha = {:.4} (P = {:.5}), predicted alpha = {:.4} (P = {:.5})",
        opt.best.alpha, opt.best_probability, opt.predicted.alpha, opt.predicted_probability
    );
    Ok(())
}
