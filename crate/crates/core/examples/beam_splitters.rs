//! Y-junction node matrices, checked against packets launched at each port.

use spinnet::network::SplitterKind;
use spinnet::splitter::{y_node_matrix, y_node_matrix_composed, verify_splitter};

fn main() -> spinnet::Result<()> {
    for (a, b) in [(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2), (0.6, 0.8)] {
        let m = y_node_matrix(a, b)?;
        println!("Y({a:.4}, {b:.4}): unitarity residue {:.1e}", m.unitarity_residue());
        for p in 0..m.n_ports() {
            let row: Vec<String> = m.row(p).iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
            println!("  [{}]", row.join(", "));
        }
        println!("  composed vs direct: {:.1e}", m.max_difference(&y_node_matrix_composed(a, b)?));

        let report = verify_splitter(SplitterKind::Y { alpha: a, beta: b }, 4.0 / 15.0)?;
        println!(
            "  dynamics: worst port probability error {:.1e}, amplitude error {:.1e}",
            report.max_probability_error, report.max_amplitude_error
        );
    }
    Ok(())
}
