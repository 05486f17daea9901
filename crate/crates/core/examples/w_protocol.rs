//! W generation through a 1×n splitter with one DD per arm.

use num_complex::Complex64;
use spinnet::protocol::{run_closed_form, ProtocolConfig};

fn main() -> spinnet::Result<()> {
    let t = Complex64::from_polar(0.95, 0.3);
    for n in 2..=6 {
        let out = run_closed_form(&ProtocolConfig::w(n).with_t(t))?;
        println!("n = {n}: P = {:.4}  F = {:.6}", out.success_probability, out.fidelity_to_target);
        for b in &out.ledger {
            println!("    {:<28} {:.4}", b.label, b.probability);
        }
    }
    Ok(())
}
