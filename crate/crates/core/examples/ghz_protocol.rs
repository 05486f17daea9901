//! GHZ generation: closed form for several register sizes, then one full
//! many-flip simulation of the interferometer for a single qubit.

use num_complex::Complex64;
use spinnet::protocol::{optimal_ghz_splitters, run_closed_form, run_protocol_full_dynamics, ProtocolConfig};

fn main() -> spinnet::Result<()> {
    let t = 0.9;
    println!("t = {t}");
    for n in 1..=6 {
        let cfg = ProtocolConfig::ghz(n)
            .with_t(Complex64::new(t, 0.0))
            .with_splitters(optimal_ghz_splitters(t, n)?);
        let out = run_closed_form(&cfg)?;
        println!("n = {n}: P = {:.4}  F = {:.6}", out.success_probability, out.fidelity_to_target);
    }

    let out = run_protocol_full_dynamics(&ProtocolConfig::ghz(1))?;
    println!("\nfull dynamics, n = 1, h = Jz = 10:");
    println!("  P = {:.4}  F = {:.4}", out.success_probability, out.fidelity_to_target);
    for b in &out.ledger {
        println!("  {:<32} {:.4}", b.label, b.probability);
    }
    Ok(())
}
