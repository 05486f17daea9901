//! A packet meets a DD qubit. In `|0>` it passes and flips the qubit to `|1>`;
//! in `|1>` it reflects. A superposition is mapped onto the side the packet
//! ends up on, with the qubit left in `|1>` either way.

use num_complex::Complex64;
use spinnet::scattering::{scatter_off_dd, scatter_superposition, ScatteringGeometry};

fn main() -> spinnet::Result<()> {
    let geom = ScatteringGeometry::default();
    let net = geom.network(10.0, 10.0)?;
    let packet = geom.packet();
    let t = geom.transit_time();

    for state in [0, 1] {
        let s = scatter_off_dd(&net, &packet, state, t)?;
        println!(
            "|{state}>: T = {:.5}  R = {:.5}  leakage = {:.1e}  t = {:.4}",
            s.transmission, s.reflection, s.leakage, s.t
        );
    }

    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let sup = scatter_superposition(&net, &packet, h, h, t)?;
    let rho = sup.density.matrix();
    println!("(|0> + |1>)/sqrt 2:");
    for (q, label) in ["|0>, left", "|0>, right", "|1>, left", "|1>, right"].iter().enumerate() {
        println!("  {label:<11} {:.4}", rho[(q, q)].re);
    }
    println!("  concurrence {:.4}", sup.concurrence);
    Ok(())
}
