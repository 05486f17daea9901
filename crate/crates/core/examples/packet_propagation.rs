//! Free Gaussian packet on a uniform chain: the centre moves at group
//! velocity `J sin(k)` and the width grows slowly.

use spinnet::dynamics::{make_packet, PacketSpec, Propagator};
use spinnet::hilbert::{assemble_hamiltonian, SectorBasis};
use spinnet::network::build_chain;

fn main() -> spinnet::Result<()> {
    let net = build_chain(120, 1.0)?;
    let basis = SectorBasis::for_network(&net, 1)?;
    let ham = assemble_hamiltonian(&net, &basis)?;
    let spec = PacketSpec::new(4.0 / 15.0, 25.0, (0..120).collect());
    let packet = make_packet(&basis, &spec, &[])?;
    let prop = Propagator::chebyshev(&ham);

    println!("{:>6} {:>10} {:>10} {:>12}", "t", "mean", "width", "norm drift");
    for step in 0..=6 {
        let t = 10.0 * step as f64;
        let (psi, report) = prop.evolve_with_report(&packet.state, t)?;
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, a) in psi.amplitudes().iter().enumerate() {
            let x = basis.state(i)[0] as f64;
            m1 += a.norm_sqr() * x;
            m2 += a.norm_sqr() * x * x;
        }
        println!("{t:>6} {m1:>10.3} {:>10.3} {:>12.1e}", (m2 - m1 * m1).sqrt(), report.norm_drift);
    }
    Ok(())
}
