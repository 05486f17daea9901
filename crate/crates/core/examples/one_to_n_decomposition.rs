//! A 1×n splitter splits into one chain that couples to the lead and
//! `n - 1` decoupled Fourier chains in the arms.

use spinnet::network::{build_splitter_network, SplitterKind, SplitterSpec};
use spinnet::splitter::decompose_one_to_n;

fn main() -> spinnet::Result<()> {
    for n in 2..=5 {
        let net = build_splitter_network(&SplitterSpec::new(SplitterKind::OneToN { n }, 6, 5), &[])?;
        let d = decompose_one_to_n(&net)?;
        println!(
            "n = {n}: blocks {:?}  unitarity {:.1e}  off-block {:.1e}  commutator {:.1e}  chain {:.1e}",
            d.block_sizes(),
            d.unitarity_residue,
            d.off_block_residue,
            d.commutator_residue,
            d.chain_residue
        );
    }
    Ok(())
}
