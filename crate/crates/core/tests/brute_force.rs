//! Full 2^N Hilbert-space oracle for small networks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use spinnet::dynamics::{Method, Propagator};
use spinnet::hilbert::{assemble_hamiltonian, SectorBasis, StateVector};
use spinnet::network::{build_chain, build_splitter_network, DdPlacement, SpinNetwork, SplitterKind, SplitterSpec};

/// `H = sum_bonds [-(J_perp/2)(hop) - Jz s_i s_j] + sum_i h_i s_i`, with
/// `s = +1` on flipped sites; bit `i` of the index marks a flip on site `i`.
fn full_hamiltonian(net: &SpinNetwork) -> DMatrix<f64> {
    let n = net.n_sites();
    let dim = 1usize << n;
    let s = |mask: usize, i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
    let mut h = DMatrix::zeros(dim, dim);
    for mask in 0..dim {
        let mut diag = 0.0;
        for (i, &hi) in net.fields().iter().enumerate() {
            diag += hi * s(mask, i);
        }
        for b in net.bonds() {
            diag -= b.j_z * s(mask, b.i) * s(mask, b.j);
            if (mask >> b.i & 1) != (mask >> b.j & 1) {
                let other = mask ^ (1 << b.i) ^ (1 << b.j);
                h[(other, mask)] += -b.j_perp / 2.0;
            }
        }
        h[(mask, mask)] = diag;
    }
    h
}

fn mask_of(config: &[u32]) -> usize {
    config.iter().fold(0, |m, &s| m | 1 << s)
}

fn networks() -> Vec<(&'static str, SpinNetwork)> {
    let y = SplitterSpec::new(SplitterKind::Y { alpha: 0.6, beta: 0.8 }, 3, 3);
    let mz = SplitterSpec::new(SplitterKind::balanced_y(), 3, 2).with_output(SplitterKind::balanced_y(), 2);
    vec![
        ("chain", build_chain(9, 1.0).unwrap()),
        ("negative coupling", build_chain(7, -0.7).unwrap()),
        ("chain with DD", build_chain(10, 1.0).unwrap().embed_dd_qubit(4, 10.0, 10.0).unwrap()),
        ("off-resonant DD", build_chain(8, 1.3).unwrap().embed_dd_qubit(2, 3.0, 5.5).unwrap()),
        ("Y splitter", build_splitter_network(&y, &[]).unwrap()),
        (
            "Y splitter with DD",
            build_splitter_network(&y, &[DdPlacement { arm: 1, offset: 1, jz: 7.0, h: 7.0 }]).unwrap(),
        ),
        ("interferometer", build_splitter_network(&mz, &[]).unwrap()),
        ("1x3 splitter", build_splitter_network(&SplitterSpec::new(SplitterKind::OneToN { n: 3 }, 3, 3), &[]).unwrap()),
    ]
}

#[test]
fn sector_blocks_match_full_space() {
    for (name, net) in networks() {
        assert!(net.n_sites() <= 12, "{name} too large for the oracle");
        let full = full_hamiltonian(&net);
        for k in 0..=net.n_sites().min(4) {
            let basis = SectorBasis::for_network(&net, k).unwrap();
            let ham = assemble_hamiltonian(&net, &basis).unwrap();
            let masks: Vec<usize> = basis.iter().map(mask_of).collect();
            for (r, &mr) in masks.iter().enumerate() {
                for (c, &mc) in masks.iter().enumerate() {
                    let diff = (ham.get(r, c) - full[(mr, mc)]).abs();
                    assert!(diff < 1e-12, "{name} k={k} ({r},{c}): sector {} vs full {}", ham.get(r, c), full[(mr, mc)]);
                }
            }
        }
    }
}

#[test]
fn flip_number_is_conserved() {
    for (name, net) in networks() {
        let full = full_hamiltonian(&net);
        for r in 0..full.nrows() {
            for c in 0..full.ncols() {
                if full[(r, c)] != 0.0 {
                    assert_eq!(r.count_ones(), c.count_ones(), "{name}: element ({r},{c}) changes k");
                }
            }
        }
    }
}

#[test]
fn sector_evolution_matches_full_space() {
    let net = build_chain(8, 1.0).unwrap().embed_dd_qubit(3, 6.0, 6.0).unwrap();
    let full = full_hamiltonian(&net);
    let eig = full.clone().symmetric_eigen();
    let basis = SectorBasis::for_network(&net, 2).unwrap();
    let ham = assemble_hamiltonian(&net, &basis).unwrap();

    // arbitrary normalized start in the two-flip sector
    let amps: Vec<Complex64> =
        (0..basis.len()).map(|j| Complex64::new((0.3 * j as f64).sin(), (0.7 * j as f64).cos())).collect();
    let start = StateVector::normalized(amps).unwrap();
    let t = 3.7;
    let mut psi_full = DVector::<Complex64>::zeros(full.nrows());
    for (config, a) in basis.iter().zip(start.amplitudes()) {
        psi_full[mask_of(config)] = *a;
    }
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, -e * t)),
    );
    let evolved_full = &v * (v.adjoint() * &psi_full).component_mul(&phases);

    for method in [Method::Chebyshev, Method::Krylov, Method::DenseExpm] {
        let out = Propagator::new(&ham, method).unwrap().evolve(&start, t).unwrap();
        let err = basis
            .iter()
            .zip(out.amplitudes())
            .map(|(config, a)| (a - evolved_full[mask_of(config)]).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{method:?}: max amplitude error {err:e}");
    }
}
