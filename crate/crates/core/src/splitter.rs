//! Node scattering matrices of Y and 1×n splitters, the 1×n chain
//! decomposition, and their check against single-flip dynamics.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{make_packet, EvolutionReport, PacketSpec, Propagator};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_hamiltonian, SectorBasis};
use crate::network::{build_splitter_network, SpinNetwork, SplitterKind, SplitterSpec};
use crate::scattering::packet_tail;

const NORMALIZATION_TOL: f64 = 1e-12;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Maps incoming port amplitudes to outgoing ones. Row `i` is the outgoing
/// amplitude vector for a unit packet entering port `i`; port 0 is the lead.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeScatteringMatrix {
    pub ports: Vec<String>,
    pub matrix: DMatrix<Complex64>,
}

impl NodeScatteringMatrix {
    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn row(&self, port: usize) -> Vec<Complex64> {
        self.matrix.row(port).iter().copied().collect()
    }

    /// `max |S S^dagger - I|`.
    pub fn unitarity_residue(&self) -> f64 {
        let n = self.n_ports();
        (&self.matrix * self.matrix.adjoint() - DMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Outgoing amplitudes for a superposition of incoming ports.
    pub fn apply(&self, incoming: &[Complex64]) -> Result<Vec<Complex64>> {
        if incoming.len() != self.n_ports() {
            return Err(Error::DimensionMismatch { expected: self.n_ports(), found: incoming.len() });
        }
        Ok((0..self.n_ports())
            .map(|o| (0..self.n_ports()).map(|i| incoming[i] * self.matrix[(i, o)]).sum())
            .collect())
    }

    /// Largest entrywise distance to another matrix.
    pub fn max_difference(&self, other: &NodeScatteringMatrix) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_y(alpha: f64, beta: f64) -> Result<()> {
    let norm = alpha * alpha + beta * beta;
    if !alpha.is_finite() || !beta.is_finite() || (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidParameter(format!(
            "Y splitter needs real alpha^2 + beta^2 = 1, got {norm}"
        )));
    }
    Ok(())
}

/// Y-node matrix with ports `(lead, A, B)`.
pub fn y_node_matrix(alpha: f64, beta: f64) -> Result<NodeScatteringMatrix> {
    check_y(alpha, beta)?;
    let rows = [
        [0.0, alpha, beta],
        [alpha, beta * beta, -alpha * beta],
        [beta, -alpha * beta, alpha * alpha],
    ];
    Ok(NodeScatteringMatrix {
        ports: vec!["lead".into(), "A".into(), "B".into()],
        matrix: DMatrix::from_fn(3, 3, |r, col| c(rows[r][col])),
    })
}

/// Y-node matrix assembled from the split rule `lead -> alpha A + beta B`,
/// its time reverse `alpha A + beta B -> lead`, and the dark combination
/// `beta A - alpha B -> beta A - alpha B`.
pub fn y_node_matrix_composed(alpha: f64, beta: f64) -> Result<NodeScatteringMatrix> {
    check_y(alpha, beta)?;
    let lead = [c(0.0), c(alpha), c(beta)];
    let bright_out = [c(1.0), c(0.0), c(0.0)];
    let dark_out = [c(0.0), c(beta), c(-alpha)];
    // A = alpha * bright + beta * dark, B = beta * bright - alpha * dark
    let a: Vec<Complex64> = (0..3).map(|k| bright_out[k] * alpha + dark_out[k] * beta).collect();
    let b: Vec<Complex64> = (0..3).map(|k| bright_out[k] * beta - dark_out[k] * alpha).collect();
    let rows = [lead.to_vec(), a, b];
    Ok(NodeScatteringMatrix {
        ports: vec!["lead".into(), "A".into(), "B".into()],
        matrix: DMatrix::from_fn(3, 3, |r, col| rows[r][col]),
    })
}

/// 1×n node matrix with ports `(lead, arm1, ..., armn)`.
pub fn one_to_n_node_matrix(n: usize) -> Result<NodeScatteringMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("1xn splitter needs n >= 2, got {n}")));
    }
    let s = 1.0 / (n as f64).sqrt();
    let inv = 1.0 / n as f64;
    let matrix = DMatrix::from_fn(n + 1, n + 1, |r, col| match (r, col) {
        (0, 0) => c(0.0),
        (0, _) | (_, 0) => c(s),
        (l, j) => c(if l == j { 1.0 } else { 0.0 } - inv),
    });
    let mut ports = vec!["lead".to_string()];
    ports.extend((1..=n).map(|l| format!("arm{l}")));
    Ok(NodeScatteringMatrix { ports, matrix })
}

pub fn node_matrix(kind: &SplitterKind) -> Result<NodeScatteringMatrix> {
    match *kind {
        SplitterKind::Y { alpha, beta } => y_node_matrix(alpha, beta),
        SplitterKind::OneToN { n } => one_to_n_node_matrix(n),
    }
}

/// Single-flip Hamiltonian of a 1×n splitter rewritten in the lead/symmetric
/// (`c`) modes and the `n - 1` Fourier (`d_l`) modes of the arms.
#[derive(Clone, Debug)]
pub struct OneToNDecomposition {
    pub n: usize,
    pub lead_len: usize,
    pub arm_len: usize,
    /// Columns are the new modes written in the site basis.
    pub basis_change: DMatrix<Complex64>,
    /// `U^dagger H U`.
    pub transformed: DMatrix<Complex64>,
    /// Mode ranges of the `c` chain followed by each `d_l` chain.
    pub blocks: Vec<Range<usize>>,
    pub unitarity_residue: f64,
    pub off_block_residue: f64,
    /// Largest commutator entry between any two block Hamiltonians mapped
    /// back to the site basis.
    pub commutator_residue: f64,
    /// Largest deviation of any block from a uniform chain with the lead coupling.
    pub chain_residue: f64,
}

impl OneToNDecomposition {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }
}

/// Split a 1×n splitter network (lead plus `n` equal arms, no DD qubits)
/// into independent chains.
pub fn decompose_one_to_n(net: &SpinNetwork) -> Result<OneToNDecomposition> {
    let lead = net
        .region("lead")
        .ok_or_else(|| Error::InvalidTopology("network has no 'lead' region".into()))?;
    let arms: Vec<&[usize]> = net
        .regions()
        .iter()
        .filter(|r| r.name != "lead" && r.name != "out")
        .map(|r| r.sites.as_slice())
        .collect();
    let n = arms.len();
    if n < 2 || net.region("out").is_some() || !net.dd_qubits().is_empty() {
        return Err(Error::InvalidTopology(
            "decomposition needs a bare 1xn splitter with n >= 2 arms".into(),
        ));
    }
    let arm_len = arms[0].len();
    if arms.iter().any(|a| a.len() != arm_len) {
        return Err(Error::InvalidTopology("1xn decomposition needs equal arm lengths".into()));
    }
    let lead_len = lead.sites.len();
    let node = *lead.sites.last().expect("nonempty lead");
    let j = net.bond_between(lead.sites[0], lead.sites[1.min(lead_len - 1)]).map(|b| b.j_perp).unwrap_or(1.0);
    let node_coupling = j / (n as f64).sqrt();
    for arm in &arms {
        match net.bond_between(node, arm[0]) {
            Some(b) if (b.j_perp - node_coupling).abs() < 1e-12 => {}
            _ => return Err(Error::InvalidTopology("1xn node couplings must all be J/sqrt(n)".into())),
        }
    }
    if net.fields().iter().any(|&h| h != 0.0) || net.bonds().iter().any(|b| b.j_z != 0.0) {
        return Err(Error::InvalidTopology("decomposition needs a field-free XY splitter".into()));
    }

    let basis = SectorBasis::for_network(net, 1)?;
    let ham = assemble_hamiltonian(net, &basis)?.to_dense()?.map(c);
    let dim = net.n_sites();
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    let mut col = 0;
    for &s in &lead.sites {
        u[(s, col)] = c(1.0);
        col += 1;
    }
    let norm = 1.0 / (n as f64).sqrt();
    for i in 0..arm_len {
        for arm in &arms {
            u[(arm[i], col)] = c(norm);
        }
        col += 1;
    }
    for l in 1..n {
        for i in 0..arm_len {
            for (jdx, arm) in arms.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (l * (jdx + 1)) as f64 / n as f64;
                u[(arm[i], col)] = Complex64::from_polar(norm, phase);
            }
            col += 1;
        }
    }
    let mut blocks = Vec::with_capacity(n);
    blocks.push(0..lead_len + arm_len);
    for l in 0..n - 1 {
        let start = lead_len + arm_len + l * arm_len;
        blocks.push(start..start + arm_len);
    }

    let unitarity_residue = max_abs(&(u.adjoint() * &u - DMatrix::identity(dim, dim)));
    let transformed = u.adjoint() * &ham * &u;
    let block_of = |k: usize| blocks.iter().position(|b| b.contains(&k)).expect("covered");
    let mut off_block_residue = 0.0f64;
    for r in 0..dim {
        for col in 0..dim {
            if block_of(r) != block_of(col) {
                off_block_residue = off_block_residue.max(transformed[(r, col)].norm());
            }
        }
    }

    let mut chain_residue = 0.0f64;
    for b in &blocks {
        for r in b.clone() {
            for col in b.clone() {
                let expected = if r.abs_diff(col) == 1 { -j / 2.0 } else { 0.0 };
                chain_residue = chain_residue.max((transformed[(r, col)] - c(expected)).norm());
            }
        }
    }

    let sub: Vec<DMatrix<Complex64>> = blocks
        .iter()
        .map(|b| {
            let mut p = transformed.clone();
            for r in 0..dim {
                for col in 0..dim {
                    if !(b.contains(&r) && b.contains(&col)) {
                        p[(r, col)] = c(0.0);
                    }
                }
            }
            &u * p * u.adjoint()
        })
        .collect();
    let mut commutator_residue = 0.0f64;
    for a in 0..sub.len() {
        for b in a + 1..sub.len() {
            commutator_residue = commutator_residue.max(max_abs(&(&sub[a] * &sub[b] - &sub[b] * &sub[a])));
        }
    }

    Ok(OneToNDecomposition {
        n,
        lead_len,
        arm_len,
        basis_change: u,
        transformed,
        blocks,
        unitarity_residue,
        off_block_residue,
        commutator_residue,
        chain_residue,
    })
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Outgoing port content after a packet enters one port.
#[derive(Clone, Debug, Serialize)]
pub struct PortRow {
    pub input: String,
    /// Probability found on each port.
    pub probabilities: Vec<f64>,
    /// Overlap of each port profile with the free reference packet.
    pub amplitudes: Vec<Complex64>,
    pub expected: Vec<Complex64>,
    pub max_probability_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicalNodeReport {
    pub ports: Vec<String>,
    pub rows: Vec<PortRow>,
    pub max_probability_error: f64,
    /// Common phase of the arm-to-arm amplitudes relative to the matrix,
    /// fitted from the dynamics.
    pub round_trip_phase: f64,
    /// Largest `|amplitude - expected|` once arm-to-arm entries carry
    /// `round_trip_phase`.
    pub max_amplitude_error: f64,
    pub reports: Vec<EvolutionReport>,
}

/// Splitter with every port long enough for a packet of width `1/alpha` to
/// enter and leave the node cleanly.
pub fn verification_spec(kind: SplitterKind, alpha: f64) -> SplitterSpec {
    let len = 2 * packet_tail(alpha) + 6;
    SplitterSpec::new(kind, len + 1, len)
}

/// Launch a packet at every port of a splitter and compare the outgoing port
/// amplitudes with `matrix`. Ports map to a reference chain through the node:
/// a site at distance `x` on the input port sits at `-x`, one on any other port at `+x`.
pub fn verify_node_matrix_dynamically(
    spec: &SplitterSpec,
    matrix: &NodeScatteringMatrix,
    alpha: f64,
) -> Result<DynamicalNodeReport> {
    if spec.output.is_some() {
        return Err(Error::InvalidTopology("node check needs a single splitter".into()));
    }
    let net = build_splitter_network(spec, &[])?;
    let n_ports = spec.kind.n_arms() + 1;
    if matrix.n_ports() != n_ports {
        return Err(Error::DimensionMismatch { expected: n_ports, found: matrix.n_ports() });
    }
    let tail = packet_tail(alpha);
    let x0 = tail + 2;
    // port site lists ordered by distance from the node; the lead includes the node at 0
    let lead = net.region("lead").expect("lead region");
    let node = *lead.sites.last().expect("nonempty");
    let mut ports: Vec<Vec<usize>> = vec![lead.sites.iter().rev().copied().collect()];
    for label in &spec.arm_labels {
        let mut sites = vec![node];
        sites.extend(&net.region(label).expect("arm region").sites);
        ports.push(sites);
    }
    let shortest = ports.iter().map(|p| p.len() - 1).min().expect("ports");
    if shortest < x0 + tail + 3 {
        return Err(Error::InvalidParameter(format!(
            "ports of {shortest} sites are too short for alpha = {alpha}"
        )));
    }

    let basis = SectorBasis::for_network(&net, 1)?;
    let ham = assemble_hamiltonian(&net, &basis)?;
    let prop = Propagator::chebyshev(&ham);
    let time = 2.0 * x0 as f64 / spec.j_perp.abs();

    // free reference on a chain indexed by s + offset
    let span = 2 * (x0 + 2 * tail + 4);
    let offset = span / 2;
    let ref_chain = crate::network::build_chain(span + 1, spec.j_perp)?;
    let ref_basis = SectorBasis::new(span + 1, 1)?;
    let ref_ham = assemble_hamiltonian(&ref_chain, &ref_basis)?;
    let ref_spec = PacketSpec::new(alpha, (offset - x0) as f64, (0..=span).collect());
    let ref_start = make_packet(&ref_basis, &ref_spec, &[])?;
    let reference = Propagator::chebyshev(&ref_ham).evolve(&ref_start.state, time)?;
    let ref_at = |s: usize| reference.amplitudes()[offset + s];

    let mut rows = Vec::with_capacity(n_ports);
    let mut reports = Vec::with_capacity(n_ports);
    for input in 0..n_ports {
        // support runs from the far end of the input port toward the node
        let support: Vec<usize> = ports[input][1..].iter().rev().copied().collect();
        let center = (support.len() - x0) as f64;
        // align the packet phase origin with the reference chain
        let align = Complex64::from_polar(
            1.0,
            std::f64::consts::FRAC_PI_2 * (offset as f64 - support.len() as f64),
        );
        let packet = make_packet(&basis, &PacketSpec::new(alpha, center, support), &[])?;
        let (state, report) = prop.evolve_with_report(&packet.state, time)?;
        let amps = state.amplitudes();
        let near_node: f64 = ports
            .iter()
            .flat_map(|p| p.iter().take(4))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|&s| amps[s].norm_sqr())
            .sum();
        if near_node > 1e-3 {
            return Err(Error::NotSeparated { time, occupancy: near_node });
        }
        let mut probabilities: Vec<f64> = Vec::with_capacity(n_ports);
        let mut amplitudes = Vec::with_capacity(n_ports);
        for (k, p) in ports.iter().enumerate() {
            // the node belongs to the lead
            let skip = usize::from(k > 0);
            let sites = &p[skip..];
            probabilities.push(sites.iter().map(|&s| amps[s].norm_sqr()).sum());
            let dist = |k: usize| k + skip;
            amplitudes.push(
                sites
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| dist(*k) <= span - offset)
                    .map(|(k, &s)| ref_at(dist(k)).conj() * amps[s])
                    .sum::<Complex64>()
                    * align,
            );
        }
        let expected = matrix.row(input);
        let max_probability_error = probabilities
            .iter()
            .zip(&expected)
            .map(|(p, e)| (p - e.norm_sqr()).abs())
            .fold(0.0, f64::max);
        rows.push(PortRow {
            input: matrix.ports[input].clone(),
            probabilities,
            amplitudes,
            expected,
            max_probability_error,
        });
        reports.push(report);
    }
    let arm_pairs = || (1..n_ports).flat_map(|i| (1..n_ports).map(move |o| (i, o)));
    let fit: Complex64 = arm_pairs().map(|(i, o)| rows[i].expected[o].conj() * rows[i].amplitudes[o]).sum();
    let round_trip = if fit.norm() > 0.0 { fit / fit.norm() } else { c(1.0) };
    let max_amplitude_error = (0..n_ports)
        .flat_map(|i| (0..n_ports).map(move |o| (i, o)))
        .map(|(i, o)| {
            let factor = if i > 0 && o > 0 { round_trip } else { c(1.0) };
            (rows[i].amplitudes[o] - rows[i].expected[o] * factor).norm()
        })
        .fold(0.0, f64::max);
    Ok(DynamicalNodeReport {
        ports: matrix.ports.clone(),
        max_probability_error: rows.iter().map(|r| r.max_probability_error).fold(0.0, f64::max),
        round_trip_phase: round_trip.arg(),
        max_amplitude_error,
        rows,
        reports,
    })
}

/// Build the splitter for `kind`, derive its node matrix and check it dynamically.
pub fn verify_splitter(kind: SplitterKind, alpha: f64) -> Result<DynamicalNodeReport> {
    let matrix = node_matrix(&kind)?;
    verify_node_matrix_dynamically(&verification_spec(kind, alpha), &matrix, alpha)
}
