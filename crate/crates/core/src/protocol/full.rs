use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{Engine, LedgerBranch, ProtocolConfig, ProtocolKind, ProtocolOutcome, RegisterDensity};
use crate::dynamics::{make_packet, EvolutionReport, PacketSpec, Propagator};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_hamiltonian, SectorBasis};
use crate::network::{build_splitter_network, DdPlacement, SpinNetwork, SplitterKind, SplitterSpec};
use crate::scattering::{packet_tail, BOUNDARY_TOL};

/// Register size above which full dynamics is refused.
pub const MAX_DYNAMICS_QUBITS: usize = 3;
/// Sector dimension above which full dynamics is refused.
pub const MAX_DYNAMICS_DIM: usize = 2_000_000;

const NODE_GUARD: usize = 3;
/// Slow momentum components trail the packet; their share of the success
/// probability stays below half this weight.
pub const READOUT_SEPARATION_TOL: f64 = 5e-3;

/// Site counts and timing of a closed two-splitter interferometer.
#[derive(Clone, Debug, Serialize)]
pub struct InterferometerLayout {
    pub packet_tail: usize,
    /// Distance from the packet centre to the opening node.
    pub packet_offset: usize,
    pub lead_len: usize,
    pub arm_lens: Vec<usize>,
    /// DD offsets inside each arm, counted from the opening node.
    pub dd_offsets: Vec<Vec<usize>>,
    pub out_len: usize,
    /// Depth of the packet centre inside the output lead at readout.
    pub readout_depth: usize,
    pub measurement_time: f64,
    pub n_sites: usize,
    pub sector_dim: usize,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128).min(usize::MAX as u128) as usize
}

/// Geometry that keeps every stray branch (DD reflection followed by a second
/// pass through the opening node, back-reflection at the closing node) out of
/// the output lead at readout time.
pub fn interferometer_layout(cfg: &ProtocolConfig) -> Result<InterferometerLayout> {
    cfg.validate()?;
    let tail = packet_tail(cfg.alpha);
    let readout_depth = tail;
    // A DD-reflected branch lags the direct one by twice the DD offset. The
    // same clearance separates neighbouring DDs (a bounce between them lags by
    // twice the spacing) and the last DD from the closing node (a DD left in
    // |0> mirrors waves sent back from that node).
    let entry = (tail + readout_depth).div_ceil(2) + 1;
    let n = cfg.n;
    let (arm_lens, dd_offsets) = match cfg.kind {
        ProtocolKind::Ghz => {
            let chain = (n + 1) * entry + 2;
            let offsets = (1..=n).map(|q| q * entry).collect();
            // each DD passage shortens the path by one site
            (vec![chain, chain - n], vec![offsets, Vec::new()])
        }
        ProtocolKind::W => {
            let arm = 2 * entry + 2;
            (vec![arm; n], vec![vec![entry]; n])
        }
    };
    let packet_offset = tail + 1;
    let lead_len = packet_offset + tail + 2;
    let out_len = readout_depth + tail + 3;
    let effective = arm_lens.iter().zip(&dd_offsets).map(|(l, d)| l - d.len()).max().expect("arms");
    let path = packet_offset + effective + 1 + readout_depth;
    let n_sites = lead_len + arm_lens.iter().sum::<usize>() + out_len;
    Ok(InterferometerLayout {
        packet_tail: tail,
        packet_offset,
        lead_len,
        arm_lens,
        dd_offsets,
        out_len,
        readout_depth,
        measurement_time: path as f64 / cfg.j_perp.abs(),
        n_sites,
        sector_dim: binomial(n_sites, n + 1),
    })
}

impl InterferometerLayout {
    fn network(&self, cfg: &ProtocolConfig) -> Result<SpinNetwork> {
        let (open, close) = match cfg.kind {
            ProtocolKind::Ghz => {
                let s = cfg.splitters();
                (
                    SplitterKind::Y { alpha: s.alpha, beta: s.beta },
                    SplitterKind::Y { alpha: s.alpha_out, beta: s.beta_out },
                )
            }
            ProtocolKind::W => (SplitterKind::OneToN { n: cfg.n }, SplitterKind::OneToN { n: cfg.n }),
        };
        let spec = SplitterSpec::new(open, self.lead_len, self.arm_lens[0])
            .with_arm_lens(self.arm_lens.clone())
            .with_output(close, self.out_len)
            .with_j_perp(cfg.j_perp);
        let placements: Vec<DdPlacement> = self
            .dd_offsets
            .iter()
            .enumerate()
            .flat_map(|(arm, offs)| {
                offs.iter().map(move |&offset| DdPlacement { arm, offset, jz: cfg.jz, h: cfg.h })
            })
            .collect();
        build_splitter_network(&spec, &placements)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicsDiagnostics {
    pub layout: InterferometerLayout,
    pub report: EvolutionReport,
    /// Weight with the mobile flip within a few sites of the closing node.
    pub near_node_weight: f64,
    /// Weight with the mobile flip at the far end of the output lead.
    pub edge_weight: f64,
    /// Closed-form success probability with the same `t`.
    pub closed_form_probability: f64,
}

/// Evolve the whole interferometer in the `n + 1` flip sector and read the
/// register out of the configurations with the mobile flip in the output lead.
pub fn run_protocol_full_dynamics(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    cfg.validate()?;
    if cfg.n > MAX_DYNAMICS_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "full dynamics is limited to n <= {MAX_DYNAMICS_QUBITS}: the {}-flip sector grows as C(N, {})",
            cfg.n + 1,
            cfg.n + 1
        )));
    }
    let layout = interferometer_layout(cfg)?;
    if layout.sector_dim > MAX_DYNAMICS_DIM {
        return Err(Error::InvalidParameter(format!(
            "sector dimension C({}, {}) = {} exceeds the limit of {MAX_DYNAMICS_DIM}",
            layout.n_sites,
            cfg.n + 1,
            layout.sector_dim
        )));
    }
    let net = layout.network(cfg)?;
    let n = cfg.n;
    let basis = SectorBasis::for_network(&net, n + 1)?;
    let ham = assemble_hamiltonian(&net, &basis)?;

    let lead = &net.region("lead").expect("lead region").sites;
    let support: Vec<usize> = lead[..lead.len() - 1].to_vec();
    let center = (support.len() - layout.packet_offset) as f64;
    let spec = PacketSpec::new(cfg.alpha, center, support);
    let frozen: Vec<usize> = net.dd_qubits().iter().map(|q| q.flip_site(0)).collect();
    let packet = make_packet(&basis, &spec, &frozen)?;

    let (state, report) = Propagator::chebyshev(&ham).evolve_with_report(&packet.state, layout.measurement_time)?;
    if !report.is_clean() {
        return Err(Error::NonConvergence(format!(
            "protocol evolution drifted: norm {:e}, energy {:e}",
            report.norm_drift, report.energy_drift
        )));
    }

    // Register qubit order: arm order, then distance from the opening node.
    let dds = net.dd_qubits();
    let out_sites = &net.region("out").expect("out region").sites;
    let node_out = out_sites[0];
    let mut region_of = vec![""; net.n_sites()];
    for r in net.regions() {
        for &s in &r.sites {
            region_of[s] = r.name.as_str();
        }
    }
    let near_node: Vec<usize> = net
        .bonds()
        .iter()
        .filter_map(|b| if b.j == node_out { Some(b.i) } else { None })
        .flat_map(|end| (0..NODE_GUARD).map(move |k| end - k))
        .chain(std::iter::once(node_out))
        .collect();
    // Only the output end matters: an echo from the input-lead end cannot
    // reach the output lead before readout.
    let far_ends = [out_sites[out_sites.len() - 1], out_sites[out_sites.len() - 2]];

    let mut readout: BTreeMap<usize, DVector<Complex64>> = BTreeMap::new();
    let mut ledger: BTreeMap<String, f64> = BTreeMap::new();
    let (mut near_node_weight, mut edge_weight) = (0.0, 0.0);
    for (idx, config) in basis.iter().enumerate() {
        let amp = state.amplitudes()[idx];
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut register = 0usize;
        let mut intact = true;
        for q in dds {
            match (config.contains(&(q.d as u32)), config.contains(&(q.d_plus_1 as u32))) {
                (true, false) => register = (register << 1) | 1,
                (false, true) => register <<= 1,
                _ => intact = false,
            }
        }
        let mobile = config.iter().map(|&s| s as usize).find(|&s| !dds.iter().any(|q| q.contains(s)));
        if near_node.iter().any(|s| config.contains(&(*s as u32)) && !dds.iter().any(|q| q.contains(*s))) {
            near_node_weight += w;
        }
        if far_ends.iter().any(|s| config.contains(&(*s as u32))) {
            edge_weight += w;
        }
        let label = match (intact, mobile) {
            (true, Some(m)) if region_of[m] == "out" && m != node_out => {
                readout.entry(m).or_insert_with(|| DVector::zeros(1 << n))[register] += amp;
                "output lead".to_string()
            }
            (true, Some(m)) if m == node_out => "closing node".to_string(),
            (true, Some(m)) => region_of[m].to_string(),
            _ => "DD leakage".to_string(),
        };
        *ledger.entry(label).or_insert(0.0) += w;
    }
    if near_node_weight > READOUT_SEPARATION_TOL {
        return Err(Error::NotSeparated { time: layout.measurement_time, occupancy: near_node_weight });
    }
    if edge_weight > BOUNDARY_TOL {
        return Err(Error::BoundaryReached { region: "output lead end".into(), occupancy: edge_weight });
    }

    let dim = 1 << n;
    let rho = readout.values().fold(DMatrix::<Complex64>::zeros(dim, dim), |acc, v| acc + v * v.adjoint());
    let p = rho.trace().re;
    let post = RegisterDensity::from_unnormalized(n, rho)?;
    let ledger: Vec<LedgerBranch> =
        ledger.into_iter().map(|(label, probability)| LedgerBranch { label, probability }).collect();

    let closed_cfg = ProtocolConfig { t_override: None, ..cfg.clone() };
    let closed = super::run_closed_form(&closed_cfg)?;
    let (t, convention) = (closed.t, closed.t_convention.clone());
    let mut outcome = ProtocolOutcome::finish(cfg, Engine::Dynamics, post, p, ledger, t, convention)?;
    outcome.dynamics = Some(DynamicsDiagnostics {
        layout,
        report,
        near_node_weight,
        edge_weight,
        closed_form_probability: closed.success_probability,
    });
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_balance_paths() {
        let l = interferometer_layout(&ProtocolConfig::ghz(2)).unwrap();
        assert_eq!(l.arm_lens[0] - 2, l.arm_lens[1]);
        assert_eq!(l.dd_offsets[0].len(), 2);
        let w = interferometer_layout(&ProtocolConfig::w(3)).unwrap();
        assert!(w.arm_lens.iter().all(|&a| a == w.arm_lens[0]));
        assert_eq!(binomial(10, 3), 120);
    }

    #[test]
    fn refuses_large_registers() {
        let err = run_protocol_full_dynamics(&ProtocolConfig::ghz(4)).unwrap_err();
        assert!(err.to_string().contains("n <= 3"));
    }

    #[test]
    fn ghz_single_qubit_dynamics() {
        let out = run_protocol_full_dynamics(&ProtocolConfig::ghz(1)).unwrap();
        let d = out.dynamics.as_ref().unwrap();
        assert!((out.success_probability - d.closed_form_probability).abs() < 0.03);
        assert!(out.fidelity_to_target > 0.97);
        assert!((out.ledger_total - 1.0).abs() < 1e-10);
    }
}
