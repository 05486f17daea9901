//! Packet scattering off a single DD qubit on a chain: channel probabilities,
//! complex amplitudes and transmission maps over `(h, Jz)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    make_packet, mean_momentum, EvolutionReport, Method, PacketSpec, Propagator,
};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_hamiltonian, SectorBasis, StateVector};
use crate::network::{build_chain, SpinNetwork};
use crate::protocol::TwoQubitDensity;

/// Phase convention of the complex amplitudes.
pub const SHIFT_CONVENTION: &str = "t = sqrt(T) exp(i arg <ref|psi_T>) with ref the free packet on a \
pristine chain of equal length advanced by one site; r uses the free packet reflected by a wall \
at the first DD site; the dressed DD bound-state energy is removed from both";

/// Interaction-region occupancy above which packets count as unseparated.
pub const SEPARATION_TOL: f64 = 1e-3;
/// Channel occupancy on the outermost sites above which the run is rejected.
pub const BOUNDARY_TOL: f64 = 1e-4;
const INTERACTION_RADIUS: usize = 4;
const EDGE_SITES: usize = 2;

/// Chain with one DD qubit and an incident packet on its left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringGeometry {
    pub alpha: f64,
    pub momentum: f64,
    pub j_perp: f64,
    /// Distance from the packet center to the first DD site.
    pub approach: usize,
    /// Sites left of the DD qubit.
    pub left_len: usize,
    /// Sites right of the DD qubit.
    pub right_len: usize,
}

impl Default for ScatteringGeometry {
    fn default() -> Self {
        Self::for_alpha(4.0 / 15.0)
    }
}

impl ScatteringGeometry {
    /// Smallest chain that keeps both outgoing packets clear of the DD qubit
    /// and of the chain ends at the end of [`Self::transit_time`].
    pub fn for_alpha(alpha: f64) -> Self {
        let tail = packet_tail(alpha);
        let approach = tail + 13;
        ScatteringGeometry {
            alpha,
            momentum: std::f64::consts::FRAC_PI_2,
            j_perp: 1.0,
            approach,
            left_len: (approach + tail + 3).max(2 * tail + 11),
            right_len: 2 * tail + 12,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.left_len + 2 + self.right_len
    }

    pub fn dd_site(&self) -> usize {
        self.left_len
    }

    pub fn packet(&self) -> PacketSpec {
        PacketSpec::new(
            self.alpha,
            (self.left_len - self.approach) as f64,
            (0..self.left_len).collect(),
        )
        .with_momentum(self.momentum)
    }

    /// Time for the packet to reach the DD qubit and move a full tail
    /// length plus a margin past it.
    pub fn transit_time(&self) -> f64 {
        (self.approach + packet_tail(self.alpha) + 8) as f64 / self.j_perp.abs()
    }

    pub fn validate(&self) -> Result<()> {
        self.packet().validate()?;
        if self.approach >= self.left_len {
            return Err(Error::InvalidParameter(format!(
                "approach {} does not fit a {}-site left chain",
                self.approach, self.left_len
            )));
        }
        if self.left_len < 2 || self.right_len < 2 {
            return Err(Error::InvalidParameter("chain segments need at least 2 sites".into()));
        }
        Ok(())
    }

    pub fn network(&self, jz: f64, h: f64) -> Result<SpinNetwork> {
        self.validate()?;
        build_chain(self.n_sites(), self.j_perp)?.embed_dd_qubit(self.dd_site(), jz, h)
    }
}

/// Sites beyond which a packet of width `1/alpha` carries below ~1e-8 per site.
pub fn packet_tail(alpha: f64) -> usize {
    (4.3 / alpha).ceil() as usize
}

/// Channel decomposition of a scattered state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringAmplitudes {
    pub t: Complex64,
    pub r: Complex64,
    /// Mobile flip right of the DD with the DD in `|1>`.
    pub transmission: f64,
    /// Mobile flip left of the DD with the DD in its incident state.
    pub reflection: f64,
    pub leakage: f64,
    /// Raw overlaps with the reference packets (phase source of `t`, `r`).
    pub t_overlap: Complex64,
    pub r_overlap: Complex64,
    /// Mean lattice momentum of the transmitted packet.
    pub transmitted_momentum: f64,
    pub time: f64,
    pub convention: String,
    pub report: EvolutionReport,
}

/// Where the flips of a two-flip configuration sit relative to the DD qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Channel {
    /// DD holds one flip in the given state, the mobile flip sits at `site`.
    Single { dd: u8, site: usize },
    BothDd,
    Escaped,
}

fn classify(config: &[u32], d: usize) -> Channel {
    let (a, b) = (config[0] as usize, config[1] as usize);
    let in_dd = |s: usize| s == d || s == d + 1;
    match (in_dd(a), in_dd(b)) {
        (true, true) => Channel::BothDd,
        (false, false) => Channel::Escaped,
        (true, false) => Channel::Single { dd: (a == d) as u8, site: b },
        (false, true) => Channel::Single { dd: (b == d) as u8, site: a },
    }
}

/// Locate the single DD qubit of a chain network.
fn chain_dd(net: &SpinNetwork) -> Result<(usize, f64)> {
    let n = net.n_sites();
    if net.bonds().len() != n - 1 || (0..n - 1).any(|i| net.bond_between(i, i + 1).is_none()) {
        return Err(Error::InvalidTopology("scattering needs a chain network".into()));
    }
    let dd = match net.dd_qubits() {
        [dd] if dd.d_plus_1 == dd.d + 1 => dd,
        _ => {
            return Err(Error::InvalidTopology(
                "scattering needs exactly one DD qubit (d, d+1) on the chain".into(),
            ))
        }
    };
    if dd.d < 2 || dd.d_plus_1 + 2 >= n {
        return Err(Error::InvalidTopology("DD qubit too close to a chain end".into()));
    }
    let j = net.bond_between(0, 1).map(|b| b.j_perp).unwrap_or(1.0);
    Ok((dd.d, j))
}

/// Free single-flip profile on an `n`-site chain after time `t`, plus the
/// diagonal baseline of that chain.
fn free_profile(n: usize, j_perp: f64, packet: &PacketSpec, t: f64) -> Result<(Vec<Complex64>, f64)> {
    let chain = build_chain(n, j_perp)?;
    let basis = SectorBasis::new(n, 1)?;
    let ham = assemble_hamiltonian(&chain, &basis)?;
    let spec = PacketSpec { support: (0..n).filter(|s| packet.support.contains(s)).collect(), ..packet.clone() };
    let start = make_packet(&basis, &spec, &[])?;
    let out = Propagator::chebyshev(&ham).evolve(&start.state, t)?;
    // basis index i of a single flip is the site i
    Ok((out.into_amplitudes(), ham.get(0, 0)))
}

/// Energy of the single-flip eigenstate with the largest weight on `site`
/// (the dressed DD bound state when `site` belongs to a DD qubit).
pub fn dressed_dd_energy(net: &SpinNetwork, site: usize) -> Result<f64> {
    let basis = SectorBasis::for_network(net, 1)?;
    let ham = assemble_hamiltonian(net, &basis)?;
    let eig = ham.to_dense()?.symmetric_eigen();
    let best = (0..basis.len())
        .max_by(|&a, &b| eig.eigenvectors[(site, a)].abs().total_cmp(&eig.eigenvectors[(site, b)].abs()))
        .expect("nonempty sector");
    Ok(eig.eigenvalues[best])
}

fn initial_state(
    basis: &SectorBasis,
    packet: &PacketSpec,
    d: usize,
    dd_amps: [Complex64; 2],
) -> Result<StateVector> {
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (state, &c) in dd_amps.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let frozen = if state == 0 { d + 1 } else { d };
        let p = make_packet(basis, packet, &[frozen])?;
        for (a, b) in amps.iter_mut().zip(p.state.amplitudes()) {
            *a += c * b;
        }
    }
    StateVector::normalized(amps)
}

struct Evolved {
    basis: SectorBasis,
    state: StateVector,
    report: EvolutionReport,
    d: usize,
    j_perp: f64,
    baseline: f64,
}

fn evolve_scattering(
    net: &SpinNetwork,
    packet: &PacketSpec,
    dd_amps: [Complex64; 2],
    t_final: f64,
    method: Method,
) -> Result<Evolved> {
    let (d, j_perp) = chain_dd(net)?;
    packet.validate_on(net)?;
    if packet.support.iter().any(|&s| s >= d) {
        return Err(Error::InvalidParameter("packet support must lie left of the DD qubit".into()));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    let basis = SectorBasis::for_network(net, 2)?;
    let ham = assemble_hamiltonian(net, &basis)?;
    let start = initial_state(&basis, packet, d, dd_amps)?;
    let (state, report) = Propagator::new(&ham, method)?.evolve_with_report(&start, t_final)?;
    let baseline = dressed_dd_energy(net, d + 1)?;
    let ev = Evolved { basis, state, report, d, j_perp, baseline };
    ev.check_separation(t_final)?;
    Ok(ev)
}

impl Evolved {
    fn check_separation(&self, time: f64) -> Result<()> {
        let n = self.basis.n_sites();
        let (mut inner, mut edge) = (0.0, 0.0);
        for (config, a) in self.basis.iter().zip(self.state.amplitudes()) {
            let p = a.norm_sqr();
            match classify(config, self.d) {
                Channel::BothDd => inner += p,
                Channel::Single { site, .. } => {
                    let dist = if site < self.d { self.d - site } else { site - self.d - 1 };
                    if dist <= INTERACTION_RADIUS {
                        inner += p;
                    }
                    if site < EDGE_SITES || site >= n - EDGE_SITES {
                        edge += p;
                    }
                }
                Channel::Escaped => {}
            }
        }
        if edge > BOUNDARY_TOL {
            return Err(Error::BoundaryReached { region: "chain ends".into(), occupancy: edge });
        }
        if inner > SEPARATION_TOL {
            return Err(Error::NotSeparated { time, occupancy: inner });
        }
        Ok(())
    }

    /// Mobile-flip profile over all sites for a given DD state and side.
    fn profile(&self, dd: u8, right: bool) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.n_sites()];
        for (config, a) in self.basis.iter().zip(self.state.amplitudes()) {
            if let Channel::Single { dd: s, site } = classify(config, self.d) {
                if s == dd && (site > self.d) == right {
                    out[site] = *a;
                }
            }
        }
        out
    }

    fn amplitudes(&self, packet: &PacketSpec, dd_state: u8, time: f64) -> Result<ScatteringAmplitudes> {
        let n = self.basis.n_sites();
        let trans = self.profile(1, true);
        let refl = self.profile(dd_state, false);
        let transmission: f64 = trans.iter().map(|a| a.norm_sqr()).sum();
        let reflection: f64 = refl.iter().map(|a| a.norm_sqr()).sum();

        let (free, free_base) = free_profile(n, self.j_perp, packet, time)?;
        let (walled, wall_base) = free_profile(self.d, self.j_perp, packet, time)?;
        let undo = Complex64::from_polar(1.0, (self.baseline - free_base) * time);
        let t_overlap: Complex64 =
            (1..n).map(|j| free[j - 1].conj() * trans[j]).sum::<Complex64>() * undo;
        let undo = Complex64::from_polar(1.0, (self.baseline - wall_base) * time);
        let r_overlap: Complex64 = (0..self.d).map(|j| walled[j].conj() * refl[j]).sum::<Complex64>() * undo;

        let phase = |z: Complex64| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        let right: Vec<Complex64> = trans[self.d + 2..].to_vec();
        Ok(ScatteringAmplitudes {
            t: phase(t_overlap) * transmission.sqrt(),
            r: phase(r_overlap) * reflection.sqrt(),
            transmission,
            reflection,
            leakage: (1.0 - transmission - reflection).max(0.0),
            t_overlap,
            r_overlap,
            transmitted_momentum: mean_momentum(&right),
            time,
            convention: SHIFT_CONVENTION.to_string(),
            report: self.report.clone(),
        })
    }
}

/// Scatter `packet` off the DD qubit of a chain prepared in `dd_state`.
pub fn scatter_off_dd(
    net: &SpinNetwork,
    packet: &PacketSpec,
    dd_state: u8,
    t_final: f64,
) -> Result<ScatteringAmplitudes> {
    scatter_off_dd_with(net, packet, dd_state, t_final, Method::Chebyshev)
}

pub fn scatter_off_dd_with(
    net: &SpinNetwork,
    packet: &PacketSpec,
    dd_state: u8,
    t_final: f64,
    method: Method,
) -> Result<ScatteringAmplitudes> {
    if dd_state > 1 {
        return Err(Error::InvalidParameter(format!("DD state must be 0 or 1, got {dd_state}")));
    }
    let mut amps = [Complex64::new(0.0, 0.0); 2];
    amps[dd_state as usize] = Complex64::new(1.0, 0.0);
    let ev = evolve_scattering(net, packet, amps, t_final, method)?;
    ev.amplitudes(packet, dd_state, t_final)
}

/// Probability that the DD qubit ends in `|1>` jointly with a transmitted
/// packet, for a DD initially in `|0>`.
pub fn dd_switch_fidelity(net: &SpinNetwork, packet: &PacketSpec, t_final: f64) -> Result<f64> {
    Ok(scatter_off_dd(net, packet, 0, t_final)?.transmission)
}

/// Outcome of scattering off a DD qubit prepared in `a|0> + b|1>`.
#[derive(Clone, Debug)]
pub struct SuperpositionScattering {
    /// Reduced state of (DD qubit, side) with side `0` = left, `1` = right.
    pub density: TwoQubitDensity,
    pub concurrence: f64,
    /// Weight outside the single-flip-per-DD channels.
    pub leakage: f64,
    pub final_state: StateVector,
    pub report: EvolutionReport,
}

/// Scatter off a DD superposition and reduce to the (DD, side) two-qubit state
/// by tracing out the packet position.
pub fn scatter_superposition(
    net: &SpinNetwork,
    packet: &PacketSpec,
    a: Complex64,
    b: Complex64,
    t_final: f64,
) -> Result<SuperpositionScattering> {
    let ev = evolve_scattering(net, packet, [a, b], t_final, Method::Chebyshev)?;
    // index = 2 * dd + side
    let branches: Vec<Vec<Complex64>> = (0..4)
        .map(|q| ev.profile((q / 2) as u8, q % 2 == 1))
        .collect();
    let gram = DMatrix::from_fn(4, 4, |r, c| {
        branches[c].iter().zip(&branches[r]).map(|(x, y)| x.conj() * y).sum::<Complex64>()
    });
    let kept = gram.trace().re;
    let density = TwoQubitDensity::from_unnormalized(gram)?;
    Ok(SuperpositionScattering {
        concurrence: density.concurrence(),
        density,
        leakage: (1.0 - kept).max(0.0),
        final_state: ev.state,
        report: ev.report,
    })
}

/// Closed evolution of the four-site system `flip | DD | empty` at resonance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourSiteSwitch {
    /// `pi sqrt(2) / J`, the first time the three-level chain reaches its end.
    pub transfer_time: f64,
    /// Target probability in the three-level model.
    pub three_level: f64,
    /// Target probability in the full two-flip sector of the four sites.
    pub full_sector: f64,
}

/// Transfer `|1,0,1,0> -> |0,1,0,1>` on sites `0..4` with the DD on sites 1, 2.
pub fn four_site_switch(h: f64, jz: f64, j_perp: f64) -> Result<FourSiteSwitch> {
    let net = build_chain(4, j_perp)?.embed_dd_qubit(1, jz, h)?;
    let basis = SectorBasis::for_network(&net, 2)?;
    let ham = assemble_hamiltonian(&net, &basis)?;
    let idx = |s: &[usize]| basis.index_of(s).expect("two-flip configuration");
    let span = [idx(&[0, 2]), idx(&[1, 2]), idx(&[1, 3])];
    let transfer_time = std::f64::consts::PI * 2f64.sqrt() / j_perp.abs();

    let block = DMatrix::from_fn(3, 3, |r, c| ham.get(span[r], span[c]));
    let eig = block.symmetric_eigen();
    let amp: Complex64 = (0..3)
        .map(|k| {
            Complex64::from_polar(
                eig.eigenvectors[(2, k)] * eig.eigenvectors[(0, k)],
                -eig.eigenvalues[k] * transfer_time,
            )
        })
        .sum();

    let start = StateVector::basis_state(basis.len(), span[0]);
    let out = Propagator::new(&ham, Method::DenseExpm)?.evolve(&start, transfer_time)?;
    Ok(FourSiteSwitch {
        transfer_time,
        three_level: amp.norm_sqr(),
        full_sector: out.amplitudes()[span[2]].norm_sqr(),
    })
}

/// One `(h, Jz)` point of a transmission map.
#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub h: f64,
    pub jz: f64,
    pub outcome: std::result::Result<ScatteringAmplitudes, String>,
}

#[derive(Clone, Debug)]
pub struct TransmissionSurface {
    pub geometry: ScatteringGeometry,
    pub points: Vec<ScanPoint>,
}

impl TransmissionSurface {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }

    pub fn transmission(&self, h: f64, jz: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.h == h && p.jz == jz)
            .and_then(|p| p.outcome.as_ref().ok())
            .map(|a| a.transmission)
    }

    /// `h` maximizing `T` at fixed `Jz`, among successful points.
    pub fn argmax_h(&self, jz: f64) -> Option<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.jz == jz)
            .filter_map(|p| p.outcome.as_ref().ok().map(|a| (p.h, a.transmission)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Incident-`|0>` transmission over every `(h, Jz)` pair; rows are ordered
/// by `Jz` then `h`. A point that is not separated at the nominal transit time
/// is retried once with a longer time; remaining failures are stored per point.
pub fn transmission_scan(
    geometry: &ScatteringGeometry,
    h_values: &[f64],
    jz_values: &[f64],
) -> Result<TransmissionSurface> {
    geometry.validate()?;
    if let Some(x) = h_values.iter().chain(jz_values).find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("scan values must be finite and >= 0, got {x}")));
    }
    let packet = geometry.packet();
    let t0 = geometry.transit_time();
    let grid: Vec<(f64, f64)> = jz_values
        .iter()
        .flat_map(|&jz| h_values.iter().map(move |&h| (h, jz)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(h, jz)| {
            let run = |t: f64| geometry.network(jz, h).and_then(|net| scatter_off_dd(&net, &packet, 0, t));
            let outcome = match run(t0) {
                Err(Error::NotSeparated { .. }) => run(t0 + 6.0 / geometry.j_perp.abs()),
                other => other,
            };
            ScanPoint { h, jz, outcome: outcome.map_err(|e| e.to_string()) }
        })
        .collect();
    Ok(TransmissionSurface { geometry: geometry.clone(), points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(h: f64, jz: f64, dd: u8) -> ScatteringAmplitudes {
        let g = ScatteringGeometry::default();
        let net = g.network(jz, h).unwrap();
        scatter_off_dd(&net, &g.packet(), dd, g.transit_time()).unwrap()
    }

    #[test]
    fn default_geometry_fits() {
        let g = ScatteringGeometry::default();
        assert_eq!(packet_tail(g.alpha), 17);
        assert!(g.n_sites() < 100);
        let p = make_packet(&SectorBasis::new(g.n_sites(), 1).unwrap(), &g.packet(), &[]).unwrap();
        assert!(!p.is_truncated());
    }

    #[test]
    fn resonant_transmission_switches_dd() {
        let a = run(10.0, 10.0, 0);
        assert!(a.transmission >= 0.98, "{a:?}");
        assert!((a.transmission + a.reflection + a.leakage - 1.0).abs() < 1e-6);
        assert!(a.report.is_clean());
        let k = std::f64::consts::FRAC_PI_2;
        assert!((a.transmitted_momentum - k).abs() < 0.02 * k);
    }

    #[test]
    fn dd_in_one_reflects() {
        let a = run(10.0, 10.0, 1);
        assert!(a.reflection >= 0.99, "{a:?}");
        assert!(a.transmission < 1e-6);
    }

    #[test]
    fn off_diagonal_point_transmits_less() {
        let on = run(12.0, 12.0, 0).transmission;
        let off = run(8.0, 12.0, 0).transmission;
        assert!(off < on, "{off} vs {on}");
    }

    #[test]
    fn switch_equals_transmission() {
        let g = ScatteringGeometry::default();
        let net = g.network(10.0, 10.0).unwrap();
        let f = dd_switch_fidelity(&net, &g.packet(), g.transit_time()).unwrap();
        assert!((f - run(10.0, 10.0, 0).transmission).abs() < 1e-6);
    }

    #[test]
    fn weak_field_switch_degrades() {
        let g = ScatteringGeometry::default();
        let net = g.network(2.0, 2.0).unwrap();
        let weak = dd_switch_fidelity(&net, &g.packet(), g.transit_time()).unwrap();
        let strong = run(10.0, 10.0, 0).transmission;
        assert!(1.0 - weak > 10.0 * (1.0 - strong), "{weak} vs {strong}");
    }

    #[test]
    fn four_site_transfer() {
        let s = four_site_switch(10.0, 10.0, 1.0).unwrap();
        assert!((s.three_level - 1.0).abs() < 1e-6);
        assert!(s.full_sector >= 0.99);
    }

    #[test]
    fn resonant_scattering_does_not_entangle() {
        let g = ScatteringGeometry::default();
        let net = g.network(10.0, 10.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = scatter_superposition(&net, &g.packet(), Complex64::new(h, 0.0), Complex64::new(h, 0.0), g.transit_time()).unwrap();
        assert!(s.concurrence < 0.02, "{}", s.concurrence);
    }

    #[test]
    fn superposition_is_linear() {
        let g = ScatteringGeometry::default();
        let net = g.network(10.0, 9.0).unwrap();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let c0 = Complex64::new(0.0, 0.0);
        let c1 = Complex64::new(1.0, 0.0);
        let t = g.transit_time();
        let run = |amps| evolve_scattering(&net, &g.packet(), amps, t, Method::Chebyshev).unwrap().state;
        let mixed = run([a, b]);
        let zero = run([c1, c0]);
        let one = run([c0, c1]);
        let worst = mixed
            .amplitudes()
            .iter()
            .zip(zero.amplitudes().iter().zip(one.amplitudes()))
            .map(|(m, (z, o))| (m - (a * z + b * o)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn scan_keeps_row_order_and_records_failures() {
        let g = ScatteringGeometry::default();
        let s = transmission_scan(&g, &[9.0, 10.0], &[10.0]).unwrap();
        assert_eq!(s.points.len(), 2);
        assert_eq!((s.points[0].h, s.points[1].h), (9.0, 10.0));
        assert_eq!(s.failures(), 0);
        assert_eq!(s.argmax_h(10.0).unwrap().0, 10.0);
        assert!(transmission_scan(&g, &[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn unseparated_packet_reported() {
        let g = ScatteringGeometry::default();
        let net = g.network(10.0, 10.0).unwrap();
        let early = scatter_off_dd(&net, &g.packet(), 0, g.approach as f64);
        assert!(matches!(early, Err(Error::NotSeparated { .. })));
    }
}
