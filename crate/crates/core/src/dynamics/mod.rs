//! Gaussian single-flip wave packets, time evolution and region measurements.

mod bessel;
mod propagator;

pub use bessel::bessel_j_sequence;
pub use propagator::{EvolutionReport, Method, Propagator, DENSE_PROPAGATOR_LIMIT};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SectorBasis, StateVector};
use crate::network::SpinNetwork;

/// Truncated packet weight above which a packet is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-8;

/// Gaussian packet `exp(-(alpha^2/2)(j - center)^2 + i momentum j)` over an
/// ordered site list; `j` is the position inside `support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub alpha: f64,
    pub center: f64,
    pub momentum: f64,
    pub support: Vec<usize>,
}

impl PacketSpec {
    /// Packet at momentum `pi/2`, moving toward increasing support index.
    pub fn new(alpha: f64, center: f64, support: Vec<usize>) -> Self {
        PacketSpec {
            alpha,
            center,
            momentum: std::f64::consts::FRAC_PI_2,
            support,
        }
    }

    pub fn with_momentum(mut self, momentum: f64) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "packet alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        if !self.center.is_finite() || !self.momentum.is_finite() {
            return Err(Error::InvalidParameter("non-finite packet center or momentum".into()));
        }
        if self.support.is_empty() {
            return Err(Error::InvalidParameter("empty packet support".into()));
        }
        Ok(())
    }

    /// Checks that consecutive support sites are bonded in `net`.
    pub fn validate_on(&self, net: &SpinNetwork) -> Result<()> {
        self.validate()?;
        for w in self.support.windows(2) {
            match net.bond_between(w[0], w[1]) {
                Some(b) if b.j_perp != 0.0 => {}
                _ => {
                    return Err(Error::InvalidTopology(format!(
                        "packet support sites {} and {} are not a hopping path",
                        w[0], w[1]
                    )))
                }
            }
        }
        Ok(())
    }

    /// Half-width (in sites) beyond which the packet probability per site
    /// drops below `cut`.
    pub fn tail_length(&self, cut: f64) -> f64 {
        (-cut.ln()).sqrt() / self.alpha
    }

    fn envelope(&self, j: f64) -> f64 {
        (-0.5 * self.alpha * self.alpha * (j - self.center).powi(2)).exp()
    }

    /// Probability mass of the untruncated packet lying outside the support.
    pub fn truncated_weight(&self) -> f64 {
        let inside: f64 = (0..self.support.len()).map(|j| self.envelope(j as f64).powi(2)).sum();
        let reach = (self.tail_length(1e-300)).ceil() as i64 + 2;
        let c = self.center.round() as i64;
        let total: f64 = (c - reach..=c + reach).map(|j| self.envelope(j as f64).powi(2)).sum();
        (1.0 - inside / total).max(0.0)
    }
}

/// A prepared packet together with its truncation diagnostics.
#[derive(Clone, Debug)]
pub struct Packet {
    pub state: StateVector,
    pub truncated_weight: f64,
}

impl Packet {
    pub fn is_truncated(&self) -> bool {
        self.truncated_weight > TRUNCATION_WARNING
    }
}

/// Build the packet state on configurations `{support[j]} ∪ frozen_flips`,
/// normalized to unit norm.
pub fn make_packet(basis: &SectorBasis, spec: &PacketSpec, frozen_flips: &[usize]) -> Result<Packet> {
    spec.validate()?;
    if basis.k() != frozen_flips.len() + 1 {
        return Err(Error::InvalidParameter(format!(
            "sector k = {} but packet needs 1 + {} flips",
            basis.k(),
            frozen_flips.len()
        )));
    }
    if let Some(s) = spec.support.iter().find(|s| frozen_flips.contains(s)) {
        return Err(Error::InvalidParameter(format!(
            "frozen flip on packet support site {s}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
    let mut config = frozen_flips.to_vec();
    config.push(0);
    for (j, &site) in spec.support.iter().enumerate() {
        let jf = j as f64;
        *config.last_mut().expect("nonempty") = site;
        let idx = basis.index_of(&config).ok_or_else(|| {
            Error::InvalidParameter(format!("configuration {config:?} not in sector"))
        })?;
        amps[idx] = Complex64::from_polar(spec.envelope(jf), spec.momentum * jf);
    }
    Ok(Packet {
        state: StateVector::normalized(amps)?,
        truncated_weight: spec.truncated_weight(),
    })
}

/// Diagonal projector onto the configurations selected by a predicate.
#[derive(Clone, Debug)]
pub struct RegionProjector {
    label: String,
    mask: Vec<bool>,
}

impl RegionProjector {
    pub fn from_predicate<F>(basis: &SectorBasis, label: impl Into<String>, pred: F) -> Self
    where
        F: Fn(&[u32]) -> bool,
    {
        RegionProjector {
            label: label.into(),
            mask: basis.iter().map(pred).collect(),
        }
    }

    /// Configurations with at least one flip inside `sites`.
    pub fn any_flip_in(basis: &SectorBasis, label: impl Into<String>, sites: &[usize]) -> Self {
        let mut inside = vec![false; basis.n_sites()];
        for &s in sites {
            inside[s] = true;
        }
        Self::from_predicate(basis, label, |c| c.iter().any(|&f| inside[f as usize]))
    }

    pub fn full(basis: &SectorBasis) -> Self {
        RegionProjector { label: "all".into(), mask: vec![true; basis.len()] }
    }

    pub fn complement(&self) -> Self {
        RegionProjector {
            label: format!("not {}", self.label),
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.check(v)?;
        let amps = v
            .amplitudes()
            .iter()
            .zip(&self.mask)
            .map(|(&a, &m)| if m { a } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok(StateVector::component(amps))
    }

    fn check(&self, v: &StateVector) -> Result<()> {
        if v.dim() != self.mask.len() {
            return Err(Error::DimensionMismatch { expected: self.mask.len(), found: v.dim() });
        }
        Ok(())
    }
}

/// `<v|P|v>`.
pub fn region_probability(v: &StateVector, p: &RegionProjector) -> Result<f64> {
    p.check(v)?;
    Ok(v
        .amplitudes()
        .iter()
        .zip(&p.mask)
        .filter(|(_, &m)| m)
        .map(|(a, _)| a.norm_sqr())
        .sum())
}

/// Post-selection: returns `(P v / ||P v||, ||P v||^2)`.
pub fn project_and_renormalize(v: &StateVector, p: &RegionProjector) -> Result<(StateVector, f64)> {
    let projected = p.apply(v)?;
    let prob = projected.norm_sqr();
    if prob <= 0.0 {
        return Err(Error::ZeroProbability(p.label.clone()));
    }
    let state = StateVector::normalized(projected.into_amplitudes())?;
    Ok((state, prob))
}

/// Probability of a flip on each site.
pub fn site_occupations(basis: &SectorBasis, v: &StateVector) -> Vec<f64> {
    let mut occ = vec![0.0; basis.n_sites()];
    for (config, a) in basis.iter().zip(v.amplitudes()) {
        let p = a.norm_sqr();
        for &f in config {
            occ[f as usize] += p;
        }
    }
    occ
}

/// Mean and standard deviation of a position distribution given as
/// `(coordinate, weight)` pairs.
pub fn position_moments(weights: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    for (x, w) in weights {
        w0 += w;
        w1 += w * x;
        w2 += w * x * x;
    }
    let mean = w1 / w0;
    (mean, (w2 / w0 - mean * mean).max(0.0).sqrt())
}

/// Mean lattice momentum of a single-flip amplitude profile along a path,
/// `arg sum_j conj(psi_j) psi_{j+1}`.
pub fn mean_momentum(profile: &[Complex64]) -> f64 {
    profile
        .windows(2)
        .map(|w| w[0].conj() * w[1])
        .sum::<Complex64>()
        .arg()
}
