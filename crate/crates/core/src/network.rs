//! Spin-network topologies: uniform chains, Y and 1×n splitters, and embedded
//! double-dot (DD) qubits.
//!
//! A network is a graph of spin-1/2 sites with XXZ bonds. Every bond carries a
//! transverse coupling `j_perp` (single-excitation hopping element
//! `-j_perp / 2`) and an Ising coupling `j_z`; every site carries a local field.
//! A DD qubit is a bonded pair `(d, d+1)` whose bond is pure Ising (`j_perp = 0`)
//! and whose two sites carry the field `h`.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub j_perp: f64,
    pub j_z: f64,
}

impl Bond {
    fn key(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }

    pub fn connects(&self, a: usize, b: usize) -> bool {
        self.key() == (a.min(b), a.max(b))
    }
}

/// A double-dot qubit. `|0>` has the flip on `d_plus_1`, `|1>` has it on `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdQubit {
    pub d: usize,
    pub d_plus_1: usize,
    pub jz: f64,
    pub h: f64,
}

impl DdQubit {
    /// Site holding the confined flip for the given logical state.
    pub fn flip_site(&self, state: u8) -> usize {
        if state == 0 {
            self.d_plus_1
        } else {
            self.d
        }
    }

    pub fn contains(&self, site: usize) -> bool {
        site == self.d || site == self.d_plus_1
    }
}

/// Named, ordered group of sites (a lead or an arm). Sites are listed in the
/// direction of forward propagation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub sites: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinNetwork {
    n_sites: usize,
    bonds: Vec<Bond>,
    fields: Vec<f64>,
    dd_qubits: Vec<DdQubit>,
    regions: Vec<Region>,
}

impl SpinNetwork {
    /// Assemble and validate a network from raw parts.
    pub fn from_parts(
        n_sites: usize,
        bonds: Vec<Bond>,
        fields: Vec<f64>,
        dd_qubits: Vec<DdQubit>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        let net = SpinNetwork {
            n_sites,
            bonds,
            fields,
            dd_qubits,
            regions,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn field(&self, site: usize) -> f64 {
        self.fields[site]
    }

    pub fn dd_qubits(&self) -> &[DdQubit] {
        &self.dd_qubits
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.bonds.iter().find(|bd| bd.connects(a, b))
    }

    /// Adjacency list: for every site, `(neighbor, bond index)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_sites];
        for (idx, b) in self.bonds.iter().enumerate() {
            adj[b.i].push((b.j, idx));
            adj[b.j].push((b.i, idx));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Largest absolute coupling or field, used as an energy scale.
    pub fn energy_scale(&self) -> f64 {
        let bonds = self
            .bonds
            .iter()
            .map(|b| b.j_perp.abs().max(b.j_z.abs()));
        let fields = self.fields.iter().map(|h| h.abs());
        bonds.chain(fields).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidTopology("network has no sites".into()));
        }
        if self.fields.len() != self.n_sites {
            return Err(Error::InvalidTopology(format!(
                "{} fields for {} sites",
                self.fields.len(),
                self.n_sites
            )));
        }
        if let Some(h) = self.fields.iter().find(|h| !h.is_finite()) {
            return Err(Error::InvalidTopology(format!("non-finite field {h}")));
        }
        let mut seen = BTreeSet::new();
        for b in &self.bonds {
            if b.i >= self.n_sites || b.j >= self.n_sites {
                return Err(Error::InvalidTopology(format!(
                    "bond ({}, {}) references a missing site",
                    b.i, b.j
                )));
            }
            if b.i == b.j {
                return Err(Error::InvalidTopology(format!("self-loop on site {}", b.i)));
            }
            if !b.j_perp.is_finite() || !b.j_z.is_finite() {
                return Err(Error::InvalidTopology(format!(
                    "non-finite coupling on bond ({}, {})",
                    b.i, b.j
                )));
            }
            if !seen.insert(b.key()) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate bond ({}, {})",
                    b.i, b.j
                )));
            }
        }

        let mut dd_sites = BTreeSet::new();
        for dd in &self.dd_qubits {
            if !dd_sites.insert(dd.d) || !dd_sites.insert(dd.d_plus_1) {
                return Err(Error::InvalidTopology(format!(
                    "DD qubits overlap at sites ({}, {})",
                    dd.d, dd.d_plus_1
                )));
            }
            if !(dd.jz >= 0.0 && dd.h >= 0.0 && dd.jz.is_finite() && dd.h.is_finite()) {
                return Err(Error::InvalidTopology(format!(
                    "DD qubit ({}, {}) needs finite jz >= 0 and h >= 0",
                    dd.d, dd.d_plus_1
                )));
            }
            match self.bond_between(dd.d, dd.d_plus_1) {
                Some(b) if b.j_perp == 0.0 && b.j_z == dd.jz => {}
                Some(_) => {
                    return Err(Error::InvalidTopology(format!(
                        "DD bond ({}, {}) must be pure Ising with j_z = {}",
                        dd.d, dd.d_plus_1, dd.jz
                    )))
                }
                None => {
                    return Err(Error::InvalidTopology(format!(
                        "DD sites ({}, {}) are not bonded",
                        dd.d, dd.d_plus_1
                    )))
                }
            }
        }
        for b in &self.bonds {
            let internal = self
                .dd_qubits
                .iter()
                .any(|dd| b.connects(dd.d, dd.d_plus_1));
            if !internal && b.j_perp == 0.0 {
                return Err(Error::InvalidTopology(format!(
                    "transport bond ({}, {}) has zero j_perp",
                    b.i, b.j
                )));
            }
        }

        for r in &self.regions {
            if let Some(s) = r.sites.iter().find(|&&s| s >= self.n_sites) {
                return Err(Error::InvalidTopology(format!(
                    "region '{}' references missing site {s}",
                    r.name
                )));
            }
        }

        // connectivity
        let adj = self.adjacency();
        let mut visited = vec![false; self.n_sites];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(s) = queue.pop_front() {
            for &(nb, _) in &adj[s] {
                if !visited[nb] {
                    visited[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        if let Some(s) = visited.iter().position(|v| !v) {
            return Err(Error::InvalidTopology(format!("site {s} is disconnected")));
        }
        Ok(())
    }

    /// Turn the bonded pair `(position, position + 1)` into a DD qubit.
    pub fn embed_dd_qubit(&self, position: usize, jz: f64, h: f64) -> Result<Self> {
        self.embed_dd_pair(position, position + 1, jz, h)
    }

    /// Turn an arbitrary bonded pair `(d, d_plus_1)` into a DD qubit.
    pub fn embed_dd_pair(&self, d: usize, d_plus_1: usize, jz: f64, h: f64) -> Result<Self> {
        if d_plus_1 >= self.n_sites || d >= self.n_sites {
            return Err(Error::InvalidTopology(format!(
                "DD sites ({d}, {d_plus_1}) outside a {}-site network",
                self.n_sites
            )));
        }
        if self
            .dd_qubits
            .iter()
            .any(|dd| dd.contains(d) || dd.contains(d_plus_1))
        {
            return Err(Error::InvalidTopology(format!(
                "DD qubit at ({d}, {d_plus_1}) overlaps an existing DD qubit"
            )));
        }
        let mut net = self.clone();
        let bond = net
            .bonds
            .iter_mut()
            .find(|b| b.connects(d, d_plus_1))
            .ok_or_else(|| {
                Error::InvalidTopology(format!("sites ({d}, {d_plus_1}) are not bonded"))
            })?;
        bond.j_perp = 0.0;
        bond.j_z = jz;
        net.fields[d] += h;
        net.fields[d_plus_1] += h;
        net.dd_qubits.push(DdQubit { d, d_plus_1, jz, h });
        net.validate()?;
        Ok(net)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&NetworkFile::from(self)).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: NetworkFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.into_network()
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Uniform open chain with transverse coupling `j_perp` on every bond.
pub fn build_chain(length: usize, j_perp: f64) -> Result<SpinNetwork> {
    if length < 2 {
        return Err(Error::InvalidTopology(format!(
            "chain needs at least 2 sites, got {length}"
        )));
    }
    if j_perp == 0.0 || !j_perp.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "chain coupling must be finite and nonzero, got {j_perp}"
        )));
    }
    let bonds = (0..length - 1)
        .map(|i| Bond {
            i,
            j: i + 1,
            j_perp,
            j_z: 0.0,
        })
        .collect();
    SpinNetwork::from_parts(
        length,
        bonds,
        vec![0.0; length],
        Vec::new(),
        vec![Region {
            name: "chain".into(),
            sites: (0..length).collect(),
        }],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitterKind {
    /// Lead splits into two arms with node couplings `alpha * J` and `beta * J`.
    Y { alpha: f64, beta: f64 },
    /// Lead splits into `n` arms with equal node couplings `J / sqrt(n)`.
    OneToN { n: usize },
}

impl SplitterKind {
    pub fn balanced_y() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        SplitterKind::Y { alpha: a, beta: a }
    }

    pub fn n_arms(&self) -> usize {
        match self {
            SplitterKind::Y { .. } => 2,
            SplitterKind::OneToN { n } => *n,
        }
    }

    /// Node-to-arm coupling multipliers (relative to the chain coupling).
    pub fn arm_couplings(&self) -> Vec<f64> {
        match *self {
            SplitterKind::Y { alpha, beta } => vec![alpha, beta],
            SplitterKind::OneToN { n } => vec![1.0 / (n as f64).sqrt(); n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitterKind::Y { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::InvalidParameter("non-finite splitter coupling".into()));
                }
                let norm = alpha * alpha + beta * beta;
                if (norm - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "Y splitter needs alpha^2 + beta^2 = 1, got {norm}"
                    )));
                }
            }
            SplitterKind::OneToN { n } => {
                if n < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "1xn splitter needs n >= 2, got {n}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Closing splitter that recombines the arms into an output lead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSplitter {
    pub kind: SplitterKind,
    pub lead_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    pub kind: SplitterKind,
    pub j_perp: f64,
    /// Input lead length; its last site is the node.
    pub lead_len: usize,
    pub arm_lens: Vec<usize>,
    pub arm_labels: Vec<String>,
    pub output: Option<OutputSplitter>,
}

impl SplitterSpec {
    /// Splitter with equal-length arms labelled `A`, `B`, ... (or `1..n`).
    pub fn new(kind: SplitterKind, lead_len: usize, arm_len: usize) -> Self {
        let n = kind.n_arms();
        let arm_labels = match kind {
            SplitterKind::Y { .. } => vec!["A".to_string(), "B".to_string()],
            SplitterKind::OneToN { .. } => (1..=n).map(|l| format!("arm{l}")).collect(),
        };
        SplitterSpec {
            kind,
            j_perp: 1.0,
            lead_len,
            arm_lens: vec![arm_len; n],
            arm_labels,
            output: None,
        }
    }

    pub fn with_output(mut self, kind: SplitterKind, lead_len: usize) -> Self {
        self.output = Some(OutputSplitter { kind, lead_len });
        self
    }

    pub fn with_arm_lens(mut self, arm_lens: Vec<usize>) -> Self {
        self.arm_lens = arm_lens;
        self
    }

    pub fn with_j_perp(mut self, j_perp: f64) -> Self {
        self.j_perp = j_perp;
        self
    }
}

/// DD qubit position inside a splitter arm: occupies arm sites `offset` and
/// `offset + 1`, counted from the input node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdPlacement {
    pub arm: usize,
    pub offset: usize,
    pub jz: f64,
    pub h: f64,
}

/// Build a splitter (or a closed two-splitter interferometer when
/// `spec.output` is set) and embed the requested DD qubits.
///
/// Site layout: input lead `0..lead_len` (node = last lead site), then each arm
/// in order, then the output lead whose first site is the closing node.
/// Regions: `lead`, one per arm label, and `out`.
pub fn build_splitter_network(
    spec: &SplitterSpec,
    dd_placements: &[DdPlacement],
) -> Result<SpinNetwork> {
    spec.kind.validate()?;
    let n_arms = spec.kind.n_arms();
    if spec.arm_lens.len() != n_arms || spec.arm_labels.len() != n_arms {
        return Err(Error::InvalidTopology(format!(
            "{n_arms} arms expected, got {} lengths and {} labels",
            spec.arm_lens.len(),
            spec.arm_labels.len()
        )));
    }
    if spec.lead_len < 1 || spec.arm_lens.iter().any(|&l| l < 1) {
        return Err(Error::InvalidTopology("empty lead or arm".into()));
    }
    if spec.j_perp == 0.0 || !spec.j_perp.is_finite() {
        return Err(Error::InvalidParameter("splitter j_perp must be nonzero".into()));
    }
    let j = spec.j_perp;
    let mut bonds = Vec::new();
    let mut regions = Vec::new();

    let lead: Vec<usize> = (0..spec.lead_len).collect();
    for w in lead.windows(2) {
        bonds.push(Bond { i: w[0], j: w[1], j_perp: j, j_z: 0.0 });
    }
    let node_in = spec.lead_len - 1;
    regions.push(Region { name: "lead".into(), sites: lead });

    let mut next = spec.lead_len;
    let mut arms = Vec::with_capacity(n_arms);
    for (&len, coupling) in spec.arm_lens.iter().zip(spec.kind.arm_couplings()) {
        let sites: Vec<usize> = (next..next + len).collect();
        next += len;
        bonds.push(Bond { i: node_in, j: sites[0], j_perp: coupling * j, j_z: 0.0 });
        for w in sites.windows(2) {
            bonds.push(Bond { i: w[0], j: w[1], j_perp: j, j_z: 0.0 });
        }
        arms.push(sites);
    }

    if let Some(out) = &spec.output {
        out.kind.validate()?;
        if out.kind.n_arms() != n_arms {
            return Err(Error::InvalidTopology(format!(
                "closing splitter has {} arms, opening has {n_arms}",
                out.kind.n_arms()
            )));
        }
        if out.lead_len < 1 {
            return Err(Error::InvalidTopology("empty output lead".into()));
        }
        let out_sites: Vec<usize> = (next..next + out.lead_len).collect();
        next += out.lead_len;
        let node_out = out_sites[0];
        for (arm, coupling) in arms.iter().zip(out.kind.arm_couplings()) {
            bonds.push(Bond {
                i: *arm.last().expect("arm is nonempty"),
                j: node_out,
                j_perp: coupling * j,
                j_z: 0.0,
            });
        }
        for w in out_sites.windows(2) {
            bonds.push(Bond { i: w[0], j: w[1], j_perp: j, j_z: 0.0 });
        }
        for (label, sites) in spec.arm_labels.iter().zip(&arms) {
            regions.push(Region { name: label.clone(), sites: sites.clone() });
        }
        regions.push(Region { name: "out".into(), sites: out_sites });
    } else {
        for (label, sites) in spec.arm_labels.iter().zip(&arms) {
            regions.push(Region { name: label.clone(), sites: sites.clone() });
        }
    }

    let mut net = SpinNetwork::from_parts(next, bonds, vec![0.0; next], Vec::new(), regions)?;
    for p in dd_placements {
        let arm = arms.get(p.arm).ok_or_else(|| {
            Error::InvalidTopology(format!("DD placement in missing arm {}", p.arm))
        })?;
        if p.offset + 1 >= arm.len() {
            return Err(Error::InvalidTopology(format!(
                "DD at offset {} does not fit in arm '{}' of length {}",
                p.offset,
                spec.arm_labels[p.arm],
                arm.len()
            )));
        }
        net = net.embed_dd_pair(arm[p.offset], arm[p.offset + 1], p.jz, p.h)?;
    }
    Ok(net)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldEntry {
    site: usize,
    h: f64,
}

/// On-disk network description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    n_sites: usize,
    #[serde(default)]
    bonds: Vec<Bond>,
    #[serde(default)]
    fields: Vec<FieldEntry>,
    #[serde(default)]
    dd_qubits: Vec<DdQubit>,
    #[serde(default)]
    regions: Vec<Region>,
}

impl From<&SpinNetwork> for NetworkFile {
    fn from(net: &SpinNetwork) -> Self {
        NetworkFile {
            n_sites: net.n_sites,
            bonds: net.bonds.clone(),
            fields: net
                .fields
                .iter()
                .enumerate()
                .filter(|(_, &h)| h != 0.0)
                .map(|(site, &h)| FieldEntry { site, h })
                .collect(),
            dd_qubits: net.dd_qubits.clone(),
            regions: net.regions.clone(),
        }
    }
}

impl NetworkFile {
    fn into_network(self) -> Result<SpinNetwork> {
        let mut fields = vec![0.0; self.n_sites];
        for f in self.fields {
            let slot = fields.get_mut(f.site).ok_or_else(|| {
                Error::InvalidTopology(format!("field on missing site {}", f.site))
            })?;
            *slot += f.h;
        }
        SpinNetwork::from_parts(self.n_sites, self.bonds, fields, self.dd_qubits, self.regions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn minimal_chain() {
        let net = build_chain(2, 1.0).unwrap();
        assert_eq!(net.bonds(), &[Bond { i: 0, j: 1, j_perp: 1.0, j_z: 0.0 }]);
        assert!(net.fields().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn long_chain_and_negative_coupling() {
        let net = build_chain(100, 1.0).unwrap();
        assert_eq!(net.bonds().len(), 99);
        let neg = build_chain(100, -1.0).unwrap();
        assert!(neg.bonds().iter().all(|b| b.j_perp == -1.0));
        assert!(matches!(build_chain(1, 1.0), Err(Error::InvalidTopology(_))));
        assert!(build_chain(5, 0.0).is_err());
    }

    #[test]
    fn four_site_dd_system() {
        let net = build_chain(4, 1.0).unwrap().embed_dd_qubit(1, 10.0, 10.0).unwrap();
        let xy: Vec<_> = net.bonds().iter().filter(|b| b.j_perp != 0.0).collect();
        assert_eq!(xy.len(), 2);
        let ising = net.bond_between(1, 2).unwrap();
        assert_eq!((ising.j_perp, ising.j_z), (0.0, 10.0));
        assert_eq!(net.fields(), &[0.0, 10.0, 10.0, 0.0]);
        assert_eq!(net.dd_qubits().len(), 1);
    }

    #[test]
    fn overlapping_dd_rejected() {
        let net = build_chain(6, 1.0).unwrap().embed_dd_qubit(1, 10.0, 10.0).unwrap();
        assert!(matches!(
            net.embed_dd_qubit(1, 10.0, 10.0),
            Err(Error::InvalidTopology(_))
        ));
        assert!(net.embed_dd_qubit(2, 10.0, 10.0).is_err());
        assert!(net.embed_dd_qubit(3, 10.0, 10.0).is_ok());
    }

    #[test]
    fn fig1_geometry() {
        let net = build_chain(100, 1.0).unwrap().embed_dd_qubit(50, 10.0, 10.0).unwrap();
        let dd = &net.dd_qubits()[0];
        assert_eq!((dd.d, dd.d_plus_1), (50, 51));
        assert_eq!(net.fields().iter().filter(|&&h| h != 0.0).count(), 2);
    }

    #[test]
    fn y_splitter_with_dd() {
        let spec = SplitterSpec::new(SplitterKind::balanced_y(), 10, 12);
        let net = build_splitter_network(
            &spec,
            &[DdPlacement { arm: 0, offset: 5, jz: 10.0, h: 10.0 }],
        )
        .unwrap();
        assert_eq!(net.n_sites(), 34);
        let a = &net.region("A").unwrap().sites;
        assert_eq!(net.dd_qubits()[0].d, a[5]);
        let node_bonds: Vec<_> = net.bonds().iter().filter(|b| b.i == 9).collect();
        assert_eq!(node_bonds.len(), 2);
        assert!(node_bonds.iter().all(|b| (b.j_perp - FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn y_couplings_ratio() {
        let spec = SplitterSpec::new(SplitterKind::Y { alpha: 0.6, beta: 0.8 }, 5, 5);
        let net = build_splitter_network(&spec, &[]).unwrap();
        let a = net.bond_between(4, 5).unwrap().j_perp;
        let b = net.bond_between(4, 10).unwrap().j_perp;
        assert!((a / b - 0.75).abs() < 1e-15);
        assert!((a * a + b * b - 1.0).abs() < 1e-12);
        let bad = SplitterSpec::new(SplitterKind::Y { alpha: 0.6, beta: 0.7 }, 5, 5);
        assert!(matches!(
            build_splitter_network(&bad, &[]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn one_to_three_w_geometry() {
        let spec = SplitterSpec::new(SplitterKind::OneToN { n: 3 }, 8, 10)
            .with_output(SplitterKind::OneToN { n: 3 }, 8);
        let dds: Vec<_> = (0..3)
            .map(|arm| DdPlacement { arm, offset: 4, jz: 10.0, h: 10.0 })
            .collect();
        let net = build_splitter_network(&spec, &dds).unwrap();
        assert_eq!(net.n_sites(), 8 + 30 + 8);
        assert_eq!(net.dd_qubits().len(), 3);
        let node_out = net.region("out").unwrap().sites[0];
        let couplings: Vec<f64> = net
            .bonds()
            .iter()
            .filter(|b| b.j == node_out)
            .map(|b| b.j_perp)
            .collect();
        assert_eq!(couplings.len(), 3);
        assert!(couplings.iter().all(|&c| (c - 1.0 / 3f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn dd_outside_arm_rejected() {
        let spec = SplitterSpec::new(SplitterKind::balanced_y(), 5, 6);
        let err = build_splitter_network(&spec, &[DdPlacement { arm: 1, offset: 5, jz: 1.0, h: 1.0 }]);
        assert!(matches!(err, Err(Error::InvalidTopology(_))));
        let err = build_splitter_network(&spec, &[DdPlacement { arm: 2, offset: 0, jz: 1.0, h: 1.0 }]);
        assert!(matches!(err, Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn file_round_trip() {
        let net = build_chain(6, 1.0).unwrap().embed_dd_qubit(2, 4.0, 3.0).unwrap();
        let text = net.to_toml().unwrap();
        assert_eq!(SpinNetwork::from_toml(&text).unwrap(), net);
        assert!(SpinNetwork::from_toml("n_sites = 3\nbogus = 1").is_err());
    }

    #[test]
    fn disconnected_rejected() {
        let bonds = vec![Bond { i: 0, j: 1, j_perp: 1.0, j_z: 0.0 }];
        let err = SpinNetwork::from_parts(3, bonds, vec![0.0; 3], vec![], vec![]);
        assert!(matches!(err, Err(Error::InvalidTopology(_))));
    }
}
