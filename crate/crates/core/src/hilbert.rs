//! Fixed-flip-number sectors and the XXZ Hamiltonian restricted to them.
//!
//! A sector is the set of configurations with exactly `k` flipped spins on the
//! all-down background. Configurations are stored as sorted site lists in
//! colexicographic order, which is the order induced by the combinatorial
//! number system: `rank(c_0 < c_1 < ... < c_{k-1}) = sum_i C(c_i, i + 1)`.
//!
//! Sign convention for `sigma^z`: a flipped site has `s = +1`, an unflipped
//! site `s = -1`. The diagonal energy of a configuration is
//! `sum_bonds(-J^z_ij s_i s_j) + sum_i h_i s_i`; bonded sites exchange a flip
//! with amplitude `-J_perp_ij / 2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::SpinNetwork;

/// Largest sector dimension the dense fallback will build.
pub const DENSE_LIMIT: usize = 4096;

const PARALLEL_MATVEC_DIM: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_sites: usize,
    k: usize,
    states: Vec<u32>,
    binom: Vec<Vec<usize>>,
}

fn binomial_table(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; k + 2]; n + 1];
    for row in t.iter_mut() {
        row[0] = 1;
    }
    for m in 1..=n {
        for j in 1..=k + 1 {
            t[m][j] = t[m - 1][j - 1].saturating_add(t[m - 1][j]);
        }
    }
    t
}

impl SectorBasis {
    /// Enumerate every configuration of `k` flips on `n_sites` sites.
    pub fn new(n_sites: usize, k: usize) -> Result<Self> {
        if k > n_sites {
            return Err(Error::InvalidParameter(format!(
                "flip count {k} exceeds {n_sites} sites"
            )));
        }
        if n_sites > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many sites".into()));
        }
        let binom = binomial_table(n_sites, k);
        let size = binom[n_sites][k];
        if size == usize::MAX || size > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "sector C({n_sites}, {k}) is too large"
            )));
        }
        let mut states = Vec::with_capacity(size * k);
        let mut comb: Vec<u32> = (0..k as u32).collect();
        for _ in 0..size {
            states.extend_from_slice(&comb);
            // colex successor
            let mut i = 0;
            while i < k {
                let limit = if i + 1 < k { comb[i + 1] } else { n_sites as u32 };
                if comb[i] + 1 < limit {
                    comb[i] += 1;
                    for (j, c) in comb.iter_mut().enumerate().take(i) {
                        *c = j as u32;
                    }
                    break;
                }
                i += 1;
            }
        }
        Ok(SectorBasis { n_sites, k, states, binom })
    }

    /// Sector basis for a network's site count.
    pub fn for_network(net: &SpinNetwork, k: usize) -> Result<Self> {
        Self::new(net.n_sites(), k)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.binom[self.n_sites][self.k]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flipped sites of configuration `index`, ascending.
    pub fn state(&self, index: usize) -> &[u32] {
        &self.states[index * self.k..(index + 1) * self.k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    /// Colex rank of a sorted flip set; no validation.
    fn rank_sorted(&self, sites: &[u32]) -> usize {
        sites
            .iter()
            .enumerate()
            .map(|(i, &c)| self.binom[c as usize][i + 1])
            .sum()
    }

    /// Index of a flip set given in any order, or `None` if it is not a
    /// configuration of this sector.
    pub fn index_of(&self, sites: &[usize]) -> Option<usize> {
        if sites.len() != self.k {
            return None;
        }
        let mut sorted: Vec<u32> = sites.iter().map(|&s| s as u32).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1])
            || sorted.last().is_some_and(|&s| s as usize >= self.n_sites)
        {
            return None;
        }
        Some(self.rank_sorted(&sorted))
    }
}

/// Real symmetric sparse operator in row-compressed form.
///
/// Every Hamiltonian of this model is real in the configuration basis, so
/// Hermiticity reduces to symmetry and the entries are stored as `f64`.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Build from per-row `(column, value)` lists. Columns are sorted and
    /// duplicates summed.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<u32> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().expect("entry exists") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOperator { dim, row_ptr, cols, vals }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_rows((0..dim).map(|i| vec![(i as u32, 1.0)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of one row as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |H_ij - H_ji|`.
    pub fn hermiticity_residue(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Gershgorin enclosure `(lower, upper)` of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    diag += v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    fn row_dot(&self, r: usize, x: &[Complex64]) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        let mut acc = Complex64::new(0.0, 0.0);
        for (&c, &v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
            acc += x[c as usize] * v;
        }
        acc
    }

    /// `y = H x`.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if self.dim >= PARALLEL_MATVEC_DIM {
            y.par_chunks_mut(4096).enumerate().for_each(|(chunk, out)| {
                let base = chunk * 4096;
                for (i, yi) in out.iter_mut().enumerate() {
                    *yi = self.row_dot(base + i, x);
                }
            });
        } else {
            for (r, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(r, x);
            }
        }
    }

    /// Fused three-term update used by the Chebyshev recurrence:
    /// `next = 2 (H cur - shift cur) / scale - prev`, then `acc += coeff * next`.
    /// `prev` is overwritten with `next`.
    pub(crate) fn chebyshev_step(
        &self,
        cur: &[Complex64],
        prev: &mut [Complex64],
        acc: &mut [Complex64],
        shift: f64,
        scale: f64,
        coeff: Complex64,
    ) {
        let two_over = 2.0 / scale;
        let body = |r: usize, p: &mut Complex64, a: &mut Complex64| {
            let hx = self.row_dot(r, cur);
            let next = (hx - cur[r] * shift) * two_over - *p;
            *p = next;
            *a += coeff * next;
        };
        if self.dim >= PARALLEL_MATVEC_DIM {
            prev.par_chunks_mut(4096)
                .zip(acc.par_chunks_mut(4096))
                .enumerate()
                .for_each(|(chunk, (pc, ac))| {
                    let base = chunk * 4096;
                    for (i, (p, a)) in pc.iter_mut().zip(ac.iter_mut()).enumerate() {
                        body(base + i, p, a);
                    }
                });
        } else {
            for (r, (p, a)) in prev.iter_mut().zip(acc.iter_mut()).enumerate() {
                body(r, p, a);
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    /// Dense copy, only for `dim <= DENSE_LIMIT`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.dim > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dense fallback limited to dim {DENSE_LIMIT}, got {}",
                self.dim
            )));
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }
}

/// Diagonal energy of one configuration.
fn diagonal_energy(net: &SpinNetwork, adj: &[Vec<(usize, usize)>], flips: &[u32], vacuum: f64) -> f64 {
    let flipped = |s: usize| flips.iter().any(|&f| f as usize == s);
    let mut e = vacuum;
    for &f in flips {
        let i = f as usize;
        e += 2.0 * net.field(i);
        for &(j, b) in &adj[i] {
            let jz = net.bonds()[b].j_z;
            if jz != 0.0 && !flipped(j) {
                e += 2.0 * jz;
            }
        }
    }
    e
}

/// Assemble the network Hamiltonian on a sector.
pub fn assemble_hamiltonian(net: &SpinNetwork, basis: &SectorBasis) -> Result<SparseOperator> {
    if basis.n_sites() != net.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: net.n_sites(),
            found: basis.n_sites(),
        });
    }
    let adj = net.adjacency();
    let vacuum = -net.bonds().iter().map(|b| b.j_z).sum::<f64>() - net.fields().iter().sum::<f64>();
    let k = basis.k();

    let rows: Vec<Vec<(u32, f64)>> = (0..basis.len())
        .map(|r| {
            let flips = basis.state(r);
            let mut row = Vec::with_capacity(1 + 2 * k);
            row.push((r as u32, diagonal_energy(net, &adj, flips, vacuum)));
            let mut moved = flips.to_vec();
            for (slot, &f) in flips.iter().enumerate() {
                for &(j, b) in &adj[f as usize] {
                    let jp = net.bonds()[b].j_perp;
                    if jp == 0.0 || flips.contains(&(j as u32)) {
                        continue;
                    }
                    moved.copy_from_slice(flips);
                    moved[slot] = j as u32;
                    moved.sort_unstable();
                    row.push((basis.rank_sorted(&moved) as u32, -0.5 * jp));
                }
            }
            row
        })
        .collect();
    Ok(SparseOperator::from_rows(rows))
}

/// Normalized (or explicitly unnormalized) amplitude vector over a sector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    unnormalized: bool,
}

impl StateVector {
    /// Wrap amplitudes and normalize them to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroProbability("state normalization".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { amplitudes, unnormalized: false })
    }

    /// Wrap amplitudes without normalizing; tagged as an unnormalized component.
    pub fn component(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes, unnormalized: true }
    }

    /// Configuration basis vector.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes, unnormalized: false }
    }

    pub(crate) fn from_evolution(amplitudes: Vec<Complex64>, unnormalized: bool) -> Self {
        StateVector { amplitudes, unnormalized }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// `<v|H|v>` as a complex number.
pub fn expectation_complex(op: &SparseOperator, v: &StateVector) -> Result<Complex64> {
    if op.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: v.dim() });
    }
    let hv = op.apply(v.amplitudes());
    Ok(v.amplitudes().iter().zip(&hv).map(|(a, b)| a.conj() * b).sum())
}

/// `<v|H|v>` for Hermitian `H`; the imaginary residue is checked.
pub fn expectation(op: &SparseOperator, v: &StateVector) -> Result<f64> {
    let z = expectation_complex(op, v)?;
    let scale = 1.0 + op.max_abs_entry() * v.norm_sqr();
    if z.im.abs() > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "operator is not Hermitian: imaginary expectation {}",
            z.im
        )));
    }
    Ok(z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_chain;

    fn four_site(h: f64, jz: f64) -> SpinNetwork {
        build_chain(4, 1.0).unwrap().embed_dd_qubit(1, jz, h).unwrap()
    }

    #[test]
    fn sector_sizes() {
        assert_eq!(SectorBasis::new(4, 2).unwrap().len(), 6);
        assert_eq!(SectorBasis::new(100, 1).unwrap().len(), 100);
        assert_eq!(SectorBasis::new(40, 3).unwrap().len(), 9880);
        assert_eq!(SectorBasis::new(7, 0).unwrap().len(), 1);
        assert!(SectorBasis::new(3, 4).is_err());
    }

    #[test]
    fn colex_order_and_bijection() {
        let basis = SectorBasis::new(6, 3).unwrap();
        let states: Vec<Vec<u32>> = basis.iter().map(|s| s.to_vec()).collect();
        assert_eq!(states[0], vec![0, 1, 2]);
        assert_eq!(states[1], vec![0, 1, 3]);
        assert_eq!(states[2], vec![0, 2, 3]);
        assert_eq!(states[3], vec![1, 2, 3]);
        for w in states.windows(2) {
            let key = |s: &Vec<u32>| s.iter().rev().copied().collect::<Vec<_>>();
            assert!(key(&w[0]) < key(&w[1]));
        }
        for (i, s) in states.iter().enumerate() {
            let sites: Vec<usize> = s.iter().map(|&x| x as usize).collect();
            assert_eq!(basis.index_of(&sites), Some(i));
        }
        assert_eq!(basis.index_of(&[0, 0, 1]), None);
        assert_eq!(basis.index_of(&[0, 1, 6]), None);
        assert_eq!(basis.index_of(&[5, 1, 0]), basis.index_of(&[0, 1, 5]));
    }

    #[test]
    fn two_flip_four_site_block() {
        let (h, jp) = (10.0, 1.0);
        let net = four_site(h, h);
        let basis = SectorBasis::for_network(&net, 2).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        let span = [
            basis.index_of(&[0, 2]).unwrap(),
            basis.index_of(&[1, 2]).unwrap(),
            basis.index_of(&[1, 3]).unwrap(),
        ];
        let expected = [[h, -jp / 2.0, 0.0], [-jp / 2.0, h, -jp / 2.0], [0.0, -jp / 2.0, h]];
        let offset = ham.get(span[0], span[0]) - h;
        for a in 0..3 {
            for b in 0..3 {
                let shift = if a == b { offset } else { 0.0 };
                assert!((ham.get(span[a], span[b]) - shift - expected[a][b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_sector() {
        let net = four_site(3.0, 2.0);
        let basis = SectorBasis::for_network(&net, 0).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        assert_eq!(ham.dim(), 1);
        // -J^z - 2h
        assert_eq!(ham.get(0, 0), -2.0 - 6.0);
    }

    #[test]
    fn hermitian_and_closed() {
        let net = four_site(7.0, 5.0);
        for k in 0..=4 {
            let basis = SectorBasis::for_network(&net, k).unwrap();
            let ham = assemble_hamiltonian(&net, &basis).unwrap();
            assert_eq!(ham.dim(), basis.len());
            assert!(ham.hermiticity_residue() < 1e-14);
            assert!(ham.row(0).all(|(c, _)| c < basis.len()));
        }
    }

    #[test]
    fn identity_expectation() {
        let id = SparseOperator::identity(5);
        let v = StateVector::normalized(vec![Complex64::new(0.3, -0.1); 5]).unwrap();
        assert!((expectation(&id, &v).unwrap() - 1.0).abs() < 1e-15);
        let w = StateVector::basis_state(4, 0);
        assert!(matches!(expectation(&id, &w), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn eigenvector_expectation() {
        let net = four_site(10.0, 10.0);
        let basis = SectorBasis::for_network(&net, 2).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        let eig = ham.to_dense().unwrap().symmetric_eigen();
        for (n, &e) in eig.eigenvalues.iter().enumerate() {
            let amps = eig.eigenvectors.column(n).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let v = StateVector::normalized(amps).unwrap();
            assert!((expectation(&ham, &v).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        let net = four_site(4.0, 6.0);
        let basis = SectorBasis::for_network(&net, 2).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        let (lo, hi) = ham.gershgorin_bounds();
        let eig = ham.to_dense().unwrap().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= lo - 1e-12 && e <= hi + 1e-12));
    }
}
