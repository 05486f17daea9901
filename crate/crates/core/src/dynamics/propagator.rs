use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_sequence;
use crate::error::{Error, Result};
use crate::hilbert::{expectation, SparseOperator, StateVector, DENSE_LIMIT};

/// Largest Chebyshev argument `a * dt` handled in one expansion.
const CHEBYSHEV_MAX_ARG: f64 = 400.0;
const KRYLOV_BREAKDOWN: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Chebyshev,
    Krylov,
    DenseExpm,
}

/// Diagnostics of one `evolve` call.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub method: Method,
    pub time: f64,
    pub matvecs: usize,
    /// `| ||v(t)|| - ||v(0)|| | / ||v(0)||`
    pub norm_drift: f64,
    /// `|<H>(t) - <H>(0)|` per unit norm.
    pub energy_drift: f64,
    /// Largest absolute Hamiltonian entry.
    pub h_max: f64,
}

impl EvolutionReport {
    /// Norm drift below 1e-10 and energy drift below 1e-8 of `max |H_ij|`.
    pub fn is_clean(&self) -> bool {
        self.norm_drift < 1e-10 && self.energy_drift < 1e-8 * self.h_max
    }
}

/// Applies `exp(-i H t)` to state vectors.
pub struct Propagator<'a> {
    ham: &'a SparseOperator,
    method: Method,
    tolerance: f64,
    max_matvecs: usize,
    krylov_dim: usize,
    bounds: (f64, f64),
    dense: Option<(DVector<f64>, DMatrix<f64>)>,
}

impl<'a> Propagator<'a> {
    pub fn new(ham: &'a SparseOperator, method: Method) -> Result<Self> {
        let dense = if method == Method::DenseExpm {
            let eig = ham.to_dense()?.symmetric_eigen();
            Some((eig.eigenvalues, eig.eigenvectors))
        } else {
            None
        };
        let (lo, hi) = ham.gershgorin_bounds();
        let pad = 1e-3 * (hi - lo).max(1e-12) + 1e-12;
        Ok(Propagator {
            ham,
            method,
            tolerance: 1e-13,
            max_matvecs: 1_000_000,
            krylov_dim: 30,
            bounds: (lo - pad, hi + pad),
            dense,
        })
    }

    /// Chebyshev propagator with Gershgorin rescaling.
    pub fn chebyshev(ham: &'a SparseOperator) -> Self {
        Self::new(ham, Method::Chebyshev).expect("chebyshev construction cannot fail")
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_matvecs(mut self, max_matvecs: usize) -> Self {
        self.max_matvecs = max_matvecs;
        self
    }

    pub fn with_krylov_dim(mut self, m: usize) -> Self {
        self.krylov_dim = m.max(2);
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        self.ham
    }

    pub fn evolve(&self, v: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.evolve_with_report(v, t)?.0)
    }

    pub fn evolve_with_report(
        &self,
        v: &StateVector,
        t: f64,
    ) -> Result<(StateVector, EvolutionReport)> {
        if v.dim() != self.ham.dim() {
            return Err(Error::DimensionMismatch { expected: self.ham.dim(), found: v.dim() });
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite evolution time {t}")));
        }
        let norm0 = v.norm();
        let e0 = energy_per_norm(self.ham, v)?;
        let (amps, matvecs) = if t == 0.0 {
            (v.amplitudes().to_vec(), 0)
        } else {
            match self.method {
                Method::Chebyshev => self.chebyshev_evolve(v.amplitudes(), t)?,
                Method::Krylov => self.krylov_evolve(v.amplitudes(), t)?,
                Method::DenseExpm => (self.dense_evolve(v.amplitudes(), t), 0),
            }
        };
        let out = StateVector::from_evolution(amps, v.is_unnormalized());
        let e1 = energy_per_norm(self.ham, &out)?;
        let report = EvolutionReport {
            method: self.method,
            time: t,
            matvecs,
            norm_drift: if norm0 > 0.0 { (out.norm() - norm0).abs() / norm0 } else { 0.0 },
            energy_drift: (e1 - e0).abs(),
            h_max: self.ham.max_abs_entry(),
        };
        Ok((out, report))
    }

    fn chebyshev_evolve(&self, psi: &[Complex64], t: f64) -> Result<(Vec<Complex64>, usize)> {
        let (lo, hi) = self.bounds;
        let scale = 0.5 * (hi - lo);
        let shift = 0.5 * (hi + lo);
        let dir = t.signum();
        let total = t.abs();
        let step = CHEBYSHEV_MAX_ARG / scale;
        let n_steps = (total / step).ceil().max(1.0) as usize;
        let dt = total / n_steps as f64;
        let x = scale * dt;
        let kmax = (x + 12.0 * x.cbrt() + 40.0).ceil() as usize;
        let bessel = bessel_j_sequence(x, kmax);
        let cut = self.tolerance * 1e-2;
        let n_terms = match bessel.iter().rposition(|b| b.abs() > cut) {
            Some(last) if last + 1 < kmax => last + 2,
            _ => {
                return Err(Error::NonConvergence(format!(
                    "Chebyshev coefficients do not decay below {cut:e} within {kmax} terms"
                )))
            }
        };
        // (-i dir)^k
        let unit = Complex64::new(0.0, -dir);
        let phase = Complex64::from_polar(1.0, -dir * shift * dt);

        let dim = psi.len();
        let mut state = psi.to_vec();
        let mut matvecs = 0usize;
        let zero = Complex64::new(0.0, 0.0);
        let mut prev = vec![zero; dim];
        let mut cur = vec![zero; dim];
        let mut acc = vec![zero; dim];
        for _ in 0..n_steps {
            if matvecs + n_terms > self.max_matvecs {
                return Err(Error::NonConvergence(format!(
                    "matrix-vector budget of {} exhausted",
                    self.max_matvecs
                )));
            }
            // T_0 term
            for ((a, p), s) in acc.iter_mut().zip(prev.iter_mut()).zip(&state) {
                *a = s * bessel[0];
                *p = *s;
            }
            // T_1 = (H - shift) / scale
            self.ham.apply_into(&state, &mut cur);
            let c1 = unit * (2.0 * bessel[1]);
            for ((c, a), s) in cur.iter_mut().zip(acc.iter_mut()).zip(&state) {
                *c = (*c - s * shift) / scale;
                *a += c1 * *c;
            }
            matvecs += 1;
            let mut coeff_phase = unit;
            for &b in bessel.iter().take(n_terms).skip(2) {
                coeff_phase *= unit;
                let coeff = coeff_phase * (2.0 * b);
                self.ham.chebyshev_step(&cur, &mut prev, &mut acc, shift, scale, coeff);
                std::mem::swap(&mut cur, &mut prev);
                matvecs += 1;
            }
            for (s, a) in state.iter_mut().zip(&acc) {
                *s = a * phase;
            }
        }
        Ok((state, matvecs))
    }

    fn krylov_evolve(&self, psi: &[Complex64], t: f64) -> Result<(Vec<Complex64>, usize)> {
        let dim = psi.len();
        let m_max = self.krylov_dim.min(dim);
        let mut state = psi.to_vec();
        let mut matvecs = 0usize;
        let mut elapsed = 0.0f64;
        let total = t.abs();
        let dir = t.signum();
        let (lo, hi) = self.bounds;
        let mut tau = (total).min(10.0 / (hi - lo).max(1e-12));
        while elapsed < total {
            let beta0 = norm(&state);
            if beta0 == 0.0 {
                break;
            }
            // Lanczos with full reorthogonalization.
            let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max + 1);
            basis.push(state.iter().map(|a| a / beta0).collect());
            let mut alpha = Vec::with_capacity(m_max);
            let mut beta = Vec::with_capacity(m_max);
            let mut w = vec![Complex64::new(0.0, 0.0); dim];
            let mut breakdown = false;
            for j in 0..m_max {
                self.ham.apply_into(&basis[j], &mut w);
                matvecs += 1;
                let a = dot(&basis[j], &w).re;
                alpha.push(a);
                for _ in 0..2 {
                    for q in &basis {
                        let proj = dot(q, &w);
                        for (wi, qi) in w.iter_mut().zip(q) {
                            *wi -= proj * qi;
                        }
                    }
                }
                let b = norm(&w);
                beta.push(b);
                if b < KRYLOV_BREAKDOWN * beta0.max(1.0) {
                    breakdown = true;
                    break;
                }
                basis.push(w.iter().map(|x| x / b).collect());
            }
            if matvecs > self.max_matvecs {
                return Err(Error::NonConvergence(format!(
                    "matrix-vector budget of {} exhausted",
                    self.max_matvecs
                )));
            }
            let m = alpha.len();
            let mut tri = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                tri[(i, i)] = alpha[i];
                if i + 1 < m {
                    tri[(i, i + 1)] = beta[i];
                    tri[(i + 1, i)] = beta[i];
                }
            }
            let eig = tri.symmetric_eigen();
            let small_exp = |dt: f64| -> Vec<Complex64> {
                (0..m)
                    .map(|r| {
                        (0..m)
                            .map(|n| {
                                let q = eig.eigenvectors[(r, n)] * eig.eigenvectors[(0, n)];
                                Complex64::from_polar(q, -dir * eig.eigenvalues[n] * dt)
                            })
                            .sum()
                    })
                    .collect()
            };
            let mut step = tau.min(total - elapsed);
            let coeffs = loop {
                let c = small_exp(step);
                let err = if breakdown { 0.0 } else { beta[m - 1] * c[m - 1].norm() };
                if err <= self.tolerance {
                    break c;
                }
                step *= 0.5;
                if step < 1e-12 * total.max(1.0) {
                    return Err(Error::NonConvergence(format!(
                        "Krylov step underflow (error estimate {err:e})"
                    )));
                }
            };
            for (s, _) in state.iter_mut().zip(0..) {
                *s = Complex64::new(0.0, 0.0);
            }
            for (q, c) in basis.iter().zip(&coeffs) {
                let c = c * beta0;
                for (s, qi) in state.iter_mut().zip(q) {
                    *s += c * qi;
                }
            }
            elapsed += step;
            tau = step * 1.25;
        }
        Ok((state, matvecs))
    }

    fn dense_evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let (vals, vecs) = self.dense.as_ref().expect("dense eigensystem built");
        let dim = psi.len();
        let coeffs: Vec<Complex64> = (0..dim)
            .map(|n| {
                let proj: Complex64 = (0..dim).map(|r| psi[r] * vecs[(r, n)]).sum();
                proj * Complex64::from_polar(1.0, -vals[n] * t)
            })
            .collect();
        (0..dim)
            .map(|r| (0..dim).map(|n| coeffs[n] * vecs[(r, n)]).sum())
            .collect()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn energy_per_norm(ham: &SparseOperator, v: &StateVector) -> Result<f64> {
    let n2 = v.norm_sqr();
    if n2 == 0.0 {
        return Ok(0.0);
    }
    Ok(expectation(ham, v)? / n2)
}

/// Largest dimension for which the dense propagator is available.
pub const DENSE_PROPAGATOR_LIMIT: usize = DENSE_LIMIT;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_packet, position_moments, site_occupations, PacketSpec};
    use crate::hilbert::{assemble_hamiltonian, SectorBasis};
    use crate::network::build_chain;

    fn four_site(h: f64) -> (SectorBasis, SparseOperator) {
        let net = build_chain(4, 1.0).unwrap().embed_dd_qubit(1, h, h).unwrap();
        let basis = SectorBasis::for_network(&net, 2).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        (basis, ham)
    }

    fn random_state(dim: usize, seed: u64) -> StateVector {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        StateVector::normalized((0..dim).map(|_| Complex64::new(next(), next())).collect()).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let (_, ham) = four_site(10.0);
        let v = random_state(ham.dim(), 1);
        for m in [Method::Chebyshev, Method::Krylov, Method::DenseExpm] {
            let out = Propagator::new(&ham, m).unwrap().evolve(&v, 0.0).unwrap();
            assert_eq!(out, v);
        }
    }

    #[test]
    fn eigenvector_only_picks_up_phase() {
        let (_, ham) = four_site(10.0);
        let eig = ham.to_dense().unwrap().symmetric_eigen();
        let v = StateVector::normalized(
            eig.eigenvectors.column(2).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
        .unwrap();
        let out = Propagator::chebyshev(&ham).evolve(&v, 7.3).unwrap();
        let overlap = v.inner(&out).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
        let expected = Complex64::from_polar(1.0, -eig.eigenvalues[2] * 7.3);
        assert!((overlap - expected).norm() < 1e-10);
    }

    #[test]
    fn methods_agree_and_stay_clean() {
        let net = build_chain(24, 1.0).unwrap().embed_dd_qubit(11, 6.0, 5.0).unwrap();
        let basis = SectorBasis::for_network(&net, 2).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        let v = random_state(basis.len(), 7);
        let reference = Propagator::new(&ham, Method::DenseExpm).unwrap();
        for &t in &[0.37, 5.0, -12.5] {
            let exact = reference.evolve(&v, t).unwrap();
            for m in [Method::Chebyshev, Method::Krylov] {
                let (out, report) = Propagator::new(&ham, m).unwrap().evolve_with_report(&v, t).unwrap();
                let f = exact.fidelity(&out).unwrap();
                assert!(f > 1.0 - 1e-9, "{m:?} t={t}: fidelity {f}");
                assert!(report.is_clean(), "{report:?}");
            }
        }
    }

    #[test]
    fn backward_evolution_inverts() {
        let (_, ham) = four_site(3.0);
        let v = random_state(ham.dim(), 3);
        let p = Propagator::chebyshev(&ham);
        let back = p.evolve(&p.evolve(&v, 20.0).unwrap(), -20.0).unwrap();
        assert!((back.fidelity(&v).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn three_level_transfer() {
        // |0,2> -> |1,3> at t = pi sqrt(2) / J when h = Jz >> J
        let (basis, ham) = four_site(10.0);
        let start = StateVector::basis_state(basis.len(), basis.index_of(&[0, 2]).unwrap());
        let target = StateVector::basis_state(basis.len(), basis.index_of(&[1, 3]).unwrap());
        let t = std::f64::consts::PI * 2f64.sqrt();
        let out = Propagator::chebyshev(&ham).evolve(&start, t).unwrap();
        assert!(out.fidelity(&target).unwrap() >= 0.99);
    }

    fn center_track(j_perp: f64, momentum: f64, t: f64) -> (f64, f64, f64) {
        let net = build_chain(140, j_perp).unwrap();
        let basis = SectorBasis::for_network(&net, 1).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        let spec = PacketSpec::new(4.0 / 15.0, 70.0, (0..140).collect()).with_momentum(momentum);
        let p = make_packet(&basis, &spec, &[]).unwrap();
        let (_, w0) = position_moments(site_occupations(&basis, &p.state).iter().enumerate().map(|(j, &w)| (j as f64, w)));
        let (out, report) = Propagator::chebyshev(&ham).evolve_with_report(&p.state, t).unwrap();
        assert!(report.is_clean());
        let (mean, w) = position_moments(site_occupations(&basis, &out).iter().enumerate().map(|(j, &w)| (j as f64, w)));
        (mean, w0, w)
    }

    #[test]
    fn packet_moves_at_group_velocity() {
        for &t in &[10.0, 30.0] {
            let (mean, _, _) = center_track(1.0, std::f64::consts::FRAC_PI_2, t);
            assert!((mean - 70.0 - t).abs() <= 0.02 * t, "t={t}: {mean}");
            let (mean, _, _) = center_track(1.0, -std::f64::consts::FRAC_PI_2, t);
            assert!((mean - 70.0 + t).abs() <= 0.02 * t, "t={t}: {mean}");
        }
    }

    #[test]
    fn negative_coupling_reverses_direction() {
        let (mean, _, _) = center_track(-1.0, std::f64::consts::FRAC_PI_2, 30.0);
        assert!((mean - 40.0).abs() <= 0.6, "{mean}");
    }

    #[test]
    fn narrow_dispersion_over_transit() {
        let (_, w0, w) = center_track(1.0, std::f64::consts::FRAC_PI_2, 55.0);
        assert!(w / w0 < 1.2, "width {w0} -> {w}");
    }

    #[test]
    fn matvec_budget_enforced() {
        let (_, ham) = four_site(10.0);
        let v = random_state(ham.dim(), 5);
        let p = Propagator::chebyshev(&ham).with_max_matvecs(10);
        assert!(matches!(p.evolve(&v, 50.0), Err(Error::NonConvergence(_))));
    }
}
