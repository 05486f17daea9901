use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-12;

/// Density matrix of an `n`-qubit register in the computational basis;
/// qubit 0 is the most significant bit of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisterDensity {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl RegisterDensity {
    pub fn new(n_qubits: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (residue {herm:e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace} differs from 1")));
        }
        let rho = RegisterDensity { n_qubits, matrix };
        let min = rho.eigenvalues().min();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Normalize a positive semidefinite (unnormalized) matrix to unit trace.
    pub fn from_unnormalized(n_qubits: usize, mut matrix: DMatrix<Complex64>) -> Result<Self> {
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return Err(Error::ZeroProbability("register density".into()));
        }
        matrix /= Complex64::new(trace, 0.0);
        // symmetrize away rounding
        let herm = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Self::new(n_qubits, herm)
    }

    /// `|psi><psi|` for a normalized register state.
    pub fn pure(n_qubits: usize, amplitudes: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::ZeroProbability("pure register state".into()));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::new(n_qubits, &v * v.adjoint())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.matrix.clone().symmetric_eigen().eigenvalues
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `<psi|rho|psi>` for a target register state (normalized internally).
    pub fn fidelity_to_pure(&self, target: &[Complex64]) -> Result<f64> {
        if target.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: target.len(),
            });
        }
        let v = DVector::from_column_slice(target);
        let n2 = v.norm_squared();
        if !(n2 > 0.0) {
            return Err(Error::ZeroProbability("fidelity target".into()));
        }
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re / n2)
    }

    /// Probability of each computational basis state.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Two-qubit view; fails unless the register holds exactly two qubits.
    pub fn as_two_qubit(&self) -> Result<TwoQubitDensity> {
        if self.n_qubits != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.n_qubits });
        }
        Ok(TwoQubitDensity(self.clone()))
    }
}

/// Two-qubit density matrix in the basis `|00>, |01>, |10>, |11>`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitDensity(RegisterDensity);

impl TwoQubitDensity {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Ok(TwoQubitDensity(RegisterDensity::new(2, matrix)?))
    }

    pub fn from_unnormalized(matrix: DMatrix<Complex64>) -> Result<Self> {
        Ok(TwoQubitDensity(RegisterDensity::from_unnormalized(2, matrix)?))
    }

    pub fn pure(amplitudes: [Complex64; 4]) -> Result<Self> {
        Ok(TwoQubitDensity(RegisterDensity::pure(2, &amplitudes)?))
    }

    /// The one-excitation block matrix with populations `alpha^2`, `beta^2`
    /// on `|01>`, `|10>` and coherence `alpha beta`.
    pub fn one_excitation(alpha: f64, beta: f64) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        m[(1, 1)] = Complex64::new(alpha * alpha, 0.0);
        m[(2, 2)] = Complex64::new(beta * beta, 0.0);
        m[(1, 2)] = Complex64::new(alpha * beta, 0.0);
        m[(2, 1)] = Complex64::new(alpha * beta, 0.0);
        Self::new(m)
    }

    pub fn register(&self) -> &RegisterDensity {
        &self.0
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.0.matrix()
    }

    /// Wootters concurrence `max(0, l1 - l2 - l3 - l4)`, with `l_i` the
    /// decreasing singular values of `V^T (sy x sy) V` for `rho = V V^dagger`.
    pub fn concurrence(&self) -> f64 {
        let rho = self.matrix();
        // (sy x sy) is the anti-diagonal (-1, 1, 1, -1) pattern
        let flip = DMatrix::from_fn(4, 4, |r, c| {
            if r + c == 3 {
                let sign = if r == 0 || r == 3 { -1.0 } else { 1.0 };
                Complex64::new(sign, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = rho.clone().symmetric_eigen();
        let cut = 1e-14 * eig.eigenvalues.max().max(0.0);
        let roots = eig
            .eigenvalues
            .map(|l| Complex64::new(if l > cut { l.sqrt() } else { 0.0 }, 0.0));
        let v = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        let tau = v.transpose() * flip * v;
        let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
        l.sort_by(|a, b| b.total_cmp(a));
        (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
    }
}

/// Register basis index of a bit pattern (qubit 0 most significant).
pub fn register_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// `(|0...0> + |1...1>) / sqrt(2)`.
pub fn ghz_state(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[0] = a;
    v[(1 << n) - 1] = a;
    v
}

/// Equal superposition of the `n` single-excitation register states.
pub fn w_state(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    let a = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for q in 0..n {
        v[1 << (n - 1 - q)] = a;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn one_excitation_concurrence() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((TwoQubitDensity::one_excitation(h, h).unwrap().concurrence() - 1.0).abs() < 1e-10);
        assert!(TwoQubitDensity::one_excitation(1.0, 0.0).unwrap().concurrence().abs() < 1e-10);
        assert!((TwoQubitDensity::one_excitation(0.6, 0.8).unwrap().concurrence() - 0.96).abs() < 1e-10);
    }

    #[test]
    fn bell_and_product_states() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = TwoQubitDensity::pure([c(h), c(0.0), c(0.0), c(h)]).unwrap();
        assert!((bell.concurrence() - 1.0).abs() < 1e-10);
        // |+>|0>
        let prod = TwoQubitDensity::pure([c(h), c(0.0), c(h), c(0.0)]).unwrap();
        assert!(prod.concurrence() < 1e-10);
    }

    #[test]
    fn werner_state() {
        // p |bell><bell| + (1-p) I/4 has C = max(0, (3p - 1)/2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = TwoQubitDensity::pure([c(h), c(0.0), c(0.0), c(h)]).unwrap();
        for &p in &[0.2, 0.5, 0.9] {
            let m = bell.matrix() * c(p) + DMatrix::identity(4, 4) * c((1.0 - p) / 4.0);
            let rho = TwoQubitDensity::new(m).unwrap();
            let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert!((rho.concurrence() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_densities_rejected() {
        let mut m = DMatrix::identity(4, 4) * c(0.25);
        m[(0, 1)] = c(0.1);
        assert!(TwoQubitDensity::new(m).is_err());
        assert!(TwoQubitDensity::new(DMatrix::identity(4, 4) * c(0.5)).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2), c(-0.2), c(0.0), c(0.0)]));
        assert!(matches!(TwoQubitDensity::new(neg), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn targets() {
        let ghz = ghz_state(3);
        assert_eq!(ghz[0], ghz[7]);
        let w = w_state(3);
        assert!((w[register_index(&[1, 0, 0])].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[register_index(&[0, 0, 1])].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let rho = RegisterDensity::pure(3, &w).unwrap();
        assert!((rho.fidelity_to_pure(&w).unwrap() - 1.0).abs() < 1e-14);
        assert!(rho.fidelity_to_pure(&ghz).unwrap().abs() < 1e-14);
    }
}
