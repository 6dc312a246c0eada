use crate::hamiltonian::SpinLabel;
use crate::linalg::{hermiticity_error, jacobi_eigh, Mat3, Mat9, Vec9, C64};

use super::DynamicsError;

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Ground-state density matrix over the `|m_s, m_I⟩` product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Mat9,
}

impl DensityMatrix {
    /// Validated construction.
    pub fn new(matrix: Mat9) -> Result<Self, DynamicsError> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(matrix: Mat9) -> Self {
        Self { matrix }
    }

    pub fn pure(ket: &Vec9) -> Self {
        let norm = ket.norm();
        let k = ket / C64::new(norm, 0.0);
        Self { matrix: k * k.adjoint() }
    }

    pub fn basis(label: SpinLabel) -> Self {
        let mut m = Mat9::zeros();
        let i = label.index();
        m[(i, i)] = C64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Electron in `ms` with the nucleus fully mixed: the state left behind
    /// by optical pumping at room temperature.
    pub fn electron_state(ms: i8) -> Self {
        let mut m = Mat9::zeros();
        for mi in [1, 0, -1] {
            let i = SpinLabel { ms, mi }.index();
            m[(i, i)] = C64::new(1.0 / 3.0, 0.0);
        }
        Self { matrix: m }
    }

    /// Fully mixed state.
    pub fn mixed() -> Self {
        Self { matrix: Mat9::identity() * C64::new(1.0 / 9.0, 0.0) }
    }

    pub fn matrix(&self) -> &Mat9 {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat9 {
        self.matrix
    }

    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace() - C64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = jacobi_eigh(&self.matrix);
        vals[0]
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DynamicsError::InvalidState("non-finite entries".into()));
        }
        let t = self.trace_error();
        if t > TRACE_TOL {
            return Err(DynamicsError::InvalidState(format!("trace error {t:e}")));
        }
        let h = self.hermiticity_error();
        if h > HERMITIAN_TOL {
            return Err(DynamicsError::InvalidState(format!("hermiticity error {h:e}")));
        }
        let e = self.min_eigenvalue();
        if e < -POSITIVITY_TOL {
            return Err(DynamicsError::InvalidState(format!("negative eigenvalue {e:e}")));
        }
        Ok(())
    }

    pub fn population(&self, label: SpinLabel) -> f64 {
        let i = label.index();
        self.matrix[(i, i)].re
    }

    /// Electron populations ordered `m_s = +1, 0, −1`.
    pub fn electron_populations(&self) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (s, ps) in p.iter_mut().enumerate() {
            for i in 0..3 {
                *ps += self.matrix[(3 * s + i, 3 * s + i)].re;
            }
        }
        p
    }

    /// Population of `m_s = 0`.
    pub fn bright_population(&self) -> f64 {
        self.electron_populations()[1]
    }

    /// Nuclear reduced density matrix (electron traced out).
    pub fn nuclear_reduced(&self) -> Mat3 {
        Mat3::from_fn(|i, j| (0..3).map(|s| self.matrix[(3 * s + i, 3 * s + j)]).sum())
    }

    /// Coherence `⟨a|ρ|b⟩`.
    pub fn element(&self, a: SpinLabel, b: SpinLabel) -> C64 {
        self.matrix[(a.index(), b.index())]
    }

    /// Exact Hermitian re-symmetrization of accumulated rounding.
    pub(crate) fn tidy(mut self) -> Self {
        self.matrix = (self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_states_are_valid() {
        for rho in [
            DensityMatrix::mixed(),
            DensityMatrix::electron_state(0),
            DensityMatrix::electron_state(-1),
            DensityMatrix::basis(SpinLabel { ms: 1, mi: 0 }),
        ] {
            rho.validate().unwrap();
        }
        assert!((DensityMatrix::mixed().purity() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(DensityMatrix::electron_state(0).electron_populations()[1], 1.0);
    }

    #[test]
    fn rejects_bad_trace() {
        let m = Mat9::identity() * C64::new(0.2, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let mut m = Mat9::zeros();
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn nuclear_trace_is_one() {
        let rho = DensityMatrix::electron_state(1);
        let n = rho.nuclear_reduced();
        assert!((n.trace().re - 1.0).abs() < 1e-15);
    }
}
