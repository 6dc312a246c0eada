//! Phenomenological T1 / T2 relaxation of the electron spin.

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat9, C64};

use super::{DensityMatrix, DynamicsError, OpticalRates};

/// Largest T2/T1 ratio for which the uniform-mixing relaxation channel of a
/// spin 1 stays completely positive.
pub const MAX_T2_OVER_T1: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxationParams {
    /// Population relaxation time, s.
    pub t1: f64,
    /// Free-induction dephasing time, s.
    pub t2_star: f64,
    /// Hahn-echo coherence time, s. An echo envelope slower than T1 allows
    /// is clipped by [`relaxation_channel`].
    pub t2_echo: f64,
    /// Stretching exponent of the echo envelope `exp(−(τ/T2)^n)`.
    pub echo_exponent: f64,
    pub optical: OpticalRates,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        Self { t1: 1e-3, t2_star: 1.5e-6, t2_echo: 79e-6, echo_exponent: 1.0, optical: OpticalRates::default() }
    }
}

impl RelaxationParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (name, v) in [
            ("t1", self.t1),
            ("t2_star", self.t2_star),
            ("t2_echo", self.t2_echo),
            ("echo_exponent", self.echo_exponent),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(DynamicsError::InvalidRelaxation(format!("{name} must be positive")));
            }
        }
        if self.t2_star > MAX_T2_OVER_T1 * self.t1 {
            return Err(DynamicsError::InvalidRelaxation(format!("t2_star must not exceed {MAX_T2_OVER_T1}·t1")));
        }
        self.optical.validate()
    }
}

/// Relaxation channel on the electron spin: electron-diagonal blocks
/// (nuclear coherences included) relax toward their m_s average with weight
/// `population_factor`, and electron coherences are multiplied by
/// `coherence_factor`. The nuclear subspace is untouched.
///
/// `coherence_factor` is clipped to `(1 + 2·population_factor)/3`, the
/// largest value for which the map is completely positive.
pub fn relaxation_channel(rho: &DensityMatrix, population_factor: f64, coherence_factor: f64) -> DensityMatrix {
    let e = population_factor.clamp(0.0, 1.0);
    let c = coherence_factor.clamp(0.0, (1.0 + 2.0 * e) / 3.0);
    let m = rho.matrix();
    let mut out = Mat9::zeros();
    let mut avg = [[C64::new(0.0, 0.0); 3]; 3];
    for s in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                avg[i][j] += m[(3 * s + i, 3 * s + j)] / 3.0;
            }
        }
    }
    for s in 0..3 {
        for t in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let (r, q) = (3 * s + i, 3 * t + j);
                    out[(r, q)] = if s == t { m[(r, q)] * e + avg[i][j] * (1.0 - e) } else { m[(r, q)] * c };
                }
            }
        }
    }
    DensityMatrix::from_raw(out).tidy()
}

/// Relax for `t` with T1 populations and T2* coherences.
pub fn apply_decoherence(
    rho: &DensityMatrix,
    t: f64,
    params: &RelaxationParams,
) -> Result<DensityMatrix, DynamicsError> {
    if !(t >= 0.0) {
        return Err(DynamicsError::InvalidTime(t));
    }
    params.validate()?;
    Ok(relaxation_channel(rho, (-t / params.t1).exp(), (-t / params.t2_star).exp()))
}
