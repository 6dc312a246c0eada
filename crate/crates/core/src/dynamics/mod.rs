//! Spin and optical dynamics of a single NV center.
//!
//! The spin part is a 9×9 density matrix over `|m_s, m_I⟩`, evolved under the
//! static Hamiltonian, microwave pulses and phenomenological relaxation. The
//! optical part is a classical seven-level rate model. [`NvState`] couples the
//! two for pulse-sequence execution.

mod coherent;
mod nv;
mod optical;
mod relaxation;
mod state;

use thiserror::Error;

use crate::hamiltonian::HamiltonianError;

pub use coherent::{
    apply_mw_pulse, evolve_unitary, rabi_population, DriveMode, DrivePulse, SpinEvolver, DEFAULT_MAX_FULL_CYCLES,
};
pub use nv::NvState;
pub(crate) use optical::sample_poisson;
pub use optical::{
    integrate_rates, optical_cycle, readout_counts, OpticalPopulations, OpticalRates, ReadoutCounts, SignalTrace,
    STABILITY_LIMIT,
};
pub use relaxation::{apply_decoherence, relaxation_channel, RelaxationParams, MAX_T2_OVER_T1};
pub use state::{DensityMatrix, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid time {0:e} s")]
    InvalidTime(f64),
    #[error("full-mode drive needs {cycles:e} carrier cycles, above the limit of {limit:e}")]
    CostGuard { cycles: f64, limit: f64 },
    #[error("invalid relaxation parameters: {0}")]
    InvalidRelaxation(String),
    #[error("invalid optical rates: {0}")]
    InvalidRates(String),
    #[error("invalid optical populations: {0}")]
    InvalidPopulations(String),
    #[error("step {dt:e} s too large for rate {max_rate:e} /s")]
    StepTooLarge { dt: f64, max_rate: f64 },
    #[error("empty readout window")]
    EmptyWindow,
    #[error("readout window [{start:e}, {end:e}] s outside the trace")]
    WindowOutsideTrace { start: f64, end: f64 },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}
