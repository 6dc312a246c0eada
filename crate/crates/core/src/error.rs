use thiserror::Error;

use crate::{analysis, dynamics, hamiltonian, resonator, sequence, sgi};

/// Crate-level error with the originating module in the message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hamiltonian: {0}")]
    Hamiltonian(#[from] hamiltonian::HamiltonianError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("sequence: {0}")]
    Sequence(#[from] sequence::SequenceError),
    #[error("analysis: {0}")]
    Fit(#[from] analysis::FitError),
    #[error("sgi: {0}")]
    Sgi(#[from] sgi::SgiError),
    #[error("resonator: {0}")]
    Resonator(#[from] resonator::ResonatorError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
