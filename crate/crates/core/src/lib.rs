//! Nitrogen-vacancy spin physics toolkit.
//!
//! The crate covers the full chain from the ground-state spin Hamiltonian of an
//! NV center with a ¹⁴N nucleus to simulated lab measurements:
//!
//! * [`hamiltonian`]: build and diagonalize the 9-level S=1 ⊗ I=1 Hamiltonian,
//!   list allowed ESR transitions and synthesize ODMR spectra (single axis,
//!   bulk four-orientation and powder averages).
//! * [`dynamics`]: density-matrix evolution under microwave drive with
//!   phenomenological T1/T2* relaxation, plus a seven-level rate-equation model
//!   of optical pumping and spin-dependent fluorescence readout.
//! * [`sequence`]: a small line-oriented pulse-sequence language, its compiler
//!   to a nanosecond timeline and an executor that threads the NV state
//!   through it. Generators for the standard protocols live here too.
//! * [`analysis`]: Levenberg-Marquardt least squares with the fit models used
//!   for ODMR, Ramsey, T1 and Rabi data.
//! * [`sgi`]: Stern-Gerlach splitting estimates for a nanodiamond.
//! * [`resonator`]: lumped-element resonator design and Biot-Savart field maps.
//! * [`cli`]: the `nvsim` command-line front end.

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod dynamics;
mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod resonator;
pub mod sequence;
pub mod sgi;

pub use error::{Error, Result};
