//! Pulse-sequence language: parsing, compilation to a nanosecond timeline,
//! execution against the NV model, and generators for the standard
//! protocols.
//!
//! ```text
//! # pulsed ODMR
//! sweep f 2.86GHz:2.88GHz:101
//! laser 3us
//! wait 1us
//! mw pi @ $f amp 5MHz
//! readout 300ns
//! ```
//!
//! Statements run strictly one after another. `repeat n { ... }` expands its
//! body `n` times. Durations take `ns`, `us` (or `µs`), `ms`, `s`;
//! frequencies `Hz`, `kHz`, `MHz`, `GHz`; MW amplitude is a Rabi frequency
//! or a power in `dBm`; phase is in `rad` (default) or `deg`. `#` starts a
//! comment.

mod ast;
mod compile;
mod execute;
mod lexer;
mod parser;
pub mod protocols;

use thiserror::Error;

use crate::dynamics::DynamicsError;

pub use ast::{
    Dimension, MwDuration, MwPulse, Position, Quantity, SequenceProgram, Spanned, Statement, Sweep, Unit, Value,
};
pub use compile::{
    compile, sweep_assignment, Assignment, Channel, CompileOptions, DbmCalibration, Event, PulseRole, Snap, Timeline,
    TIMELINE_SCHEMA_VERSION,
};
pub use execute::{
    execute, run_sweep, DephasingModel, ExecOptions, ExecResult, Executor, Readout, StateCheck, SweepPoint, SweepResult,
};
pub use parser::{parse, parse_sweep, parse_with_sweeps};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    UnknownUnit,
    UndefinedVariable,
    NegativeDuration,
    Syntax,
    InvalidSweep,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("{pos}: {message}")]
    Parse { pos: Position, kind: ParseErrorKind, message: String },
    #[error("{pos}: variable ${name} has no value")]
    UnassignedVariable { pos: Position, name: String },
    #[error("{pos}: {message}")]
    InvalidValue { pos: Position, message: String },
    #[error("sequence lasts {total:e} s, above the limit of {limit:e} s")]
    DurationOverflow { total: f64, limit: f64 },
    #[error("sequence expands to more than {0} events")]
    TooManyEvents(usize),
    #[error("events overlap on the {channel} channel at {at_ns} ns")]
    Overlap { channel: String, at_ns: i64 },
    #[error("no sweep named {0}")]
    UnknownSweep(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl SequenceError {
    pub fn position(&self) -> Option<Position> {
        match self {
            SequenceError::Parse { pos, .. }
            | SequenceError::UnassignedVariable { pos, .. }
            | SequenceError::InvalidValue { pos, .. } => Some(*pos),
            _ => None,
        }
    }
}
