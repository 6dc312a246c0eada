//! Generators for the standard measurement protocols. Each returns a program
//! with one sweep variable; every generated program has a hand-written twin
//! in the test corpus that compiles to the same timeline.

use super::ast::*;
use super::SequenceError;

/// Optical pumping pulse ahead of every shot, s.
pub const PUMP_DURATION: f64 = 3e-6;
/// Dark settling time after pumping so the singlet empties, s.
pub const SETTLE_DURATION: f64 = 1e-6;
/// Photon-counting window at the head of the readout pulse, s.
pub const READOUT_WINDOW: f64 = 300e-9;
/// CW ODMR microwave dwell, s.
pub const CW_DWELL: f64 = 10e-6;
/// CW ODMR drive strength, Hz.
pub const CW_RABI: f64 = 100e3;

/// Linear scan `start..=stop` in `points` steps (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scan {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Scan {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    fn check(&self, what: &str, min: f64) -> Result<(), SequenceError> {
        if self.points < 2 {
            return Err(SequenceError::InvalidRange(format!("{what} scan needs at least 2 points")));
        }
        if !self.start.is_finite() || !self.stop.is_finite() || self.start == self.stop {
            return Err(SequenceError::InvalidRange(format!("{what} scan is empty")));
        }
        if self.start.min(self.stop) < min {
            return Err(SequenceError::InvalidRange(format!("{what} scan leaves the allowed range")));
        }
        Ok(())
    }

    fn time(&self, name: &str) -> Result<Statement, SequenceError> {
        self.check("time", 0.0)?;
        Ok(sweep(name, Quantity::time(self.start), Quantity::time(self.stop), self.points))
    }

    fn frequency(&self, name: &str) -> Result<Statement, SequenceError> {
        self.check("frequency", f64::MIN_POSITIVE)?;
        Ok(sweep(name, Quantity::frequency(self.start), Quantity::frequency(self.stop), self.points))
    }
}

fn sweep(name: &str, start: Quantity, stop: Quantity, points: usize) -> Statement {
    Statement::Sweep(Sweep { name: name.into(), start, stop, points })
}

fn time(s: f64) -> Value {
    Value::Literal(Quantity::time(s))
}

fn freq(hz: f64) -> Value {
    Value::Literal(Quantity::frequency(hz))
}

fn var(name: &str) -> Value {
    Value::Var(name.into())
}

fn mw(duration: MwDuration, frequency: Value, rabi: Option<f64>) -> Statement {
    Statement::Mw(MwPulse { duration, frequency, amplitude: rabi.map(freq), phase: None })
}

fn check_rabi(rabi: Option<f64>) -> Result<(), SequenceError> {
    match rabi {
        Some(r) if !(r > 0.0) || !r.is_finite() => {
            Err(SequenceError::InvalidRange("Rabi frequency must be positive".into()))
        }
        _ => Ok(()),
    }
}

fn check_frequency(f: f64) -> Result<(), SequenceError> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(SequenceError::InvalidRange("MW frequency must be positive".into()))
    }
}

fn program(statements: Vec<Statement>) -> SequenceProgram {
    SequenceProgram { statements: statements.into_iter().map(Spanned::bare).collect() }
}

fn head() -> [Statement; 2] {
    [Statement::Laser(time(PUMP_DURATION)), Statement::Wait(time(SETTLE_DURATION))]
}

fn readout() -> Statement {
    Statement::Readout(time(READOUT_WINDOW))
}

/// laser, wait, long weak MW at `$f`, readout.
pub fn cw_odmr(f: Scan) -> Result<SequenceProgram, SequenceError> {
    let [l, w] = head();
    Ok(program(vec![
        f.frequency("f")?,
        l,
        w,
        Statement::Mw(MwPulse {
            duration: MwDuration::Explicit(time(CW_DWELL)),
            frequency: var("f"),
            amplitude: Some(freq(CW_RABI)),
            phase: None,
        }),
        readout(),
    ]))
}

/// laser, wait, π pulse at `$f`, readout.
pub fn pulsed_odmr(f: Scan, rabi: Option<f64>) -> Result<SequenceProgram, SequenceError> {
    check_rabi(rabi)?;
    let [l, w] = head();
    Ok(program(vec![f.frequency("f")?, l, w, mw(MwDuration::Pi, var("f"), rabi), readout()]))
}

/// laser, wait, MW of duration `$t`, readout.
pub fn rabi(duration: Scan, frequency: f64, rabi: Option<f64>) -> Result<SequenceProgram, SequenceError> {
    check_rabi(rabi)?;
    check_frequency(frequency)?;
    let [l, w] = head();
    Ok(program(vec![duration.time("t")?, l, w, mw(MwDuration::Explicit(var("t")), freq(frequency), rabi), readout()]))
}

/// laser, wait, π/2, wait `$tau`, π/2, readout.
pub fn ramsey_vs_time(tau: Scan, frequency: f64, rabi: Option<f64>) -> Result<SequenceProgram, SequenceError> {
    check_rabi(rabi)?;
    check_frequency(frequency)?;
    let [l, w] = head();
    Ok(program(vec![
        tau.time("tau")?,
        l,
        w,
        mw(MwDuration::HalfPi, freq(frequency), rabi),
        Statement::Wait(var("tau")),
        mw(MwDuration::HalfPi, freq(frequency), rabi),
        readout(),
    ]))
}

/// Ramsey at fixed `tau` with the MW frequency swept as `$f`.
pub fn ramsey_vs_freq(f: Scan, tau: f64, rabi: Option<f64>) -> Result<SequenceProgram, SequenceError> {
    check_rabi(rabi)?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(SequenceError::InvalidRange("tau must be non-negative".into()));
    }
    let [l, w] = head();
    Ok(program(vec![
        f.frequency("f")?,
        l,
        w,
        mw(MwDuration::HalfPi, var("f"), rabi),
        Statement::Wait(time(tau)),
        mw(MwDuration::HalfPi, var("f"), rabi),
        readout(),
    ]))
}

/// laser, dark wait `$tau`, then a second laser whose head is the readout.
pub fn t1(tau: Scan) -> Result<SequenceProgram, SequenceError> {
    Ok(program(vec![
        tau.time("tau")?,
        Statement::Laser(time(PUMP_DURATION)),
        Statement::Wait(var("tau")),
        readout(),
        Statement::Laser(time(PUMP_DURATION - READOUT_WINDOW)),
    ]))
}

/// laser, wait, π/2, `$tau`, π, `$tau`, π/2, readout.
pub fn hahn_echo(tau: Scan, frequency: f64, rabi: Option<f64>) -> Result<SequenceProgram, SequenceError> {
    check_rabi(rabi)?;
    check_frequency(frequency)?;
    let [l, w] = head();
    Ok(program(vec![
        tau.time("tau")?,
        l,
        w,
        mw(MwDuration::HalfPi, freq(frequency), rabi),
        Statement::Wait(var("tau")),
        mw(MwDuration::Pi, freq(frequency), rabi),
        Statement::Wait(var("tau")),
        mw(MwDuration::HalfPi, freq(frequency), rabi),
        readout(),
    ]))
}
