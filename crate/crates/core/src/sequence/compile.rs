use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::SequenceError;

pub const TIMELINE_SCHEMA_VERSION: u32 = 1;

/// Sweep-variable values in SI units (dBm for power sweeps).
pub type Assignment = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Laser,
    Mw,
    Wait,
    Readout,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Laser => "laser",
            Channel::Mw => "mw",
            Channel::Wait => "wait",
            Channel::Readout => "readout",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseRole {
    Explicit,
    Pi,
    HalfPi,
}

/// Maps MW power to Rabi frequency, `Ω ∝ √P`, anchored at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbmCalibration {
    pub reference_dbm: f64,
    /// Rabi frequency at `reference_dbm`, Hz.
    pub reference_rabi: f64,
}

impl Default for DbmCalibration {
    fn default() -> Self {
        Self { reference_dbm: 30.0, reference_rabi: 5e6 }
    }
}

impl DbmCalibration {
    pub fn rabi(&self, dbm: f64) -> f64 {
        self.reference_rabi * 10f64.powf((dbm - self.reference_dbm) / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompileOptions {
    /// Rabi frequency of MW pulses without `amp`, Hz.
    pub default_rabi: f64,
    pub dbm: DbmCalibration,
    /// Longest allowed sequence, s.
    pub max_duration: f64,
    pub max_events: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { default_rabi: 5e6, dbm: DbmCalibration::default(), max_duration: 1.0, max_events: 1_000_000 }
    }
}

/// Equality ignores the source position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Event {
    pub start_ns: i64,
    pub end_ns: i64,
    pub channel: Channel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<PulseRole>,
    /// Source statement.
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        (self.start_ns, self.end_ns, self.channel, self.frequency_hz, self.rabi_hz, self.phase_rad, self.role)
            == (o.start_ns, o.end_ns, o.channel, o.frequency_hz, o.rabi_hz, o.phase_rad, o.role)
    }
}

impl Event {
    pub fn start(&self) -> f64 {
        self.start_ns as f64 * 1e-9
    }

    pub fn end(&self) -> f64 {
        self.end_ns as f64 * 1e-9
    }

    pub fn duration(&self) -> f64 {
        (self.end_ns - self.start_ns) as f64 * 1e-9
    }

    pub fn duration_ns(&self) -> i64 {
        self.end_ns - self.start_ns
    }
}

/// A duration moved onto the 1 ns grid. Equality ignores the position.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Snap {
    pub line: usize,
    pub col: usize,
    pub requested_s: f64,
    pub snapped_ns: i64,
}

impl PartialEq for Snap {
    fn eq(&self, o: &Self) -> bool {
        self.requested_s == o.requested_s && self.snapped_ns == o.snapped_ns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub schema_version: u32,
    pub total_duration_ns: i64,
    pub events: Vec<Event>,
    pub snaps: Vec<Snap>,
}

impl Timeline {
    pub fn total_duration(&self) -> f64 {
        self.total_duration_ns as f64 * 1e-9
    }

    pub fn on(&self, channel: Channel) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.channel == channel)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timeline serializes")
    }

    /// Events sorted and non-overlapping on every channel, times non-negative.
    pub fn validate(&self) -> Result<(), SequenceError> {
        let mut last: BTreeMap<Channel, i64> = BTreeMap::new();
        let mut prev_start = 0;
        for e in &self.events {
            if e.start_ns < 0 || e.end_ns < e.start_ns || e.start_ns < prev_start {
                return Err(SequenceError::InvalidValue {
                    pos: Position { line: e.line, col: e.col },
                    message: "events are not time ordered".into(),
                });
            }
            if let Some(end) = last.get(&e.channel) {
                if e.start_ns < *end {
                    return Err(SequenceError::Overlap { channel: e.channel.to_string(), at_ns: e.start_ns });
                }
            }
            last.insert(e.channel, e.end_ns);
            prev_start = e.start_ns;
        }
        Ok(())
    }
}

/// Whole nanoseconds below this difference are not reported as snaps.
const SNAP_REPORT_NS: f64 = 1e-6;

struct Compiler<'a> {
    program: &'a SequenceProgram,
    assignment: &'a Assignment,
    options: &'a CompileOptions,
    cursor: i64,
    max_ns: i64,
    events: Vec<Event>,
    snaps: Vec<Snap>,
}

impl Compiler<'_> {
    fn resolve(&self, v: &Value, pos: Position) -> Result<(f64, Dimension), SequenceError> {
        match v {
            Value::Literal(q) => Ok((q.si(), q.unit.dimension())),
            Value::Var(name) => {
                let x = *self
                    .assignment
                    .get(name)
                    .ok_or_else(|| SequenceError::UnassignedVariable { pos, name: name.clone() })?;
                if !x.is_finite() {
                    return Err(SequenceError::InvalidValue { pos, message: format!("${name} is not finite") });
                }
                let dim = self.program.sweep(name).map(|w| w.dimension()).unwrap_or(Dimension::Dimensionless);
                Ok((x, dim))
            }
        }
    }

    fn snap(&mut self, seconds: f64, pos: Position) -> Result<i64, SequenceError> {
        if !(seconds >= 0.0) || !seconds.is_finite() {
            return Err(SequenceError::InvalidValue {
                pos,
                message: format!("duration {seconds:e} s is not a valid duration"),
            });
        }
        let exact = seconds * 1e9;
        if exact > self.max_ns as f64 {
            return Err(SequenceError::DurationOverflow { total: seconds, limit: self.options.max_duration });
        }
        let ns = exact.round() as i64;
        if (exact - ns as f64).abs() > SNAP_REPORT_NS {
            self.snaps.push(Snap { line: pos.line, col: pos.col, requested_s: seconds, snapped_ns: ns });
        }
        Ok(ns)
    }

    fn push(
        &mut self,
        channel: Channel,
        ns: i64,
        pos: Position,
        mw: Option<(f64, f64, f64, PulseRole)>,
    ) -> Result<(), SequenceError> {
        if self.events.len() >= self.options.max_events {
            return Err(SequenceError::TooManyEvents(self.options.max_events));
        }
        let end = self.cursor + ns;
        if end > self.max_ns {
            return Err(SequenceError::DurationOverflow { total: end as f64 * 1e-9, limit: self.options.max_duration });
        }
        let (frequency_hz, rabi_hz, phase_rad, role) = match mw {
            Some((f, r, p, role)) => (Some(f), Some(r), Some(p), Some(role)),
            None => (None, None, None, None),
        };
        self.events.push(Event {
            start_ns: self.cursor,
            end_ns: end,
            channel,
            frequency_hz,
            rabi_hz,
            phase_rad,
            role,
            line: pos.line,
            col: pos.col,
        });
        self.cursor = end;
        Ok(())
    }

    fn duration(&mut self, v: &Value, pos: Position) -> Result<i64, SequenceError> {
        let (s, _) = self.resolve(v, pos)?;
        self.snap(s, pos)
    }

    fn block(&mut self, body: &[Spanned<Statement>]) -> Result<(), SequenceError> {
        for s in body {
            let pos = s.pos;
            match &s.node {
                Statement::Laser(v) => {
                    let ns = self.duration(v, pos)?;
                    self.push(Channel::Laser, ns, pos, None)?;
                }
                Statement::Wait(v) => {
                    let ns = self.duration(v, pos)?;
                    self.push(Channel::Wait, ns, pos, None)?;
                }
                Statement::Readout(v) => {
                    let ns = self.duration(v, pos)?;
                    self.push(Channel::Readout, ns, pos, None)?;
                }
                Statement::Mw(m) => self.mw(m, pos)?,
                Statement::Sweep(_) => {}
                Statement::Repeat { count, body } => {
                    if event_count(body) == 0 {
                        continue;
                    }
                    for _ in 0..*count {
                        self.block(body)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn mw(&mut self, m: &MwPulse, pos: Position) -> Result<(), SequenceError> {
        let (f, _) = self.resolve(&m.frequency, pos)?;
        if !(f > 0.0) {
            return Err(SequenceError::InvalidValue { pos, message: format!("frequency {f:e} Hz must be positive") });
        }
        let rabi = match &m.amplitude {
            None => self.options.default_rabi,
            Some(v) => match self.resolve(v, pos)? {
                (dbm, Dimension::Power) => self.options.dbm.rabi(dbm),
                (hz, _) => hz,
            },
        };
        if !(rabi >= 0.0) || !rabi.is_finite() {
            return Err(SequenceError::InvalidValue { pos, message: format!("Rabi frequency {rabi:e} Hz is invalid") });
        }
        let phase = match &m.phase {
            None => 0.0,
            Some(v) => self.resolve(v, pos)?.0,
        };
        let (seconds, role) = match &m.duration {
            MwDuration::Explicit(v) => (self.resolve(v, pos)?.0, PulseRole::Explicit),
            MwDuration::Pi | MwDuration::HalfPi if rabi == 0.0 => {
                return Err(SequenceError::InvalidValue { pos, message: "pi pulse with zero Rabi frequency".into() })
            }
            MwDuration::Pi => (1.0 / (2.0 * rabi), PulseRole::Pi),
            MwDuration::HalfPi => (1.0 / (4.0 * rabi), PulseRole::HalfPi),
        };
        let ns = self.snap(seconds, pos)?;
        self.push(Channel::Mw, ns, pos, Some((f, rabi, phase, role)))
    }
}

fn event_count(body: &[Spanned<Statement>]) -> u128 {
    body.iter()
        .map(|s| match &s.node {
            Statement::Sweep(_) => 0,
            Statement::Repeat { count, body } => (*count as u128).saturating_mul(event_count(body)),
            _ => 1,
        })
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Lay the program out on a 1 ns grid starting at t = 0.
pub fn compile(
    program: &SequenceProgram,
    assignment: &Assignment,
    options: &CompileOptions,
) -> Result<Timeline, SequenceError> {
    if !(options.max_duration > 0.0) || !(options.default_rabi >= 0.0) {
        return Err(SequenceError::InvalidRange("compile options out of range".into()));
    }
    let max_ns = (options.max_duration * 1e9).min(i64::MAX as f64 / 2.0).round() as i64;
    let mut c = Compiler { program, assignment, options, cursor: 0, max_ns, events: Vec::new(), snaps: Vec::new() };
    c.block(&program.statements)?;
    let timeline = Timeline {
        schema_version: TIMELINE_SCHEMA_VERSION,
        total_duration_ns: c.cursor,
        events: c.events,
        snaps: c.snaps,
    };
    timeline.validate()?;
    Ok(timeline)
}

/// Assignment for point `index` of the sweep named `name`.
pub fn sweep_assignment(program: &SequenceProgram, name: &str, index: usize) -> Result<Assignment, SequenceError> {
    let w = program.sweep(name).ok_or_else(|| SequenceError::UnknownSweep(name.into()))?;
    if index >= w.points {
        return Err(SequenceError::InvalidRange(format!("point {index} outside sweep '{name}'")));
    }
    Ok(Assignment::from([(name.to_string(), w.value(index))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::parse;

    fn build(src: &str, a: &[(&str, f64)]) -> Result<Timeline, SequenceError> {
        let p = parse(src)?;
        let a: Assignment = a.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        compile(&p, &a, &CompileOptions::default())
    }

    #[test]
    fn pi_duration_from_rabi() {
        let t = build("mw pi @ 2832MHz", &[]).unwrap();
        assert_eq!(t.events[0].duration_ns(), 100);
        let t = build("mw pi/2 @ 2832MHz amp 1MHz", &[]).unwrap();
        assert_eq!(t.events[0].duration_ns(), 250);
    }

    #[test]
    fn sequential_pulses_do_not_overlap() {
        let t = build("mw pi @ 2832MHz\nmw pi @ 2832MHz", &[]).unwrap();
        assert_eq!((t.events[1].start_ns, t.total_duration_ns), (100, 200));
    }

    #[test]
    fn repeat_expands() {
        let t = build("repeat 3 {\n  laser 400ns\n  wait 600ns\n}", &[]).unwrap();
        assert_eq!(t.total_duration_ns, 3000);
        assert_eq!(t.events.len(), 6);
    }

    #[test]
    fn ramsey_gap() {
        let src = "sweep tau 0:10us:11\nmw pi/2 @ 2.87GHz\nwait $tau\nmw pi/2 @ 2.87GHz";
        let t = build(src, &[("tau", 2e-6)]).unwrap();
        let mw: Vec<&Event> = t.on(Channel::Mw).collect();
        assert_eq!(mw[1].start_ns - mw[0].end_ns, 2000);
        assert!(t.snaps.is_empty());
    }

    #[test]
    fn unassigned_and_overflow() {
        let src = "sweep tau 0:10us:11\nwait $tau";
        assert!(matches!(build(src, &[]), Err(SequenceError::UnassignedVariable { .. })));
        assert!(matches!(build("wait 2s", &[]), Err(SequenceError::DurationOverflow { .. })));
        assert!(matches!(build("repeat 1000000000 { wait 1ns }", &[]), Err(SequenceError::TooManyEvents(_))));
    }

    #[test]
    fn snapping_is_reported() {
        let t = build("wait 1.4ns\nwait 2ns", &[]).unwrap();
        assert_eq!(t.total_duration_ns, 3);
        assert_eq!(t.snaps.len(), 1);
        assert_eq!(t.snaps[0].snapped_ns, 1);
    }

    #[test]
    fn dbm_amplitude() {
        let t = build("mw 10ns @ 2.87GHz amp 24dBm", &[]).unwrap();
        let r = t.events[0].rabi_hz.unwrap();
        assert!((r - 5e6 * 10f64.powf(-0.3)).abs() < 1e-6);
    }

    #[test]
    fn json_schema() {
        let t = build("laser 3us\nmw pi @ 2.87GHz", &[]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["events"][1]["start_ns"], 3000);
        assert_eq!(v["events"][1]["role"], "pi");
        assert!(v["events"][0].get("frequency_hz").is_none());
    }
}
