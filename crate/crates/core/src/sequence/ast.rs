//! Syntax tree of the pulse-sequence language.

use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A node with its source position. Equality ignores the position, so
/// programs compare structurally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spanned<T> {
    pub node: T,
    pub pos: Position,
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T> Spanned<T> {
    pub fn new(node: T, pos: Position) -> Self {
        Self { node, pos }
    }

    /// Node without a meaningful position, for generated programs.
    pub fn bare(node: T) -> Self {
        Self { node, pos: Position::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Time,
    Frequency,
    Power,
    Angle,
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Ns,
    Us,
    Ms,
    S,
    Hz,
    KHz,
    MHz,
    GHz,
    DBm,
    Rad,
    Deg,
    /// Bare number.
    None,
}

impl Unit {
    pub fn parse(s: &str) -> Option<Unit> {
        Some(match s {
            "ns" => Unit::Ns,
            "us" | "µs" | "μs" => Unit::Us,
            "ms" => Unit::Ms,
            "s" => Unit::S,
            "Hz" => Unit::Hz,
            "kHz" => Unit::KHz,
            "MHz" => Unit::MHz,
            "GHz" => Unit::GHz,
            "dBm" => Unit::DBm,
            "rad" => Unit::Rad,
            "deg" => Unit::Deg,
            _ => return None,
        })
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Unit::Ns => "ns",
            Unit::Us => "us",
            Unit::Ms => "ms",
            Unit::S => "s",
            Unit::Hz => "Hz",
            Unit::KHz => "kHz",
            Unit::MHz => "MHz",
            Unit::GHz => "GHz",
            Unit::DBm => "dBm",
            Unit::Rad => "rad",
            Unit::Deg => "deg",
            Unit::None => "",
        }
    }

    pub fn dimension(&self) -> Dimension {
        match self {
            Unit::Ns | Unit::Us | Unit::Ms | Unit::S => Dimension::Time,
            Unit::Hz | Unit::KHz | Unit::MHz | Unit::GHz => Dimension::Frequency,
            Unit::DBm => Dimension::Power,
            Unit::Rad | Unit::Deg => Dimension::Angle,
            Unit::None => Dimension::Dimensionless,
        }
    }

    /// Convert a magnitude to SI (s, Hz, rad; dBm stays dBm). Sub-unit times
    /// divide by an exact power of ten so the result is correctly rounded.
    pub fn to_si(&self, x: f64) -> f64 {
        match self {
            Unit::Ns => x / 1e9,
            Unit::Us => x / 1e6,
            Unit::Ms => x / 1e3,
            Unit::KHz => x * 1e3,
            Unit::MHz => x * 1e6,
            Unit::GHz => x * 1e9,
            Unit::Deg => x.to_radians(),
            Unit::S | Unit::Hz | Unit::DBm | Unit::Rad | Unit::None => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub magnitude: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(magnitude: f64, unit: Unit) -> Self {
        Self { magnitude, unit }
    }

    pub fn si(&self) -> f64 {
        self.unit.to_si(self.magnitude)
    }

    /// Seconds in the largest unit that converts back exactly.
    pub fn time(seconds: f64) -> Self {
        for (unit, scale) in [(Unit::Us, 1e6), (Unit::Ns, 1e9), (Unit::Ms, 1e3)] {
            let m = (seconds * scale).round();
            if unit.to_si(m) == seconds {
                return Self::new(m, unit);
            }
        }
        Self::new(seconds, Unit::S)
    }

    /// Hz in the largest unit that converts back exactly.
    pub fn frequency(hz: f64) -> Self {
        for (unit, scale) in [(Unit::GHz, 1e9), (Unit::MHz, 1e6), (Unit::KHz, 1e3)] {
            let m = hz / scale;
            if unit.to_si(m) == hz {
                return Self::new(m, unit);
            }
        }
        Self::new(hz, Unit::Hz)
    }
}

fn fmt_number(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        write!(f, "{x}")
    } else {
        write!(f, "{x:e}")
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_number(self.magnitude, f)?;
        f.write_str(self.unit.symbol())
    }
}

/// Numeric slot: a literal or a `$variable`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Literal(Quantity),
    Var(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Literal(q) => q.fmt(f),
            Value::Var(v) => write!(f, "${v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MwDuration {
    Explicit(Value),
    Pi,
    HalfPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwPulse {
    pub duration: MwDuration,
    pub frequency: Value,
    /// Rabi frequency or dBm.
    pub amplitude: Option<Value>,
    pub phase: Option<Value>,
}

/// Linear sweep declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub name: String,
    pub start: Quantity,
    pub stop: Quantity,
    pub points: usize,
}

impl Sweep {
    pub fn dimension(&self) -> Dimension {
        match (self.start.unit, self.stop.unit) {
            (Unit::None, u) | (u, Unit::None) => u.dimension(),
            (u, _) => u.dimension(),
        }
    }

    fn unit(&self) -> Unit {
        if self.start.unit == Unit::None {
            self.stop.unit
        } else {
            self.start.unit
        }
    }

    /// SI value of point `i`; a bare endpoint takes the other's unit.
    pub fn value(&self, i: usize) -> f64 {
        let u = self.unit();
        let a = if self.start.unit == Unit::None { u.to_si(self.start.magnitude) } else { self.start.si() };
        let b = if self.stop.unit == Unit::None { u.to_si(self.stop.magnitude) } else { self.stop.si() };
        if i + 1 == self.points {
            return b;
        }
        a + (b - a) * i as f64 / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Statement {
    Laser(Value),
    Wait(Value),
    Readout(Value),
    Mw(MwPulse),
    Sweep(Sweep),
    Repeat { count: usize, body: Vec<Spanned<Statement>> },
}

/// Parsed sequence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceProgram {
    pub statements: Vec<Spanned<Statement>>,
}

impl SequenceProgram {
    pub fn sweeps(&self) -> Vec<&Sweep> {
        self.statements
            .iter()
            .filter_map(|s| match &s.node {
                Statement::Sweep(w) => Some(w),
                _ => None,
            })
            .collect()
    }

    pub fn sweep(&self, name: &str) -> Option<&Sweep> {
        self.sweeps().into_iter().find(|s| s.name == name)
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, body: &[Spanned<Statement>], indent: usize) -> fmt::Result {
    for s in body {
        write!(f, "{:indent$}", "", indent = indent)?;
        match &s.node {
            Statement::Laser(v) => writeln!(f, "laser {v}")?,
            Statement::Wait(v) => writeln!(f, "wait {v}")?,
            Statement::Readout(v) => writeln!(f, "readout {v}")?,
            Statement::Mw(p) => {
                f.write_str("mw ")?;
                match &p.duration {
                    MwDuration::Explicit(v) => write!(f, "{v}")?,
                    MwDuration::Pi => f.write_str("pi")?,
                    MwDuration::HalfPi => f.write_str("pi/2")?,
                }
                write!(f, " @ {}", p.frequency)?;
                if let Some(a) = &p.amplitude {
                    write!(f, " amp {a}")?;
                }
                if let Some(ph) = &p.phase {
                    write!(f, " phase {ph}")?;
                }
                writeln!(f)?;
            }
            Statement::Sweep(w) => writeln!(f, "sweep {} {}:{}:{}", w.name, w.start, w.stop, w.points)?,
            Statement::Repeat { count, body } => {
                writeln!(f, "repeat {count} {{")?;
                write_block(f, body, indent + 2)?;
                writeln!(f, "{:indent$}}}", "", indent = indent)?;
            }
        }
    }
    Ok(())
}

/// Canonical source text; parses back to an equal program.
impl fmt::Display for SequenceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_block(f, &self.statements, 0)
    }
}
