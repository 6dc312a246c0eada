use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{ParseErrorKind, SequenceError};

fn perr(pos: Position, kind: ParseErrorKind, message: impl Into<String>) -> SequenceError {
    SequenceError::Parse { pos, kind, message: message.into() }
}

/// What a numeric slot accepts.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Duration,
    Frequency,
    Amplitude,
    Phase,
}

impl Slot {
    fn name(&self) -> &'static str {
        match self {
            Slot::Duration => "duration",
            Slot::Frequency => "frequency",
            Slot::Amplitude => "amplitude",
            Slot::Phase => "phase",
        }
    }

    fn accepts(&self, d: Dimension) -> bool {
        match self {
            Slot::Duration => d == Dimension::Time,
            Slot::Frequency => d == Dimension::Frequency,
            Slot::Amplitude => matches!(d, Dimension::Frequency | Dimension::Power),
            Slot::Phase => matches!(d, Dimension::Angle | Dimension::Dimensionless),
        }
    }
}

struct Use {
    name: String,
    slot: Slot,
    pos: Position,
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    uses: Vec<Use>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(x) => format!("number {x}"),
            Tok::Var(v) => format!("${v}"),
            Tok::At => "'@'".into(),
            Tok::Colon => "':'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn syntax(&self, expected: &str) -> SequenceError {
        let t = self.peek();
        perr(t.pos, ParseErrorKind::Syntax, format!("expected {expected}, found {}", Self::describe(&t.tok)))
    }

    fn block(&mut self, top: bool) -> Result<Vec<Spanned<Statement>>, SequenceError> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            match &self.peek().tok {
                Tok::Eof if top => return Ok(out),
                Tok::Eof => return Err(self.syntax("'}'")),
                Tok::RBrace if !top => {
                    self.next();
                    return Ok(out);
                }
                _ => {}
            }
            let stmt = self.statement(top)?;
            out.push(stmt);
            match &self.peek().tok {
                Tok::Newline | Tok::Eof => {}
                Tok::RBrace if !top => {}
                _ => return Err(self.syntax("end of statement")),
            }
        }
    }

    fn statement(&mut self, top: bool) -> Result<Spanned<Statement>, SequenceError> {
        let t = self.next();
        let pos = t.pos;
        let word = match t.tok {
            Tok::Ident(w) => w,
            other => {
                return Err(perr(
                    pos,
                    ParseErrorKind::Syntax,
                    format!("expected a statement, found {}", Self::describe(&other)),
                ))
            }
        };
        let node = match word.as_str() {
            "laser" => Statement::Laser(self.value(Slot::Duration)?),
            "wait" => Statement::Wait(self.value(Slot::Duration)?),
            "readout" => Statement::Readout(self.value(Slot::Duration)?),
            "mw" => Statement::Mw(self.mw()?),
            "sweep" => {
                if !top {
                    return Err(perr(pos, ParseErrorKind::InvalidSweep, "sweep declarations must be at top level"));
                }
                Statement::Sweep(self.sweep()?)
            }
            "repeat" => {
                let t = self.next();
                let count = match t.tok {
                    Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 && n <= usize::MAX as f64 => n as usize,
                    _ => return Err(perr(t.pos, ParseErrorKind::Syntax, "repeat count must be a positive integer")),
                };
                self.skip_newlines();
                if self.peek().tok != Tok::LBrace {
                    return Err(self.syntax("'{'"));
                }
                self.next();
                let body = self.block(false)?;
                Statement::Repeat { count, body }
            }
            other => return Err(perr(pos, ParseErrorKind::Syntax, format!("unknown statement '{other}'"))),
        };
        Ok(Spanned::new(node, pos))
    }

    /// Number with an optional unit. A unit glued to the number must be
    /// known; a separate word is a unit only if it names one.
    fn quantity(&mut self) -> Result<(Quantity, Position), SequenceError> {
        let t = self.next();
        let x = match t.tok {
            Tok::Number(x) => x,
            other => {
                return Err(perr(
                    t.pos,
                    ParseErrorKind::Syntax,
                    format!("expected a number, found {}", Self::describe(&other)),
                ))
            }
        };
        let mut unit = Unit::None;
        if let Tok::Ident(u) = &self.peek().tok {
            match Unit::parse(u) {
                Some(parsed) => {
                    unit = parsed;
                    self.next();
                }
                None if !self.peek().spaced => {
                    return Err(perr(self.peek().pos, ParseErrorKind::UnknownUnit, format!("unknown unit '{u}'")));
                }
                None => {}
            }
        }
        Ok((Quantity::new(x, unit), t.pos))
    }

    fn value(&mut self, slot: Slot) -> Result<Value, SequenceError> {
        if let Tok::Var(name) = &self.peek().tok {
            let name = name.clone();
            let pos = self.next().pos;
            self.uses.push(Use { name: name.clone(), slot, pos });
            return Ok(Value::Var(name));
        }
        let (q, pos) = self.quantity()?;
        check_literal(&q, slot, pos)?;
        Ok(Value::Literal(q))
    }

    fn mw(&mut self) -> Result<MwPulse, SequenceError> {
        let duration = match &self.peek().tok {
            Tok::Ident(w) if w == "pi" => {
                self.next();
                if self.peek().tok == Tok::Slash {
                    self.next();
                    let t = self.next();
                    if t.tok != Tok::Number(2.0) {
                        return Err(perr(t.pos, ParseErrorKind::Syntax, "only pi and pi/2 are supported"));
                    }
                    MwDuration::HalfPi
                } else {
                    MwDuration::Pi
                }
            }
            _ => MwDuration::Explicit(self.value(Slot::Duration)?),
        };
        if self.peek().tok != Tok::At {
            return Err(self.syntax("'@' and a frequency"));
        }
        self.next();
        let frequency = self.value(Slot::Frequency)?;
        let (mut amplitude, mut phase) = (None, None);
        while let Tok::Ident(w) = &self.peek().tok {
            let pos = self.peek().pos;
            match w.as_str() {
                "amp" if amplitude.is_none() => {
                    self.next();
                    amplitude = Some(self.value(Slot::Amplitude)?);
                }
                "phase" if phase.is_none() => {
                    self.next();
                    phase = Some(self.value(Slot::Phase)?);
                }
                "amp" | "phase" => return Err(perr(pos, ParseErrorKind::Syntax, format!("'{w}' given twice"))),
                other => {
                    return Err(perr(pos, ParseErrorKind::Syntax, format!("unexpected '{other}' in mw statement")))
                }
            }
        }
        Ok(MwPulse { duration, frequency, amplitude, phase })
    }

    fn sweep(&mut self) -> Result<Sweep, SequenceError> {
        let t = self.next();
        let name = match t.tok {
            Tok::Ident(n) => n,
            Tok::Var(n) => n,
            _ => return Err(perr(t.pos, ParseErrorKind::Syntax, "expected a sweep variable name")),
        };
        let (start, spos) = self.quantity()?;
        self.colon()?;
        let (stop, _) = self.quantity()?;
        self.colon()?;
        let t = self.next();
        let points = match t.tok {
            Tok::Number(n) if n.fract() == 0.0 && n >= 0.0 && n <= 1e9 => n as usize,
            _ => return Err(perr(t.pos, ParseErrorKind::InvalidSweep, "sweep point count must be an integer")),
        };
        if points < 2 {
            return Err(perr(t.pos, ParseErrorKind::InvalidSweep, "a sweep needs at least 2 points"));
        }
        let (da, db) = (start.unit.dimension(), stop.unit.dimension());
        if da != db && da != Dimension::Dimensionless && db != Dimension::Dimensionless {
            return Err(perr(spos, ParseErrorKind::InvalidSweep, "sweep endpoints have different dimensions"));
        }
        Ok(Sweep { name, start, stop, points })
    }

    fn colon(&mut self) -> Result<(), SequenceError> {
        if self.peek().tok != Tok::Colon {
            return Err(self.syntax("':'"));
        }
        self.next();
        Ok(())
    }
}

fn check_literal(q: &Quantity, slot: Slot, pos: Position) -> Result<(), SequenceError> {
    let d = q.unit.dimension();
    if !slot.accepts(d) {
        let msg = match slot {
            Slot::Duration => "duration needs a time unit (ns, us, ms, s)",
            Slot::Frequency => "frequency needs a unit (Hz, kHz, MHz, GHz)",
            Slot::Amplitude => "amplitude needs a frequency unit or dBm",
            Slot::Phase => "phase takes rad, deg or a bare number",
        };
        return Err(perr(pos, ParseErrorKind::UnknownUnit, msg));
    }
    match slot {
        Slot::Duration if q.magnitude < 0.0 => Err(perr(pos, ParseErrorKind::NegativeDuration, "negative duration")),
        Slot::Frequency if q.magnitude <= 0.0 => Err(perr(pos, ParseErrorKind::Syntax, "frequency must be positive")),
        Slot::Amplitude if d == Dimension::Frequency && q.magnitude < 0.0 => {
            Err(perr(pos, ParseErrorKind::Syntax, "amplitude must be non-negative"))
        }
        _ => Ok(()),
    }
}

/// Parse sequence source text.
pub fn parse(text: &str) -> Result<SequenceProgram, SequenceError> {
    parse_with_sweeps(text, &[])
}

/// Parse a single sweep given as `name=start:stop:points` (or with a space
/// in place of `=`), for example `tau=0:10us:200`.
pub fn parse_sweep(spec: &str) -> Result<Sweep, SequenceError> {
    let text = spec.replacen('=', " ", 1);
    let mut p = Parser { toks: lex(&text)?, at: 0, uses: Vec::new() };
    let w = p.sweep()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.syntax("end of sweep"));
    }
    Ok(w)
}

/// Parse with extra sweep declarations; a sweep named in the source is
/// replaced, others are added in front of the program.
pub fn parse_with_sweeps(text: &str, extra: &[Sweep]) -> Result<SequenceProgram, SequenceError> {
    let mut p = Parser { toks: lex(text)?, at: 0, uses: Vec::new() };
    let mut statements = p.block(true)?;

    let mut sweeps: BTreeMap<String, (Sweep, Position)> = BTreeMap::new();
    for s in &statements {
        if let Statement::Sweep(w) = &s.node {
            if sweeps.insert(w.name.clone(), (w.clone(), s.pos)).is_some() {
                return Err(perr(s.pos, ParseErrorKind::InvalidSweep, format!("sweep '{}' declared twice", w.name)));
            }
        }
    }
    let mut added = Vec::new();
    for w in extra {
        if w.points < 2 {
            return Err(SequenceError::InvalidRange(format!("sweep '{}' needs at least 2 points", w.name)));
        }
        match sweeps.get(&w.name) {
            Some(_) => {
                for s in statements.iter_mut() {
                    if let Statement::Sweep(old) = &mut s.node {
                        if old.name == w.name {
                            *old = w.clone();
                        }
                    }
                }
            }
            None => added.push(Spanned::bare(Statement::Sweep(w.clone()))),
        }
        sweeps.insert(w.name.clone(), (w.clone(), Position::default()));
    }
    if !added.is_empty() {
        added.extend(statements);
        statements = added;
    }

    let mut used = BTreeSet::new();
    for u in &p.uses {
        let Some((w, _)) = sweeps.get(&u.name) else {
            return Err(perr(u.pos, ParseErrorKind::UndefinedVariable, format!("undefined variable ${}", u.name)));
        };
        if !u.slot.accepts(w.dimension()) {
            return Err(perr(
                u.pos,
                ParseErrorKind::InvalidSweep,
                format!("${} is not a valid {}", u.name, u.slot.name()),
            ));
        }
        let lo = w.start.magnitude.min(w.stop.magnitude);
        match u.slot {
            Slot::Duration if lo < 0.0 => {
                return Err(perr(
                    u.pos,
                    ParseErrorKind::NegativeDuration,
                    format!("${} sweeps to a negative duration", u.name),
                ))
            }
            Slot::Frequency if lo <= 0.0 => {
                return Err(perr(
                    u.pos,
                    ParseErrorKind::InvalidSweep,
                    format!("${} sweeps to a non-positive frequency", u.name),
                ))
            }
            _ => {}
        }
        used.insert(u.name.clone());
    }
    for (name, (_, pos)) in &sweeps {
        if !used.contains(name) {
            return Err(perr(*pos, ParseErrorKind::InvalidSweep, format!("sweep '{name}' is never used")));
        }
    }
    Ok(SequenceProgram { statements })
}
