//! Line-based textual fact format.
//!
//! One fact per line, Prolog-style with a trailing period and an optional
//! probability prefix:
//!
//! ```text
//! 0.70::happensAt(walking(mike),1).
//! holdsAt(coord(id2)=(14,55),10600).
//! initially(person(mike)=true).
//! % comments start with a percent sign
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Arg, Entity, EventAtom, FactBody, FluentAtom, ProbFact, Timepoint, Value};

#[derive(Debug, Error, PartialEq)]
pub enum FactParseError {
    #[error("line {line}, col {col}: {reason}")]
    Parse { line: usize, col: usize, reason: String },
    #[error("line {line}: probability {prob} outside [0,1]")]
    InvalidProbability { line: usize, prob: f64 },
}

/// Parse a whole fact stream. Blank lines and `%` comments are skipped.
pub fn parse_facts(text: &str) -> Result<Vec<ProbFact>, FactParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        out.push(parse_fact_line(line, lineno + 1)?);
    }
    Ok(out)
}

/// Emit facts in the same format; `parse_facts(emit_facts(f)) == f`.
/// Crisp facts are printed without the probability prefix.
pub fn emit_facts(facts: &[ProbFact]) -> String {
    let mut out = String::new();
    for f in facts {
        if f.prob == 1.0 {
            let _ = writeln!(out, "{}.", f.body);
        } else {
            let _ = writeln!(out, "{}::{}.", f.prob, f.body);
        }
    }
    out
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str, line: usize) -> Scanner<'a> {
        Scanner { src: src.as_bytes(), pos: 0, line }
    }

    fn err<T>(&self, reason: impl Into<String>) -> Result<T, FactParseError> {
        Err(FactParseError::Parse { line: self.line, col: self.pos + 1, reason: reason.into() })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), FactParseError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, FactParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected identifier");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn int(&mut self) -> Result<i64, FactParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse().or_else(|_| self.err("expected integer"))
    }

    fn number(&mut self) -> Result<f64, FactParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'e' || c == b'E' || c == b'+')
        {
            // A '.' not followed by a digit terminates the fact, not the number.
            if self.peek() == Some(b'.')
                && !matches!(self.src.get(self.pos + 1), Some(c) if c.is_ascii_digit())
            {
                break;
            }
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse().or_else(|_| self.err("expected number"))
    }
}

fn parse_fact_line(line: &str, lineno: usize) -> Result<ProbFact, FactParseError> {
    let mut s = Scanner::new(line, lineno);

    // Optional `P::` prefix: present iff the line starts with a digit or dot.
    let mut prob = 1.0;
    s.skip_ws();
    if matches!(s.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
        prob = s.number()?;
        s.expect(b':')?;
        s.expect(b':')?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(FactParseError::InvalidProbability { line: lineno, prob });
        }
    }

    let head = s.ident()?;
    let body = match head.as_str() {
        "happensAt" => {
            s.expect(b'(')?;
            let event = parse_event(&mut s)?;
            s.expect(b',')?;
            let t = s.int()?;
            if t < 0 {
                return s.err("timepoint must be non-negative");
            }
            s.expect(b')')?;
            FactBody::Happens { event, at: Timepoint(t as u64) }
        }
        "holdsAt" => {
            s.expect(b'(')?;
            let fluent = parse_fluent(&mut s)?;
            s.expect(b',')?;
            let t = s.int()?;
            if t < 0 {
                return s.err("timepoint must be non-negative");
            }
            s.expect(b')')?;
            FactBody::Holds { fluent, at: Timepoint(t as u64) }
        }
        "initially" => {
            s.expect(b'(')?;
            let fluent = parse_fluent(&mut s)?;
            s.expect(b')')?;
            FactBody::Initially { fluent }
        }
        other => return s.err(format!("unknown fact head '{other}'")),
    };
    s.expect(b'.')?;
    s.skip_ws();
    if s.peek().is_some() {
        return s.err("trailing characters after fact");
    }
    Ok(ProbFact::new(body, prob))
}

fn parse_event(s: &mut Scanner) -> Result<EventAtom, FactParseError> {
    let functor = s.ident()?;
    let mut args = Vec::new();
    if s.eat(b'(') {
        loop {
            args.push(Entity::new(s.ident()?));
            if !s.eat(b',') {
                break;
            }
        }
        s.expect(b')')?;
    }
    Ok(EventAtom::new(functor, args))
}

fn parse_fluent(s: &mut Scanner) -> Result<FluentAtom, FactParseError> {
    let functor = s.ident()?;
    let mut args = Vec::new();
    if s.eat(b'(') {
        loop {
            s.skip_ws();
            match s.peek() {
                Some(c) if c.is_ascii_digit() || c == b'-' => args.push(Arg::Num(s.int()?)),
                _ => args.push(Arg::Entity(Entity::new(s.ident()?))),
            }
            if !s.eat(b',') {
                break;
            }
        }
        s.expect(b')')?;
    }
    s.expect(b'=')?;
    let value = parse_value(s)?;
    Ok(FluentAtom::new(functor, args, value))
}

fn parse_value(s: &mut Scanner) -> Result<Value, FactParseError> {
    s.skip_ws();
    match s.peek() {
        Some(b'(') => {
            s.expect(b'(')?;
            let x = s.int()?;
            s.expect(b',')?;
            let y = s.int()?;
            s.expect(b')')?;
            Ok(Value::Coord(x, y))
        }
        Some(c) if c.is_ascii_digit() || c == b'-' => Ok(Value::Int(s.int()?)),
        _ => {
            let id = s.ident()?;
            match id.as_str() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                other => s.err(format!("expected value, got '{other}'")),
            }
        }
    }
}
