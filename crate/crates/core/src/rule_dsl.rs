//! Rule language for activity definitions: `initiatedAt`/`terminatedAt`
//! clauses with a Prolog-flavoured concrete syntax.
//!
//! ```text
//! initiatedAt(moving(P1,P2)=true, T) :-
//!     happensAt(walking(P1), T),
//!     happensAt(walking(P2), T),
//!     holdsAt(close(P1,P2,34)=true, T),
//!     holdsAt(orientation(P1)=Or1, T),
//!     holdsAt(orientation(P2)=Or2, T),
//!     abs(Or1 - Or2) < 45.
//! ```
//!
//! Variables start with an upper-case letter; every temporal literal ends
//! with the single shared time variable. `not happensAt` negates an input
//! fact; `not holdsAt` negates a derivable goal. The two negations have
//! different probabilistic readings downstream, so the AST keeps them apart.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Fluents computed from coordinate and orientation facts rather than rules.
pub const BUILTIN_FLUENTS: [&str; 2] = ["close", "distance"];
/// Fluents whose values arrive directly as input facts.
pub const INPUT_FLUENTS: [&str; 2] = ["coord", "orientation"];

/// An argument position in a rule pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    Num(i64),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => f.write_str(c),
            Term::Num(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPattern {
    pub functor: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValuePattern {
    Bool(bool),
    Int(i64),
    Var(String),
}

impl fmt::Display for ValuePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuePattern::Bool(b) => write!(f, "{b}"),
            ValuePattern::Int(n) => write!(f, "{n}"),
            ValuePattern::Var(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentPattern {
    pub functor: String,
    pub args: Vec<Term>,
    pub value: ValuePattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "=<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "\\=",
        })
    }
}

/// Arithmetic side of a comparison: a variable, an integer, or `abs(a - b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Num(i64),
    AbsDiff(Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Num(n) => write!(f, "{n}"),
            Expr::AbsDiff(a, b) => write!(f, "abs({a} - {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    HappensAt(EventPattern),
    HoldsAt(FluentPattern),
    /// `not happensAt(...)`: negation of an input fact.
    NegFact(EventPattern),
    /// `not holdsAt(...)`: negation of a derivable goal.
    NegGoal(FluentPattern),
    Compare(Expr, CmpOp, Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Initiated,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub kind: RuleKind,
    pub head: FluentPattern,
    /// The single time variable shared by head and body.
    pub time_var: String,
    pub body: Vec<Literal>,
}

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("line {line}, col {col}: {reason}")]
    Parse { line: usize, col: usize, reason: String },
    #[error("rule for {head}: time variable {found} does not match {expected}")]
    TimeVariableMismatch { head: String, expected: String, found: String },
    #[error("rule for {head}: head variable {var} not bound by any positive body literal")]
    UnboundHeadVariable { head: String, var: String },
    #[error("cyclic fluent dependency: {0}")]
    CyclicFluentDependency(String),
    #[error("rule for {head}: unknown fluent {fluent}")]
    UnknownFluent { head: String, fluent: String },
}

/// A validated, immutable set of activity rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    /// Derived fluent functors in dependency order (dependencies first).
    derived: Vec<String>,
}

impl RuleSet {
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn initiations(&self, functor: &str) -> impl Iterator<Item = &Rule> {
        self.rules_of(functor, RuleKind::Initiated)
    }

    pub fn terminations(&self, functor: &str) -> impl Iterator<Item = &Rule> {
        self.rules_of(functor, RuleKind::Terminated)
    }

    fn rules_of<'a>(&'a self, functor: &str, kind: RuleKind) -> impl Iterator<Item = &'a Rule> {
        let functor = functor.to_string();
        self.rules
            .iter()
            .filter(move |r| r.kind == kind && r.head.functor == functor)
    }

    /// Derived fluent functors, dependencies before dependents
    /// (`person` before the activities that consult it).
    pub fn derived_order(&self) -> &[String] {
        &self.derived
    }

    pub fn is_derived(&self, functor: &str) -> bool {
        self.derived.iter().any(|d| d == functor)
    }

    /// Canonical text form; `parse_rules(pretty_print(rs))` equals `rs`.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let head_kw = match r.kind {
                RuleKind::Initiated => "initiatedAt",
                RuleKind::Terminated => "terminatedAt",
            };
            out.push_str(&format!(
                "{head_kw}({}, {}) :-\n",
                fluent_pattern_text(&r.head),
                r.time_var
            ));
            for (i, lit) in r.body.iter().enumerate() {
                let sep = if i + 1 == r.body.len() { ".\n" } else { ",\n" };
                out.push_str("    ");
                out.push_str(&literal_text(lit, &r.time_var));
                out.push_str(sep);
            }
        }
        out
    }
}

fn term_list_text(functor: &str, args: &[Term]) -> String {
    if args.is_empty() {
        functor.to_string()
    } else {
        let args: Vec<String> = args.iter().map(Term::to_string).collect();
        format!("{functor}({})", args.join(","))
    }
}

fn fluent_pattern_text(fp: &FluentPattern) -> String {
    format!("{}={}", term_list_text(&fp.functor, &fp.args), fp.value)
}

fn literal_text(lit: &Literal, tv: &str) -> String {
    match lit {
        Literal::HappensAt(e) => format!("happensAt({}, {tv})", term_list_text(&e.functor, &e.args)),
        Literal::HoldsAt(fp) => format!("holdsAt({}, {tv})", fluent_pattern_text(fp)),
        Literal::NegFact(e) => {
            format!("not happensAt({}, {tv})", term_list_text(&e.functor, &e.args))
        }
        Literal::NegGoal(fp) => format!("not holdsAt({}, {tv})", fluent_pattern_text(fp)),
        Literal::Compare(a, op, b) => format!("{a} {op} {b}"),
    }
}

/// The bundled CAVIAR activity definitions: person, leaving_object,
/// meeting, moving, fighting.
pub fn builtin_activity_rules() -> RuleSet {
    parse_rules(include_str!("../rules/caviar.rules"))
        .expect("bundled activity rules must parse")
}

pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut p = RuleParser::new(text);
    let mut rules = Vec::new();
    loop {
        p.skip_trivia();
        if p.at_end() {
            break;
        }
        rules.push(p.rule()?);
    }
    validate(rules)
}

fn validate(rules: Vec<Rule>) -> Result<RuleSet, RuleError> {
    let derived_set: HashSet<&str> =
        rules.iter().map(|r| r.head.functor.as_str()).collect();

    for r in &rules {
        // Range restriction: head variables of an initiation rule must be
        // generated somewhere. Termination heads are already ground when
        // evaluated, so their rules may leave head variables unused
        // (e.g. terminating on the disappearance of one participant).
        if r.kind == RuleKind::Initiated {
            let bound = positive_vars(&r.body);
            for arg in &r.head.args {
                if let Term::Var(v) = arg {
                    if !bound.contains(v.as_str()) {
                        return Err(RuleError::UnboundHeadVariable {
                            head: r.head.functor.clone(),
                            var: v.clone(),
                        });
                    }
                }
            }
        }
        for lit in &r.body {
            if let Literal::HoldsAt(fp) | Literal::NegGoal(fp) = lit {
                let f = fp.functor.as_str();
                if !derived_set.contains(f)
                    && !BUILTIN_FLUENTS.contains(&f)
                    && !INPUT_FLUENTS.contains(&f)
                {
                    return Err(RuleError::UnknownFluent {
                        head: r.head.functor.clone(),
                        fluent: fp.functor.clone(),
                    });
                }
            }
        }
    }

    let derived = dependency_order(&rules, &derived_set)?;
    Ok(RuleSet { rules, derived })
}

fn positive_vars(body: &[Literal]) -> HashSet<&str> {
    let mut vars = HashSet::new();
    for lit in body {
        let args: &[Term] = match lit {
            Literal::HappensAt(e) => &e.args,
            Literal::HoldsAt(fp) => &fp.args,
            _ => continue,
        };
        for a in args {
            if let Term::Var(v) = a {
                vars.insert(v.as_str());
            }
        }
    }
    vars
}

/// Topological order of derived fluents by same-timepoint holdsAt use.
fn dependency_order(
    rules: &[Rule],
    derived: &HashSet<&str>,
) -> Result<Vec<String>, RuleError> {
    let mut deps: HashMap<&str, HashSet<&str>> = HashMap::new();
    for d in derived {
        deps.entry(d).or_default();
    }
    for r in rules {
        for lit in &r.body {
            if let Literal::HoldsAt(fp) | Literal::NegGoal(fp) = lit {
                if derived.contains(fp.functor.as_str()) {
                    deps.entry(r.head.functor.as_str())
                        .or_default()
                        .insert(fp.functor.as_str());
                }
            }
        }
    }
    let mut order = Vec::new();
    let mut done: HashSet<&str> = HashSet::new();
    let mut in_progress: HashSet<&str> = HashSet::new();
    // Deterministic iteration: follow first-head-appearance order.
    let mut roots: Vec<&str> = Vec::new();
    for r in rules {
        let f = r.head.functor.as_str();
        if !roots.contains(&f) {
            roots.push(f);
        }
    }
    fn visit<'a>(
        f: &'a str,
        deps: &HashMap<&'a str, HashSet<&'a str>>,
        done: &mut HashSet<&'a str>,
        in_progress: &mut HashSet<&'a str>,
        order: &mut Vec<String>,
    ) -> Result<(), RuleError> {
        if done.contains(f) {
            return Ok(());
        }
        if !in_progress.insert(f) {
            return Err(RuleError::CyclicFluentDependency(f.to_string()));
        }
        let mut ds: Vec<&str> = deps.get(f).map(|s| s.iter().copied().collect()).unwrap_or_default();
        ds.sort();
        for d in ds {
            visit(d, deps, done, in_progress, order)?;
        }
        in_progress.remove(f);
        done.insert(f);
        order.push(f.to_string());
        Ok(())
    }
    for f in roots {
        visit(f, &deps, &mut done, &mut in_progress, &mut order)?;
    }
    Ok(order)
}

struct RuleParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> RuleParser<'a> {
    fn new(src: &'a str) -> RuleParser<'a> {
        RuleParser { src: src.as_bytes(), pos: 0 }
    }

    fn line_col(&self) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.src[..self.pos] {
            if c == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn err<T>(&self, reason: impl Into<String>) -> Result<T, RuleError> {
        let (line, col) = self.line_col();
        Err(RuleError::Parse { line, col, reason: reason.into() })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'%') => {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_trivia();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), RuleError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected '{tok}'"))
        }
    }

    fn ident(&mut self) -> Result<String, RuleError> {
        self.skip_trivia();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected identifier");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn int(&mut self) -> Result<i64, RuleError> {
        self.skip_trivia();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| self.err("expected integer"))
    }

    fn rule(&mut self) -> Result<Rule, RuleError> {
        let kw = self.ident()?;
        let kind = match kw.as_str() {
            "initiatedAt" => RuleKind::Initiated,
            "terminatedAt" => RuleKind::Terminated,
            other => return self.err(format!("expected rule head, got '{other}'")),
        };
        self.expect("(")?;
        let head = self.fluent_pattern()?;
        self.expect(",")?;
        let time_var = self.variable()?;
        self.expect(")")?;
        self.expect(":-")?;
        let mut body = Vec::new();
        loop {
            body.push(self.literal(&head, &time_var)?);
            if self.eat(".") {
                break;
            }
            self.expect(",")?;
        }
        Ok(Rule { kind, head, time_var, body })
    }

    fn variable(&mut self) -> Result<String, RuleError> {
        let id = self.ident()?;
        if id.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            Ok(id)
        } else {
            self.err(format!("expected variable, got '{id}'"))
        }
    }

    fn term(&mut self) -> Result<Term, RuleError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' => Ok(Term::Num(self.int()?)),
            _ => {
                let id = self.ident()?;
                if id.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    Ok(Term::Var(id))
                } else {
                    Ok(Term::Const(id))
                }
            }
        }
    }

    fn term_args(&mut self) -> Result<Vec<Term>, RuleError> {
        let mut args = Vec::new();
        if self.eat("(") {
            loop {
                args.push(self.term()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
        }
        Ok(args)
    }

    fn event_pattern(&mut self) -> Result<EventPattern, RuleError> {
        let functor = self.ident()?;
        if functor.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            return self.err("event functor must be lower-case");
        }
        let args = self.term_args()?;
        Ok(EventPattern { functor, args })
    }

    fn fluent_pattern(&mut self) -> Result<FluentPattern, RuleError> {
        let functor = self.ident()?;
        if functor.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            return self.err("fluent functor must be lower-case");
        }
        let args = self.term_args()?;
        self.expect("=")?;
        let value = self.value_pattern()?;
        Ok(FluentPattern { functor, args, value })
    }

    fn value_pattern(&mut self) -> Result<ValuePattern, RuleError> {
        self.skip_trivia();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' => Ok(ValuePattern::Int(self.int()?)),
            _ => {
                let id = self.ident()?;
                match id.as_str() {
                    "true" => Ok(ValuePattern::Bool(true)),
                    "false" => Ok(ValuePattern::Bool(false)),
                    _ if id.chars().next().is_some_and(|c| c.is_ascii_uppercase()) => {
                        Ok(ValuePattern::Var(id))
                    }
                    other => self.err(format!("expected value, got '{other}'")),
                }
            }
        }
    }

    fn check_time_var(
        &self,
        head: &FluentPattern,
        expected: &str,
        found: String,
    ) -> Result<(), RuleError> {
        if found == expected {
            Ok(())
        } else {
            Err(RuleError::TimeVariableMismatch {
                head: head.functor.clone(),
                expected: expected.to_string(),
                found,
            })
        }
    }

    fn literal(&mut self, head: &FluentPattern, tv: &str) -> Result<Literal, RuleError> {
        self.skip_trivia();
        // Comparison literals start with abs(, a digit, or a variable
        // followed by a comparison operator; everything else is temporal.
        let save = self.pos;
        if self.eat("not") {
            let kw = self.ident()?;
            return match kw.as_str() {
                "happensAt" => {
                    self.expect("(")?;
                    let e = self.event_pattern()?;
                    self.expect(",")?;
                    let t = self.variable()?;
                    self.expect(")")?;
                    self.check_time_var(head, tv, t)?;
                    Ok(Literal::NegFact(e))
                }
                "holdsAt" => {
                    self.expect("(")?;
                    let fp = self.fluent_pattern()?;
                    self.expect(",")?;
                    let t = self.variable()?;
                    self.expect(")")?;
                    self.check_time_var(head, tv, t)?;
                    Ok(Literal::NegGoal(fp))
                }
                other => self.err(format!("expected happensAt or holdsAt after not, got '{other}'")),
            };
        }
        self.pos = save;
        self.skip_trivia();
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'-')
            || self.starts_with_kw("abs")
        {
            return self.compare();
        }
        let kw = self.ident()?;
        match kw.as_str() {
            "happensAt" => {
                self.expect("(")?;
                let e = self.event_pattern()?;
                self.expect(",")?;
                let t = self.variable()?;
                self.expect(")")?;
                self.check_time_var(head, tv, t)?;
                Ok(Literal::HappensAt(e))
            }
            "holdsAt" => {
                self.expect("(")?;
                let fp = self.fluent_pattern()?;
                self.expect(",")?;
                let t = self.variable()?;
                self.expect(")")?;
                self.check_time_var(head, tv, t)?;
                Ok(Literal::HoldsAt(fp))
            }
            id if id.chars().next().is_some_and(|c| c.is_ascii_uppercase()) => {
                // Variable on the left of a comparison.
                self.pos = save;
                self.compare()
            }
            other => self.err(format!("expected body literal, got '{other}'")),
        }
    }

    fn starts_with_kw(&self, kw: &str) -> bool {
        let rest = &self.src[self.pos..];
        rest.starts_with(kw.as_bytes())
            && !matches!(rest.get(kw.len()), Some(c) if c.is_ascii_alphanumeric() || *c == b'_')
    }

    fn compare(&mut self) -> Result<Literal, RuleError> {
        let lhs = self.expr()?;
        let op = self.cmp_op()?;
        let rhs = self.expr()?;
        Ok(Literal::Compare(lhs, op, rhs))
    }

    fn expr(&mut self) -> Result<Expr, RuleError> {
        self.skip_trivia();
        if self.starts_with_kw("abs") {
            self.expect("abs")?;
            self.expect("(")?;
            let a = self.expr()?;
            self.expect("-")?;
            let b = self.expr()?;
            self.expect(")")?;
            return Ok(Expr::AbsDiff(Box::new(a), Box::new(b)));
        }
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(Expr::Num(self.int()?)),
            _ => Ok(Expr::Var(self.variable()?)),
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp, RuleError> {
        for (tok, op) in [
            ("=<", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("\\=", CmpOp::Ne),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
            ("=", CmpOp::Eq),
        ] {
            if self.eat(tok) {
                return Ok(op);
            }
        }
        self.err("expected comparison operator")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caviar_rules_parse() {
        let rs = builtin_activity_rules();
        let mut derived: Vec<&str> = rs.derived_order().iter().map(String::as_str).collect();
        derived.sort();
        assert_eq!(derived, ["fighting", "leaving_object", "meeting", "moving", "person"]);
    }

    #[test]
    fn person_precedes_dependents() {
        let rs = builtin_activity_rules();
        let order = rs.derived_order();
        let pos = |f: &str| order.iter().position(|x| x == f).unwrap();
        assert!(pos("person") < pos("leaving_object"));
        assert!(pos("person") < pos("meeting"));
    }

    #[test]
    fn meeting_has_two_initiations() {
        let rs = builtin_activity_rules();
        assert_eq!(rs.initiations("meeting").count(), 2);
        assert_eq!(rs.initiations("person").count(), 4);
        assert_eq!(rs.initiations("moving").count(), 1);
    }

    fn close_threshold(rule: &Rule) -> Option<i64> {
        rule.body.iter().find_map(|lit| match lit {
            Literal::HoldsAt(fp) if fp.functor == "close" => match fp.args.last() {
                Some(Term::Num(n)) => Some(*n),
                _ => None,
            },
            _ => None,
        })
    }

    #[test]
    fn distance_thresholds() {
        let rs = builtin_activity_rules();
        let lo = rs.initiations("leaving_object").next().unwrap();
        assert_eq!(close_threshold(lo), Some(30));
        let fight = rs.initiations("fighting").next().unwrap();
        assert_eq!(close_threshold(fight), Some(44));
        for r in rs.initiations("meeting") {
            assert_eq!(close_threshold(r), Some(25));
        }
        assert_eq!(close_threshold(rs.initiations("moving").next().unwrap()), Some(34));
    }

    #[test]
    fn moving_initiation_shape() {
        let rs = builtin_activity_rules();
        let r = rs.initiations("moving").next().unwrap();
        let count = |pred: fn(&Literal) -> bool| r.body.iter().filter(|l| pred(l)).count();
        assert_eq!(count(|l| matches!(l, Literal::HappensAt(_))), 2);
        assert_eq!(count(|l| matches!(l, Literal::HoldsAt(_))), 3);
        assert_eq!(count(|l| matches!(l, Literal::Compare(..))), 1);
        let cmp = r.body.iter().find(|l| matches!(l, Literal::Compare(..))).unwrap();
        assert_eq!(
            *cmp,
            Literal::Compare(
                Expr::AbsDiff(
                    Box::new(Expr::Var("Or1".into())),
                    Box::new(Expr::Var("Or2".into()))
                ),
                CmpOp::Lt,
                Expr::Num(45)
            )
        );
    }

    #[test]
    fn negation_kinds() {
        let rs = builtin_activity_rules();
        let fight = rs.initiations("fighting").next().unwrap();
        assert!(fight.body.iter().any(
            |l| matches!(l, Literal::NegFact(e) if e.functor == "inactive")
        ));
        let src = "initiatedAt(b(P)=true, T) :- happensAt(e(P), T).\n\
                   initiatedAt(a(P)=true, T) :- happensAt(e(P), T), not holdsAt(b(P)=true, T).";
        let rs = parse_rules(src).unwrap();
        assert!(rs.rules()[1]
            .body
            .iter()
            .any(|l| matches!(l, Literal::NegGoal(_))));
    }

    #[test]
    fn unbound_head_variable_rejected() {
        let src = "initiatedAt(a(P,Q)=true, T) :- happensAt(e(P), T).";
        let err = parse_rules(src).unwrap_err();
        assert_eq!(
            err,
            RuleError::UnboundHeadVariable { head: "a".into(), var: "Q".into() }
        );
    }

    #[test]
    fn termination_may_drop_head_variables() {
        let src = "initiatedAt(a(P,Q)=true, T) :- happensAt(e(P), T), happensAt(e(Q), T).\n\
                   terminatedAt(a(P,Q)=true, T) :- happensAt(gone(P), T).";
        assert!(parse_rules(src).is_ok());
    }

    #[test]
    fn cyclic_dependency_rejected() {
        let src = "initiatedAt(a(P)=true, T) :- happensAt(e(P), T), holdsAt(b(P)=true, T).\n\
                   initiatedAt(b(P)=true, T) :- happensAt(e(P), T), holdsAt(a(P)=true, T).";
        let err = parse_rules(src).unwrap_err();
        assert!(matches!(err, RuleError::CyclicFluentDependency(_)));
    }

    #[test]
    fn unknown_fluent_rejected() {
        let src = "initiatedAt(a(P)=true, T) :- happensAt(e(P), T), holdsAt(mystery(P)=true, T).";
        let err = parse_rules(src).unwrap_err();
        assert_eq!(
            err,
            RuleError::UnknownFluent { head: "a".into(), fluent: "mystery".into() }
        );
    }

    #[test]
    fn mismatched_time_variable_rejected() {
        let src = "initiatedAt(a(P)=true, T) :- happensAt(e(P), T2).";
        let err = parse_rules(src).unwrap_err();
        assert!(matches!(err, RuleError::TimeVariableMismatch { .. }));
    }

    #[test]
    fn pretty_print_round_trips() {
        let rs = builtin_activity_rules();
        let printed = rs.pretty_print();
        let reparsed = parse_rules(&printed).unwrap();
        assert_eq!(rs, reparsed);
    }

    #[test]
    fn parse_error_has_position() {
        let err = parse_rules("initiatedAt(a(P)=true, T) :- happensAt(e(P) T).").unwrap_err();
        match err {
            RuleError::Parse { line: 1, col, .. } => assert!(col > 40),
            other => panic!("unexpected: {other}"),
        }
    }
}
