//! Domain vocabulary shared by every other module: timepoints, entities,
//! events, fluents, probabilistic facts and indexed narratives.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Short-term activity functors that arrive as detection events.
pub const STA_FUNCTORS: [&str; 5] = ["walking", "running", "active", "inactive", "abrupt"];

/// A video frame number. Time is linear and discrete; the successor of a
/// timepoint is the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timepoint(pub u64);

impl Timepoint {
    pub fn succ(self) -> Timepoint {
        Timepoint(self.0 + 1)
    }
}

impl fmt::Display for Timepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An opaque tracked-entity identifier (`id1`, `mike`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entity(pub String);

impl Entity {
    pub fn new(id: impl Into<String>) -> Entity {
        Entity(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An instantaneous event term, e.g. `walking(mike)` or `appear(id10)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventAtom {
    pub functor: String,
    pub args: Vec<Entity>,
}

impl EventAtom {
    pub fn new(functor: impl Into<String>, args: Vec<Entity>) -> EventAtom {
        EventAtom { functor: functor.into(), args }
    }

    pub fn is_sta(&self) -> bool {
        STA_FUNCTORS.contains(&self.functor.as_str())
    }
}

impl fmt::Display for EventAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.functor, self.args.iter().map(|a| a.to_string()))
    }
}

/// Argument of a fluent term: an entity or a numeric constant
/// (e.g. the threshold in `close(P1,P2,30)`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arg {
    Entity(Entity),
    Num(i64),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Entity(e) => e.fmt(f),
            Arg::Num(n) => n.fmt(f),
        }
    }
}

/// The value side of the `F=V` notation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    /// Pixel coordinates; only produced by the `coord` fluent.
    Coord(i64, i64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Coord(x, y) => write!(f, "({x},{y})"),
        }
    }
}

/// A ground fluent term paired with exactly one value, e.g.
/// `moving(mike,sarah)=true` or `coord(id2)=(14,55)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FluentAtom {
    pub functor: String,
    pub args: Vec<Arg>,
    pub value: Value,
}

impl FluentAtom {
    pub fn new(functor: impl Into<String>, args: Vec<Arg>, value: Value) -> FluentAtom {
        FluentAtom { functor: functor.into(), args, value }
    }

    /// `fluent(args)=value` with the value stripped of the `=` part,
    /// used as a grouping key.
    pub fn term_key(&self) -> (String, Vec<Arg>) {
        (self.functor.clone(), self.args.clone())
    }

    pub fn entity_args(&self) -> impl Iterator<Item = &Entity> {
        self.args.iter().filter_map(|a| match a {
            Arg::Entity(e) => Some(e),
            Arg::Num(_) => None,
        })
    }

    /// `functor` and colon-joined args, e.g. `("moving", "mike:sarah")`,
    /// the shape used in CSV output.
    pub fn csv_fields(&self) -> (String, String) {
        let args = self
            .args
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(":");
        (self.functor.clone(), args)
    }
}

impl fmt::Display for FluentAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.functor, self.args.iter().map(|a| a.to_string()))?;
        write!(f, "={}", self.value)
    }
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    functor: &str,
    args: impl Iterator<Item = String>,
) -> fmt::Result {
    f.write_str(functor)?;
    let args: Vec<String> = args.collect();
    if !args.is_empty() {
        write!(f, "({})", args.join(","))?;
    }
    Ok(())
}

/// The probability-free part of a fact; two facts with equal bodies denote
/// the same random variable and are rejected as duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactBody {
    Happens { event: EventAtom, at: Timepoint },
    Holds { fluent: FluentAtom, at: Timepoint },
    Initially { fluent: FluentAtom },
}

impl FactBody {
    pub fn timepoint(&self) -> Timepoint {
        match self {
            FactBody::Happens { at, .. } | FactBody::Holds { at, .. } => *at,
            FactBody::Initially { .. } => Timepoint(0),
        }
    }

    pub fn functor(&self) -> &str {
        match self {
            FactBody::Happens { event, .. } => &event.functor,
            FactBody::Holds { fluent, .. } | FactBody::Initially { fluent } => &fluent.functor,
        }
    }

    pub fn entities(&self) -> Vec<&Entity> {
        match self {
            FactBody::Happens { event, .. } => event.args.iter().collect(),
            FactBody::Holds { fluent, .. } | FactBody::Initially { fluent } => {
                fluent.entity_args().collect()
            }
        }
    }
}

impl fmt::Display for FactBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactBody::Happens { event, at } => write!(f, "happensAt({event},{at})"),
            FactBody::Holds { fluent, at } => write!(f, "holdsAt({fluent},{at})"),
            FactBody::Initially { fluent } => write!(f, "initially({fluent})"),
        }
    }
}

/// A ground fact with a probability. Probability 1 encodes a crisp fact.
/// Each fact is an independent random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbFact {
    pub body: FactBody,
    pub prob: f64,
}

impl ProbFact {
    pub fn new(body: FactBody, prob: f64) -> ProbFact {
        ProbFact { body, prob }
    }

    pub fn crisp(body: FactBody) -> ProbFact {
        ProbFact { body, prob: 1.0 }
    }

    pub fn is_crisp(&self) -> bool {
        self.prob == 1.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NarrativeError {
    #[error("duplicate fact body: {0}")]
    DuplicateFact(String),
    #[error("invalid probability {prob} for fact {body}")]
    InvalidProbability { body: String, prob: f64 },
}

/// The temporally sorted fact multiset of one trace, indexed by timepoint
/// and by (timepoint, functor). Immutable after indexing.
#[derive(Debug, Clone)]
pub struct Narrative {
    facts: Vec<ProbFact>,
    horizon: Timepoint,
    by_time_functor: HashMap<(u64, String), Vec<usize>>,
    /// Entities in order of first mention, with the frame they first appear in.
    entities: Vec<(Entity, Timepoint)>,
}

impl Narrative {
    pub fn facts(&self) -> &[ProbFact] {
        &self.facts
    }

    pub fn fact(&self, idx: usize) -> &ProbFact {
        &self.facts[idx]
    }

    pub fn horizon(&self) -> Timepoint {
        self.horizon
    }

    pub fn is_crisp(&self) -> bool {
        self.facts.iter().all(|f| f.is_crisp())
    }

    /// Indices of facts at `t` whose head functor is `functor`.
    pub fn at(&self, t: Timepoint, functor: &str) -> &[usize] {
        self.by_time_functor
            .get(&(t.0, functor.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Event facts at `t` matching functor.
    pub fn events_at(&self, t: Timepoint, functor: &str) -> impl Iterator<Item = (usize, &EventAtom, f64)> {
        self.at(t, functor).iter().filter_map(move |&i| match &self.facts[i].body {
            FactBody::Happens { event, .. } => Some((i, event, self.facts[i].prob)),
            _ => None,
        })
    }

    /// Input-fluent observation facts at `t` matching functor.
    pub fn fluents_at(&self, t: Timepoint, functor: &str) -> impl Iterator<Item = (usize, &FluentAtom, f64)> {
        self.at(t, functor).iter().filter_map(move |&i| match &self.facts[i].body {
            FactBody::Holds { fluent, .. } => Some((i, fluent, self.facts[i].prob)),
            _ => None,
        })
    }

    pub fn initially_facts(&self) -> impl Iterator<Item = (usize, &FluentAtom, f64)> {
        self.facts.iter().enumerate().filter_map(|(i, f)| match &f.body {
            FactBody::Initially { fluent } => Some((i, fluent, f.prob)),
            _ => None,
        })
    }

    /// Entities first mentioned at or before `t`, in first-mention order.
    pub fn entities_at(&self, t: Timepoint) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(move |(_, first)| *first <= t).map(|(e, _)| e)
    }

    pub fn entities(&self) -> impl Iterator<Item = &(Entity, Timepoint)> {
        self.entities.iter()
    }
}

/// Sort, index and validate a sequence of facts. Orientation values are
/// normalized into `[0,360)` here so every consumer sees a canonical range.
pub fn index_narrative(facts: impl IntoIterator<Item = ProbFact>) -> Result<Narrative, NarrativeError> {
    let mut facts: Vec<ProbFact> = facts
        .into_iter()
        .map(|mut f| {
            normalize_orientation(&mut f);
            f
        })
        .collect();
    for f in &facts {
        if !(0.0..=1.0).contains(&f.prob) || f.prob.is_nan() {
            return Err(NarrativeError::InvalidProbability {
                body: f.body.to_string(),
                prob: f.prob,
            });
        }
    }
    // Stable sort keeps same-frame facts in input order, which fixes the
    // default BDD variable order.
    facts.sort_by_key(|f| f.body.timepoint());

    let mut seen: HashSet<&FactBody> = HashSet::new();
    for f in &facts {
        if !seen.insert(&f.body) {
            return Err(NarrativeError::DuplicateFact(f.body.to_string()));
        }
    }

    let horizon = facts.iter().map(|f| f.body.timepoint()).max().unwrap_or(Timepoint(0));
    let mut by_time_functor: HashMap<(u64, String), Vec<usize>> = HashMap::new();
    let mut entities: Vec<(Entity, Timepoint)> = Vec::new();
    let mut entity_seen: HashSet<Entity> = HashSet::new();
    for (i, f) in facts.iter().enumerate() {
        let t = f.body.timepoint();
        by_time_functor
            .entry((t.0, f.body.functor().to_string()))
            .or_default()
            .push(i);
        for e in f.body.entities() {
            if entity_seen.insert(e.clone()) {
                entities.push((e.clone(), t));
            }
        }
    }

    Ok(Narrative { facts, horizon, by_time_functor, entities })
}

fn normalize_orientation(f: &mut ProbFact) {
    if let FactBody::Holds { fluent, .. } | FactBody::Initially { fluent } = &mut f.body {
        if fluent.functor == "orientation" {
            if let Value::Int(v) = fluent.value {
                fluent.value = Value::Int(v.rem_euclid(360));
            }
        }
    }
}
