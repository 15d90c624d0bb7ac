//! Probabilistic Event Calculus: per-frame recurrence
//! P_{t+1} = P(A_t) + P(¬A_t ∧ ¬C_t)·P_t with initiation and break
//! formulas compiled to BDDs, plus a whole-query exact BDD mode used for
//! cross-validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::bdd::{BddManager, Formula};
use crate::grounding::{EngineAtom, Grounder};
use crate::model::{EventAtom, FluentAtom, Narrative, Timepoint};
use crate::rule_dsl::RuleSet;

/// Probability per frame for one fluent atom, frames `0..=horizon`.
pub type RecognitionTrace = Vec<f64>;

/// Negation of an input fact: 1 when the event is not detected at `t`,
/// otherwise the complement of its detection probability (0 for a crisp
/// detection).
pub fn negate1(event: &EventAtom, t: Timepoint, n: &Narrative) -> f64 {
    n.events_at(t, &event.functor)
        .filter(|(_, ev, _)| *ev == event)
        .map(|(_, _, p)| 1.0 - p)
        .product()
}

/// Negation of a derived goal: 1 when the goal is unprovable (p = 0),
/// otherwise the complement.
pub fn negate2(p: f64) -> f64 {
    1.0 - p
}

/// One frame of the recurrence. Both formulas range over frame-`t`
/// variables; one BDD manager serves both so shared variables stay
/// correlated.
pub fn step(
    prev: f64,
    init: &Formula<EngineAtom>,
    brk: &Formula<EngineAtom>,
    prob: &impl Fn(&EngineAtom) -> f64,
) -> f64 {
    if *init == Formula::False && *brk == Formula::False {
        return prev;
    }
    let mut order = init.vars();
    for v in brk.vars() {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let mut mgr = BddManager::new(order);
    let a = mgr.compile(init).expect("vars collected from formula");
    let survive = Formula::and(vec![
        Formula::not(init.clone()),
        Formula::not(brk.clone()),
    ]);
    let s = mgr.compile(&survive).expect("vars collected from formula");
    mgr.probability(a, prob) + mgr.probability(s, prob) * prev
}

fn fact_prob(n: &Narrative, atom: &EngineAtom, holds: &HashMap<FluentAtom, f64>) -> f64 {
    match atom {
        EngineAtom::Fact(i) => n.fact(*i).prob,
        EngineAtom::Holds(f) => holds.get(f).copied().unwrap_or(0.0),
    }
}

/// Forward scan over `[0, horizon]` for every derived fluent atom
/// instantiable from the narrative's entities.
pub fn recognize(rules: &RuleSet, n: &Narrative) -> BTreeMap<FluentAtom, RecognitionTrace> {
    let g = Grounder::new(rules, n);
    let targets = g.targets();
    let mut cur: HashMap<FluentAtom, f64> = targets.iter().map(|f| (f.clone(), 0.0)).collect();
    for (_, fl, p) in n.initially_facts() {
        if cur.contains_key(fl) {
            cur.insert(fl.clone(), p);
        }
    }
    let mut traces: BTreeMap<FluentAtom, RecognitionTrace> = targets
        .iter()
        .map(|f| (f.clone(), Vec::with_capacity(n.horizon().0 as usize + 1)))
        .collect();
    for t in 0..=n.horizon().0 {
        let t = Timepoint(t);
        for f in &targets {
            traces.get_mut(f).unwrap().push(cur[f]);
        }
        // Holds variables refer to values at t, all derived from events
        // strictly before t, so the frame reads a frozen snapshot.
        let snapshot = cur.clone();
        let prob = |atom: &EngineAtom| fact_prob(n, atom, &snapshot);
        for f in &targets {
            let a = g.init_formula(f, t);
            let c = g.break_formula(f, t);
            let p = step(snapshot[f], &a, &c, &prob);
            cur.insert(f.clone(), p);
        }
    }
    traces
}

/// Exact whole-query probability of `holdsAt(f, t)`: unfolds the
/// recurrence into one formula over fact variables only (derived fluents
/// expanded recursively) and compiles a single BDD. Validates the
/// incremental engine; exact regardless of shared variables.
pub fn recognize_exact_bdd(rules: &RuleSet, n: &Narrative, f: &FluentAtom, t: Timepoint) -> f64 {
    let formula = exact_holds_formula(rules, n, f, t);
    let order: Vec<usize> = (0..n.facts().len()).collect();
    let mut mgr = BddManager::new(order);
    let root = mgr.compile(&formula).expect("fact indices are in order");
    mgr.probability(root, &|i| n.fact(*i).prob)
}

/// The unfolded query formula itself, over fact-index variables. Exposed
/// so alternative model counters can be run on the identical formula.
pub fn exact_holds_formula(
    rules: &RuleSet,
    n: &Narrative,
    f: &FluentAtom,
    t: Timepoint,
) -> Formula<usize> {
    let g = Grounder::new(rules, n);
    let mut memo: HashMap<(FluentAtom, u64), Formula<usize>> = HashMap::new();
    holds_formula(&g, n, f, t.0, &mut memo)
}

/// Whole-query exact engine with a shared expansion memo, for running
/// many (fluent, frame) queries against one narrative cheaply.
pub struct ExactEngine<'a> {
    g: Grounder<'a>,
    n: &'a Narrative,
    memo: HashMap<(FluentAtom, u64), Formula<usize>>,
}

impl<'a> ExactEngine<'a> {
    pub fn new(rules: &'a RuleSet, n: &'a Narrative) -> ExactEngine<'a> {
        ExactEngine { g: Grounder::new(rules, n), n, memo: HashMap::new() }
    }

    pub fn formula(&mut self, f: &FluentAtom, t: Timepoint) -> Formula<usize> {
        holds_formula(&self.g, self.n, f, t.0, &mut self.memo)
    }

    pub fn probability(&mut self, f: &FluentAtom, t: Timepoint) -> f64 {
        let formula = self.formula(f, t);
        let order: Vec<usize> = (0..self.n.facts().len()).collect();
        let mut mgr = BddManager::new(order);
        let root = mgr.compile(&formula).expect("fact indices are in order");
        mgr.probability(root, &|i| self.n.fact(*i).prob)
    }
}

fn holds_formula(
    g: &Grounder,
    n: &Narrative,
    f: &FluentAtom,
    t: u64,
    memo: &mut HashMap<(FluentAtom, u64), Formula<usize>>,
) -> Formula<usize> {
    if let Some(cached) = memo.get(&(f.clone(), t)) {
        return cached.clone();
    }
    let result = if t == 0 {
        n.initially_facts()
            .find(|(_, fl, _)| *fl == f)
            .map(|(i, _, p)| if p == 1.0 { Formula::True } else { Formula::var(i) })
            .unwrap_or(Formula::False)
    } else {
        let u = Timepoint(t - 1);
        let a = expand_atoms(g, n, &g.init_formula(f, u), t - 1, memo);
        let c = expand_atoms(g, n, &g.break_formula(f, u), t - 1, memo);
        let prev = holds_formula(g, n, f, t - 1, memo);
        Formula::or(vec![
            a,
            Formula::and(vec![Formula::not(c), prev]),
        ])
    };
    memo.insert((f.clone(), t), result.clone());
    result
}

fn expand_atoms(
    g: &Grounder,
    n: &Narrative,
    f: &Formula<EngineAtom>,
    t: u64,
    memo: &mut HashMap<(FluentAtom, u64), Formula<usize>>,
) -> Formula<usize> {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Var(EngineAtom::Fact(i)) => Formula::var(*i),
        Formula::Var(EngineAtom::Holds(fl)) => holds_formula(g, n, fl, t, memo),
        Formula::Not(inner) => Formula::not(expand_atoms(g, n, inner, t, memo)),
        Formula::And(fs) => {
            Formula::and(fs.iter().map(|x| expand_atoms(g, n, x, t, memo)).collect())
        }
        Formula::Or(fs) => {
            Formula::or(fs.iter().map(|x| expand_atoms(g, n, x, t, memo)).collect())
        }
    }
}

/// Substitute facts with probability 1 or 0 by constants, leaving only
/// genuinely probabilistic variables; useful before enumeration, whose
/// cost is exponential in the variable count.
pub fn substitute_crisp_facts(f: &Formula<usize>, n: &Narrative) -> Formula<usize> {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Var(i) => {
            let p = n.fact(*i).prob;
            if p == 1.0 {
                Formula::True
            } else if p == 0.0 {
                Formula::False
            } else {
                Formula::var(*i)
            }
        }
        Formula::Not(g) => Formula::not(substitute_crisp_facts(g, n)),
        Formula::And(gs) => {
            Formula::and(gs.iter().map(|g| substitute_crisp_facts(g, n)).collect())
        }
        Formula::Or(gs) => Formula::or(gs.iter().map(|g| substitute_crisp_facts(g, n)).collect()),
    }
}

/// Frames whose probability is strictly above the threshold.
pub fn filter_recognitions(trace: &[f64], threshold: f64) -> BTreeSet<Timepoint> {
    trace
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > threshold)
        .map(|(t, _)| Timepoint(t as u64))
        .collect()
}

/// CSV with header `fluent,args,frame,probability`.
pub fn trace_csv(traces: &BTreeMap<FluentAtom, RecognitionTrace>) -> String {
    let mut out = String::from("fluent,args,frame,probability\n");
    for (f, trace) in traces {
        let (functor, args) = f.csv_fields();
        for (t, p) in trace.iter().enumerate() {
            let _ = writeln!(out, "{functor},{args},{t},{p:.6}");
        }
    }
    out
}

/// CSV with header `fluent,args,frame`.
pub fn recognitions_csv(recognized: &BTreeMap<FluentAtom, BTreeSet<Timepoint>>) -> String {
    let mut out = String::from("fluent,args,frame\n");
    for (f, frames) in recognized {
        let (functor, args) = f.csv_fields();
        for t in frames {
            let _ = writeln!(out, "{functor},{args},{t}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crisp::crisp_recognize;
    use crate::fact_io::parse_facts;
    use crate::model::{index_narrative, Arg, Entity, Value};
    use crate::rule_dsl::{builtin_activity_rules, parse_rules};
    use crate::world_enumeration;

    fn narrative(text: &str) -> Narrative {
        index_narrative(parse_facts(text).unwrap()).unwrap()
    }

    fn ev(functor: &str, e: &str) -> EventAtom {
        EventAtom::new(functor, vec![Entity::new(e)])
    }

    #[test]
    fn negate1_cases() {
        let n = narrative(
            "0.18::happensAt(inactive(mike),41).\n\
             happensAt(walking(sue),41).",
        );
        assert_eq!(negate1(&ev("inactive", "p2"), Timepoint(41), &n), 1.0);
        assert!((negate1(&ev("inactive", "mike"), Timepoint(41), &n) - 0.82).abs() < 1e-12);
        assert_eq!(negate1(&ev("walking", "sue"), Timepoint(41), &n), 0.0);
    }

    #[test]
    fn negate2_cases() {
        assert_eq!(negate2(0.0), 1.0);
        assert_eq!(negate2(1.0), 0.0);
        assert!((negate2(0.32) - 0.68).abs() < 1e-12);
    }

    #[test]
    fn step_examples() {
        type F = Formula<EngineAtom>;
        let fa = |i: usize| F::var(EngineAtom::Fact(i));
        let probs = [0.70, 0.46, 0.69, 0.58, 0.32];
        let prob = |a: &EngineAtom| match a {
            EngineAtom::Fact(i) => probs[*i],
            EngineAtom::Holds(_) => 0.0,
        };

        let a01 = Formula::and(vec![fa(0), fa(1)]);
        let p2 = step(0.0, &a01, &Formula::False, &prob);
        assert!((p2 - 0.322).abs() < 1e-12);

        let a23 = Formula::and(vec![fa(2), fa(3)]);
        let p22 = step(p2, &a23, &Formula::False, &prob);
        let expected = 0.70 * 0.46 + 0.69 * 0.58 - 0.70 * 0.46 * 0.69 * 0.58;
        assert!((p22 - expected).abs() < 1e-12);
        assert!((p22 - 0.593).abs() < 5e-4);

        let p42 = step(0.8, &Formula::False, &fa(4), &prob);
        assert!((p42 - 0.544).abs() < 1e-12);
    }

    #[test]
    fn inertia_is_exact() {
        let prob = |_: &EngineAtom| 0.5;
        assert_eq!(step(0.37, &Formula::False, &Formula::False, &prob), 0.37);
    }

    fn simple_rules() -> RuleSet {
        parse_rules(
            "initiatedAt(a(P)=true, T) :- happensAt(start(P), T).\n\
             terminatedAt(a(P)=true, T) :- happensAt(stop(P), T).",
        )
        .unwrap()
    }

    fn atom_a(e: &str) -> FluentAtom {
        FluentAtom::new("a", vec![Arg::Entity(Entity::new(e))], Value::Bool(true))
    }

    #[test]
    fn single_initiation_persistence() {
        let n = narrative(
            "0.6::happensAt(start(x),3).\n\
             0.6::happensAt(stop(x),8).\n\
             happensAt(start(pad),12).",
        );
        let traces = recognize(&simple_rules(), &n);
        let tr = &traces[&atom_a("x")];
        for t in 0..=3 {
            assert_eq!(tr[t], 0.0);
        }
        for t in 4..=8 {
            assert!((tr[t] - 0.6).abs() < 1e-12, "frame {t}: {}", tr[t]);
        }
        for t in 9..=12 {
            assert!((tr[t] - 0.24).abs() < 1e-12, "frame {t}: {}", tr[t]);
        }
    }

    #[test]
    fn crisp_narrative_yields_crisp_trace() {
        let n = narrative(
            "happensAt(start(x),2).\nhappensAt(stop(x),6).\nhappensAt(start(x),9).\n\
             happensAt(start(pad),14).",
        );
        let rules = simple_rules();
        let traces = recognize(&rules, &n);
        let crisp = crisp_recognize(&rules, &n);
        for (f, tr) in &traces {
            for (t, p) in tr.iter().enumerate() {
                assert!(*p == 0.0 || *p == 1.0);
                assert_eq!(*p == 1.0, crisp[f].contains(&Timepoint(t as u64)));
            }
        }
    }

    #[test]
    fn incremental_matches_exact_and_enumeration() {
        let n = narrative(
            "0.7::happensAt(start(x),1).\n\
             0.4::happensAt(start(x),2).\n\
             0.5::happensAt(stop(x),3).\n\
             0.9::happensAt(start(x),4).\n\
             0.2::happensAt(stop(x),4).\n\
             happensAt(start(pad),6).",
        );
        let rules = simple_rules();
        let traces = recognize(&rules, &n);
        let f = atom_a("x");
        let g = Grounder::new(&rules, &n);
        for t in 0..=6u64 {
            let exact = recognize_exact_bdd(&rules, &n, &f, Timepoint(t));
            let inc = traces[&f][t as usize];
            assert!((inc - exact).abs() < 1e-12, "frame {t}: {inc} vs {exact}");
            let mut memo = HashMap::new();
            let formula = super::holds_formula(&g, &n, &f, t, &mut memo);
            let enumerated = world_enumeration(&formula, |i| n.fact(*i).prob).unwrap();
            assert!((inc - enumerated).abs() < 1e-12);
        }
    }

    #[test]
    fn initially_probability_seeds_trace() {
        let n = narrative(
            "0.3::initially(a(x)=true).\n\
             0.5::happensAt(stop(x),2).\n\
             happensAt(start(pad),4).",
        );
        let traces = recognize(&simple_rules(), &n);
        let tr = &traces[&atom_a("x")];
        assert!((tr[0] - 0.3).abs() < 1e-12);
        assert!((tr[2] - 0.3).abs() < 1e-12);
        assert!((tr[3] - 0.15).abs() < 1e-12);
        let exact = recognize_exact_bdd(&simple_rules(), &n, &atom_a("x"), Timepoint(3));
        assert!((exact - 0.15).abs() < 1e-12);
    }

    #[test]
    fn filter_threshold_is_strict() {
        let trace = vec![0.0, 0.5, 0.6, 0.7];
        let hit = filter_recognitions(&trace, 0.5);
        assert_eq!(hit.iter().map(|t| t.0).collect::<Vec<_>>(), [2, 3]);
        assert!(filter_recognitions(&trace, 0.7).is_empty());
        let low = filter_recognitions(&trace, 0.3);
        assert!(hit.is_subset(&low));
    }

    #[test]
    fn meeting_initiation_uses_person_probability() {
        let rules = builtin_activity_rules();
        // p1 walks crisply at 1 (person from 2), goes inactive at 5 next
        // to p2 who walked crisply at 1 as well.
        let n = narrative(
            "happensAt(walking(p1),1).\n\
             happensAt(walking(p2),1).\n\
             0.8::happensAt(inactive(p1),5).\n\
             holdsAt(coord(p1)=(0,0),5).\n\
             holdsAt(coord(p2)=(10,0),5).\n\
             happensAt(walking(pad),9).",
        );
        let traces = recognize(&rules, &n);
        let meet = FluentAtom::new(
            "meeting",
            vec![Arg::Entity(Entity::new("p1")), Arg::Entity(Entity::new("p2"))],
            Value::Bool(true),
        );
        let tr = &traces[&meet];
        assert_eq!(tr[5], 0.0);
        assert!((tr[6] - 0.8).abs() < 1e-12);
        let exact = recognize_exact_bdd(&rules, &n, &meet, Timepoint(6));
        assert!((exact - 0.8).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_shape() {
        let n = narrative("0.5::happensAt(start(x),1).\nhappensAt(start(x),2).");
        let traces = recognize(&simple_rules(), &n);
        let csv = trace_csv(&traces);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("fluent,args,frame,probability"));
        assert!(csv.contains("a,x,2,0.500000"));
        let mut recognized = BTreeMap::new();
        recognized.insert(atom_a("x"), filter_recognitions(&traces[&atom_a("x")], 0.4));
        let rcsv = recognitions_csv(&recognized);
        assert_eq!(rcsv, "fluent,args,frame\na,x,2\n");
    }
}
