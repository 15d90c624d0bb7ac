//! Crisp Event Calculus evaluation: forward scan of the inertia axioms
//! with negation as failure over a probability-free narrative.

use std::collections::{BTreeSet, HashMap};

use crate::bdd::Formula;
use crate::grounding::{EngineAtom, Grounder};
use crate::model::{FluentAtom, Narrative, Timepoint};
use crate::rule_dsl::RuleSet;

/// Holding status of every derived fluent atom at the current frame.
#[derive(Debug, Clone, Default)]
pub struct CrispState {
    holding: HashMap<FluentAtom, bool>,
}

impl CrispState {
    pub fn holds(&self, f: &FluentAtom) -> bool {
        self.holding.get(f).copied().unwrap_or(false)
    }

    pub fn set(&mut self, f: FluentAtom, v: bool) {
        self.holding.insert(f, v);
    }
}

fn eval(f: &Formula<EngineAtom>, n: &Narrative, s: &CrispState) -> bool {
    f.eval(&|atom| match atom {
        EngineAtom::Fact(i) => n.fact(*i).prob == 1.0,
        EngineAtom::Holds(fl) => s.holds(fl),
    })
}

/// True iff some initiation rule body for `f` is satisfied at `t`.
/// Negated literals succeed when their target is absent or unprovable;
/// same-frame holdsAt literals read `s`, the values at `t`.
pub fn crisp_initiated(
    f: &FluentAtom,
    t: Timepoint,
    rules: &RuleSet,
    n: &Narrative,
    s: &CrispState,
) -> bool {
    let g = Grounder::new(rules, n);
    eval(&g.init_formula(f, t), n, s)
}

pub fn crisp_broken(
    f: &FluentAtom,
    t: Timepoint,
    rules: &RuleSet,
    n: &Narrative,
    s: &CrispState,
) -> bool {
    let g = Grounder::new(rules, n);
    eval(&g.break_formula(f, t), n, s)
}

/// All derived fluent atoms with the sets of timepoints at which they hold,
/// by a single forward scan over `[0, horizon]`.
pub fn crisp_recognize(rules: &RuleSet, n: &Narrative) -> HashMap<FluentAtom, BTreeSet<Timepoint>> {
    let g = Grounder::new(rules, n);
    let targets = g.targets();
    let mut state = CrispState::default();
    for (_, fl, p) in n.initially_facts() {
        if p == 1.0 {
            state.set(fl.clone(), true);
        }
    }
    let mut out: HashMap<FluentAtom, BTreeSet<Timepoint>> =
        targets.iter().map(|f| (f.clone(), BTreeSet::new())).collect();
    let horizon = n.horizon().0;
    for t in 0..=horizon {
        let t = Timepoint(t);
        for f in &targets {
            if state.holds(f) {
                out.get_mut(f).unwrap().insert(t);
            }
        }
        // holdsAt literals at t see values derived from events before t,
        // so all updates are computed against the frozen state.
        let mut next = state.clone();
        for f in &targets {
            let initiated = eval(&g.init_formula(f, t), n, &state);
            let broken = eval(&g.break_formula(f, t), n, &state);
            next.set(f.clone(), initiated || (state.holds(f) && !broken));
        }
        state = next;
    }
    out
}

/// Timepoints at which `f=v` holds.
pub fn crisp_holds_stream(f: &FluentAtom, rules: &RuleSet, n: &Narrative) -> BTreeSet<Timepoint> {
    crisp_recognize(rules, n).remove(f).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact_io::parse_facts;
    use crate::model::{index_narrative, Arg, Entity, Value};
    use crate::rule_dsl::{builtin_activity_rules, parse_rules};
    use proptest::prelude::*;

    fn narrative(text: &str) -> Narrative {
        index_narrative(parse_facts(text).unwrap()).unwrap()
    }

    fn simple_rules() -> RuleSet {
        parse_rules(
            "initiatedAt(a(P)=true, T) :- happensAt(start(P), T).\n\
             terminatedAt(a(P)=true, T) :- happensAt(stop(P), T).",
        )
        .unwrap()
    }

    fn atom(name: &str, e: &str) -> FluentAtom {
        FluentAtom::new(name, vec![Arg::Entity(Entity::new(e))], Value::Bool(true))
    }

    fn frames(s: &BTreeSet<Timepoint>) -> Vec<u64> {
        s.iter().map(|t| t.0).collect()
    }

    #[test]
    fn init_20_term_30() {
        let n = narrative("happensAt(start(x),20).\nhappensAt(stop(x),30).\nhappensAt(start(y),35).");
        let s = crisp_holds_stream(&atom("a", "x"), &simple_rules(), &n);
        assert_eq!(frames(&s), (21..=30).collect::<Vec<_>>());
    }

    #[test]
    fn inits_10_20_term_30() {
        let n = narrative(
            "happensAt(start(x),10).\nhappensAt(start(x),20).\nhappensAt(stop(x),30).\n\
             happensAt(start(y),35).",
        );
        let s = crisp_holds_stream(&atom("a", "x"), &simple_rules(), &n);
        assert_eq!(frames(&s), (11..=30).collect::<Vec<_>>());
    }

    #[test]
    fn inits_10_20_terms_25_30() {
        let n = narrative(
            "happensAt(start(x),10).\nhappensAt(start(x),20).\n\
             happensAt(stop(x),25).\nhappensAt(stop(x),30).\nhappensAt(start(y),35).",
        );
        let s = crisp_holds_stream(&atom("a", "x"), &simple_rules(), &n);
        assert_eq!(frames(&s), (11..=25).collect::<Vec<_>>());
    }

    #[test]
    fn initially_seeds_frame_zero() {
        let n = narrative("initially(a(x)=true).\nhappensAt(stop(x),5).\nhappensAt(start(y),9).");
        let s = crisp_holds_stream(&atom("a", "x"), &simple_rules(), &n);
        assert_eq!(frames(&s), (0..=5).collect::<Vec<_>>());
    }

    #[test]
    fn moving_initiated_with_aligned_orientations() {
        let rules = builtin_activity_rules();
        let n = narrative(
            "happensAt(walking(p1),1).\n\
             happensAt(walking(p2),1).\n\
             holdsAt(coord(p1)=(0,0),1).\n\
             holdsAt(coord(p2)=(10,0),1).\n\
             holdsAt(orientation(p1)=100,1).\n\
             holdsAt(orientation(p2)=60,1).",
        );
        let mv = FluentAtom::new(
            "moving",
            vec![Arg::Entity(Entity::new("p1")), Arg::Entity(Entity::new("p2"))],
            Value::Bool(true),
        );
        let s = CrispState::default();
        assert!(crisp_initiated(&mv, Timepoint(1), &rules, &n, &s));
    }

    #[test]
    fn moving_not_initiated_with_opposed_orientations() {
        let rules = builtin_activity_rules();
        let n = narrative(
            "happensAt(walking(p1),1).\n\
             happensAt(walking(p2),1).\n\
             holdsAt(coord(p1)=(0,0),1).\n\
             holdsAt(coord(p2)=(10,0),1).\n\
             holdsAt(orientation(p1)=100,1).\n\
             holdsAt(orientation(p2)=160,1).",
        );
        let mv = FluentAtom::new(
            "moving",
            vec![Arg::Entity(Entity::new("p1")), Arg::Entity(Entity::new("p2"))],
            Value::Bool(true),
        );
        assert!(!crisp_initiated(&mv, Timepoint(1), &rules, &n, &CrispState::default()));
    }

    #[test]
    fn fighting_blocked_by_inactive_partner() {
        let rules = builtin_activity_rules();
        let n = narrative(
            "happensAt(abrupt(p1),1).\n\
             happensAt(inactive(p2),1).\n\
             holdsAt(coord(p1)=(0,0),1).\n\
             holdsAt(coord(p2)=(40,0),1).",
        );
        let fight = FluentAtom::new(
            "fighting",
            vec![Arg::Entity(Entity::new("p1")), Arg::Entity(Entity::new("p2"))],
            Value::Bool(true),
        );
        assert!(!crisp_initiated(&fight, Timepoint(1), &rules, &n, &CrispState::default()));
    }

    #[test]
    fn value_exclusivity() {
        let rules = parse_rules(
            "initiatedAt(light(L)=1, T) :- happensAt(on(L), T).\n\
             initiatedAt(light(L)=0, T) :- happensAt(off(L), T).",
        )
        .unwrap();
        let n = narrative(
            "happensAt(on(a),1).\nhappensAt(off(a),5).\nhappensAt(on(a),9).\nhappensAt(off(b),12).",
        );
        let all = crisp_recognize(&rules, &n);
        let one = FluentAtom::new("light", vec![Arg::Entity(Entity::new("a"))], Value::Int(1));
        let zero = FluentAtom::new("light", vec![Arg::Entity(Entity::new("a"))], Value::Int(0));
        for t in 0..=12 {
            let t = Timepoint(t);
            let count = [&one, &zero].iter().filter(|f| all[**f].contains(&t)).count();
            assert!(count <= 1, "both values hold at {t}");
        }
        assert_eq!(frames(&all[&one]), (2..=5).chain(10..=12).collect::<Vec<_>>());
        assert_eq!(frames(&all[&zero]), (6..=9).collect::<Vec<_>>());
    }

    /// Direct evaluation of the holdsAt axioms, used as an oracle:
    /// holds at T iff initiated at some Ts < T with no break in (Ts, T),
    /// or initially true with no break in [0, T).
    fn axiom_oracle(
        f: &FluentAtom,
        rules: &RuleSet,
        n: &Narrative,
        initially: bool,
    ) -> BTreeSet<Timepoint> {
        let s = CrispState::default();
        let horizon = n.horizon().0;
        let init: Vec<u64> = (0..=horizon)
            .filter(|&t| crisp_initiated(f, Timepoint(t), rules, n, &s))
            .collect();
        let brk: Vec<u64> = (0..=horizon)
            .filter(|&t| crisp_broken(f, Timepoint(t), rules, n, &s))
            .collect();
        let mut out = BTreeSet::new();
        for t in 0..=horizon {
            let from_init = init
                .iter()
                .any(|&ts| ts < t && !brk.iter().any(|&tf| ts < tf && tf < t));
            let from_initially = initially && !brk.iter().any(|&tf| tf < t);
            if from_init || from_initially {
                out.insert(Timepoint(t));
            }
        }
        out
    }

    proptest! {
        #[test]
        fn scan_matches_axioms(
            starts in prop::collection::btree_set(0u64..20, 0..6),
            stops in prop::collection::btree_set(0u64..20, 0..6),
            initially in any::<bool>(),
        ) {
            let mut text = String::new();
            if initially {
                text.push_str("initially(a(x)=true).\n");
            }
            for t in &starts {
                text.push_str(&format!("happensAt(start(x),{t}).\n"));
            }
            for t in &stops {
                text.push_str(&format!("happensAt(stop(x),{t}).\n"));
            }
            text.push_str("happensAt(start(pad),20).\n");
            let n = narrative(&text);
            let rules = simple_rules();
            let f = atom("a", "x");
            let scan = crisp_holds_stream(&f, &rules, &n);
            let oracle = axiom_oracle(&f, &rules, &n, initially);
            prop_assert_eq!(scan, oracle);
        }
    }
}
