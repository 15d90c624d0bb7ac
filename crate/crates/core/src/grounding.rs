//! Grounds rule bodies against a narrative frame, producing boolean
//! formulas over fact variables and derived-fluent variables. Both engines
//! consume these formulas: the crisp engine evaluates them, the
//! probabilistic engine compiles them to BDDs.

use std::collections::HashMap;

use crate::bdd::Formula;
use crate::model::{Arg, Entity, FluentAtom, Narrative, Timepoint, Value};
use crate::rule_dsl::{
    EventPattern, Expr, FluentPattern, Literal, Rule, RuleSet, Term, ValuePattern, INPUT_FLUENTS,
};
use crate::spatial::distance;

/// A variable in a grounded frame formula: either a narrative fact (by
/// index) or the current value of a derived fluent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EngineAtom {
    Fact(usize),
    Holds(FluentAtom),
}

type GroundFormula = Formula<EngineAtom>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Bound {
    Ent(Entity),
    Int(i64),
}

type Binding = HashMap<String, Bound>;

pub struct Grounder<'a> {
    rules: &'a RuleSet,
    n: &'a Narrative,
}

impl<'a> Grounder<'a> {
    pub fn new(rules: &'a RuleSet, n: &'a Narrative) -> Grounder<'a> {
        Grounder { rules, n }
    }

    /// Every derived fluent atom instantiable from the narrative's
    /// entities, dependencies first. Entity variables range over ordered
    /// tuples of distinct entities.
    pub fn targets(&self) -> Vec<FluentAtom> {
        let entities: Vec<&Entity> = self.n.entities().map(|(e, _)| e).collect();
        let mut out = Vec::new();
        for functor in self.rules.derived_order() {
            let mut shapes: Vec<(&Vec<Term>, Value)> = Vec::new();
            for r in self
                .rules
                .initiations(functor)
                .chain(self.rules.terminations(functor))
            {
                if let Some(v) = pattern_value(&r.head.value) {
                    if !shapes.iter().any(|(a, val)| **a == r.head.args && *val == v) {
                        shapes.push((&r.head.args, v));
                    }
                }
            }
            for (args, value) in shapes {
                let var_slots = args.iter().filter(|a| matches!(a, Term::Var(_))).count();
                for combo in distinct_tuples(&entities, var_slots) {
                    let mut it = combo.iter();
                    let ground: Vec<Arg> = args
                        .iter()
                        .map(|a| match a {
                            Term::Var(_) => Arg::Entity((*it.next().unwrap()).clone()),
                            Term::Const(c) => Arg::Entity(Entity::new(c.clone())),
                            Term::Num(n) => Arg::Num(*n),
                        })
                        .collect();
                    let atom = FluentAtom::new(functor.clone(), ground, value.clone());
                    if !out.contains(&atom) {
                        out.push(atom);
                    }
                }
            }
        }
        out
    }

    /// Disjunction over all initiation-rule instantiations for `g` at `t`.
    pub fn init_formula(&self, g: &FluentAtom, t: Timepoint) -> GroundFormula {
        let mut branches = Vec::new();
        for r in self.rules.initiations(&g.functor) {
            if let Some(binding) = head_binding(r, g) {
                branches.push(self.body_formula(r, binding, t));
            }
        }
        Formula::or(branches)
    }

    /// Disjunction of termination bodies for `g` plus initiation bodies
    /// for the same fluent term with a different value.
    pub fn break_formula(&self, g: &FluentAtom, t: Timepoint) -> GroundFormula {
        let mut branches = Vec::new();
        for r in self.rules.terminations(&g.functor) {
            if let Some(binding) = head_binding(r, g) {
                branches.push(self.body_formula(r, binding, t));
            }
        }
        for r in self.rules.initiations(&g.functor) {
            match pattern_value(&r.head.value) {
                Some(v) if v != g.value => {}
                _ => continue,
            }
            if let Some(binding) = head_binding_args_only(r, g) {
                branches.push(self.body_formula(r, binding, t));
            }
        }
        Formula::or(branches)
    }

    fn body_formula(&self, rule: &Rule, binding: Binding, t: Timepoint) -> GroundFormula {
        // Branch-and-conjoin: each body literal may split the current
        // bindings (when it introduces variables) and contributes a
        // formula conjunct per branch.
        let mut states: Vec<(Binding, Vec<GroundFormula>)> = vec![(binding, Vec::new())];
        for lit in &rule.body {
            let mut next = Vec::new();
            for (theta, conj) in &states {
                for (theta2, f) in self.expand(lit, theta, t) {
                    if f == Formula::False {
                        continue;
                    }
                    let mut conj2 = conj.clone();
                    conj2.push(f);
                    next.push((theta2, conj2));
                }
            }
            states = next;
            if states.is_empty() {
                return Formula::False;
            }
        }
        Formula::or(
            states
                .into_iter()
                .map(|(_, conj)| Formula::and(conj))
                .collect(),
        )
    }

    fn expand(
        &self,
        lit: &Literal,
        theta: &Binding,
        t: Timepoint,
    ) -> Vec<(Binding, GroundFormula)> {
        match lit {
            Literal::HappensAt(e) => self.expand_event(e, theta, t),
            Literal::HoldsAt(fp) => self.expand_holds(fp, theta, t, false),
            Literal::NegFact(e) => vec![(theta.clone(), self.negate_event(e, theta, t))],
            Literal::NegGoal(fp) => self.expand_holds(fp, theta, t, true),
            Literal::Compare(a, op, b) => {
                let f = match (eval_expr(a, theta), eval_expr(b, theta)) {
                    (Some(x), Some(y)) if op.eval(x, y) => Formula::True,
                    _ => Formula::False,
                };
                vec![(theta.clone(), f)]
            }
        }
    }

    fn expand_event(
        &self,
        e: &EventPattern,
        theta: &Binding,
        t: Timepoint,
    ) -> Vec<(Binding, GroundFormula)> {
        let mut out = Vec::new();
        for (idx, ev, _) in self.n.events_at(t, &e.functor) {
            if let Some(theta2) = match_entity_args(&e.args, &ev.args, theta) {
                out.push((theta2, Formula::var(EngineAtom::Fact(idx))));
            }
        }
        out
    }

    /// Negation of an input fact: true when nothing matches, otherwise
    /// the complement of every matching fact.
    fn negate_event(&self, e: &EventPattern, theta: &Binding, t: Timepoint) -> GroundFormula {
        let mut nots = Vec::new();
        for (idx, ev, _) in self.n.events_at(t, &e.functor) {
            if match_entity_args(&e.args, &ev.args, theta).is_some() {
                nots.push(Formula::not(Formula::var(EngineAtom::Fact(idx))));
            }
        }
        Formula::and(nots)
    }

    fn expand_holds(
        &self,
        fp: &FluentPattern,
        theta: &Binding,
        t: Timepoint,
        negated: bool,
    ) -> Vec<(Binding, GroundFormula)> {
        let functor = fp.functor.as_str();
        if functor == "close" {
            let f = self.close_formula(fp, theta, t);
            let f = if negated { Formula::not(f) } else { f };
            return vec![(theta.clone(), f)];
        }
        if functor == "distance" {
            return self.distance_branches(fp, theta, t, negated);
        }
        if INPUT_FLUENTS.contains(&functor) {
            return self.input_fluent_branches(fp, theta, t, negated);
        }
        // Derived fluent: must be ground here; its probability at t is an
        // auxiliary variable for the incremental engine.
        let Some(atom) = resolve_fluent_atom(fp, theta) else {
            return Vec::new();
        };
        let v = Formula::var(EngineAtom::Holds(atom));
        let f = if negated { Formula::not(v) } else { v };
        vec![(theta.clone(), f)]
    }

    /// `close(a,b,thr)=true` is the disjunction over coordinate-fact pairs
    /// within the threshold; `=false` over pairs at or beyond it. Either
    /// way the goal is unprovable without coordinates on both sides.
    fn close_formula(&self, fp: &FluentPattern, theta: &Binding, t: Timepoint) -> GroundFormula {
        let (Some(Bound::Ent(a)), Some(Bound::Ent(b))) = (
            fp.args.first().and_then(|x| resolve_term(x, theta)),
            fp.args.get(1).and_then(|x| resolve_term(x, theta)),
        ) else {
            return Formula::False;
        };
        let Some(Bound::Int(thr)) = fp.args.get(2).and_then(|x| resolve_term(x, theta)) else {
            return Formula::False;
        };
        let want = match fp.value {
            ValuePattern::Bool(b) => b,
            _ => return Formula::False,
        };
        let mut branches = Vec::new();
        for (ia, pa) in self.indexed_coords(&a, t) {
            for (ib, pb) in self.indexed_coords(&b, t) {
                if (distance(pa, pb) < thr as f64) == want {
                    branches.push(Formula::and(vec![
                        Formula::var(EngineAtom::Fact(ia)),
                        Formula::var(EngineAtom::Fact(ib)),
                    ]));
                }
            }
        }
        Formula::or(branches)
    }

    fn distance_branches(
        &self,
        fp: &FluentPattern,
        theta: &Binding,
        t: Timepoint,
        negated: bool,
    ) -> Vec<(Binding, GroundFormula)> {
        let (Some(Bound::Ent(a)), Some(Bound::Ent(b))) = (
            fp.args.first().and_then(|x| resolve_term(x, theta)),
            fp.args.get(1).and_then(|x| resolve_term(x, theta)),
        ) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (ia, pa) in self.indexed_coords(&a, t) {
            for (ib, pb) in self.indexed_coords(&b, t) {
                // Integer distances: the floor preserves `Dist < Thr`
                // comparisons against integer thresholds.
                let d = distance(pa, pb).floor() as i64;
                let pair = Formula::and(vec![
                    Formula::var(EngineAtom::Fact(ia)),
                    Formula::var(EngineAtom::Fact(ib)),
                ]);
                let pair = if negated { Formula::not(pair) } else { pair };
                match &fp.value {
                    ValuePattern::Int(want) => {
                        if d == *want {
                            out.push((theta.clone(), pair));
                        }
                    }
                    ValuePattern::Var(v) => match theta.get(v) {
                        Some(Bound::Int(bound)) => {
                            if d == *bound {
                                out.push((theta.clone(), pair));
                            }
                        }
                        Some(Bound::Ent(_)) => {}
                        None => {
                            let mut theta2 = theta.clone();
                            theta2.insert(v.clone(), Bound::Int(d));
                            out.push((theta2, pair));
                        }
                    },
                    ValuePattern::Bool(_) => {}
                }
            }
        }
        out
    }

    fn input_fluent_branches(
        &self,
        fp: &FluentPattern,
        theta: &Binding,
        t: Timepoint,
        negated: bool,
    ) -> Vec<(Binding, GroundFormula)> {
        let mut out = Vec::new();
        for (idx, fl, _) in self.n.fluents_at(t, &fp.functor) {
            let Some(theta2) = match_fluent_args(&fp.args, &fl.args, theta) else {
                continue;
            };
            let var = Formula::var(EngineAtom::Fact(idx));
            let var = if negated { Formula::not(var) } else { var };
            match (&fp.value, &fl.value) {
                (ValuePattern::Int(want), Value::Int(v)) => {
                    if want == v {
                        out.push((theta2, var));
                    }
                }
                (ValuePattern::Bool(want), Value::Bool(v)) => {
                    if want == v {
                        out.push((theta2, var));
                    }
                }
                (ValuePattern::Var(name), Value::Int(v)) => match theta2.get(name) {
                    Some(Bound::Int(bound)) => {
                        if bound == v {
                            out.push((theta2.clone(), var));
                        }
                    }
                    Some(Bound::Ent(_)) => {}
                    None => {
                        let mut theta3 = theta2.clone();
                        theta3.insert(name.clone(), Bound::Int(*v));
                        out.push((theta3, var));
                    }
                },
                _ => {}
            }
        }
        out
    }

    fn indexed_coords(&self, e: &Entity, t: Timepoint) -> Vec<(usize, (i64, i64))> {
        self.n
            .fluents_at(t, "coord")
            .filter(|(_, fl, _)| fl.entity_args().next() == Some(e))
            .filter_map(|(i, fl, _)| match fl.value {
                Value::Coord(x, y) => Some((i, (x, y))),
                _ => None,
            })
            .collect()
    }
}

fn distinct_tuples<'e>(entities: &[&'e Entity], k: usize) -> Vec<Vec<&'e Entity>> {
    let mut out: Vec<Vec<&Entity>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for tuple in &out {
            for e in entities {
                if !tuple.contains(e) {
                    let mut t2 = tuple.clone();
                    t2.push(e);
                    next.push(t2);
                }
            }
        }
        out = next;
    }
    out
}

fn pattern_value(vp: &ValuePattern) -> Option<Value> {
    match vp {
        ValuePattern::Bool(b) => Some(Value::Bool(*b)),
        ValuePattern::Int(n) => Some(Value::Int(*n)),
        ValuePattern::Var(_) => None,
    }
}

fn head_binding(rule: &Rule, g: &FluentAtom) -> Option<Binding> {
    if pattern_value(&rule.head.value).as_ref() != Some(&g.value) {
        return None;
    }
    head_binding_args_only(rule, g)
}

fn head_binding_args_only(rule: &Rule, g: &FluentAtom) -> Option<Binding> {
    if rule.head.functor != g.functor || rule.head.args.len() != g.args.len() {
        return None;
    }
    let mut theta = Binding::new();
    for (pat, arg) in rule.head.args.iter().zip(&g.args) {
        match (pat, arg) {
            (Term::Var(v), Arg::Entity(e)) => match theta.get(v) {
                Some(Bound::Ent(prev)) if prev == e => {}
                Some(_) => return None,
                None => {
                    theta.insert(v.clone(), Bound::Ent(e.clone()));
                }
            },
            (Term::Var(v), Arg::Num(n)) => match theta.get(v) {
                Some(Bound::Int(prev)) if prev == n => {}
                Some(_) => return None,
                None => {
                    theta.insert(v.clone(), Bound::Int(*n));
                }
            },
            (Term::Const(c), Arg::Entity(e)) if c == e.as_str() => {}
            (Term::Num(a), Arg::Num(b)) if a == b => {}
            _ => return None,
        }
    }
    Some(theta)
}

fn resolve_term(t: &Term, theta: &Binding) -> Option<Bound> {
    match t {
        Term::Var(v) => theta.get(v).cloned(),
        Term::Const(c) => Some(Bound::Ent(Entity::new(c.clone()))),
        Term::Num(n) => Some(Bound::Int(*n)),
    }
}

fn resolve_fluent_atom(fp: &FluentPattern, theta: &Binding) -> Option<FluentAtom> {
    let mut args = Vec::new();
    for t in &fp.args {
        match resolve_term(t, theta)? {
            Bound::Ent(e) => args.push(Arg::Entity(e)),
            Bound::Int(n) => args.push(Arg::Num(n)),
        }
    }
    let value = match &fp.value {
        ValuePattern::Bool(b) => Value::Bool(*b),
        ValuePattern::Int(n) => Value::Int(*n),
        ValuePattern::Var(v) => match theta.get(v)? {
            Bound::Int(n) => Value::Int(*n),
            Bound::Ent(_) => return None,
        },
    };
    Some(FluentAtom::new(fp.functor.clone(), args, value))
}

fn match_entity_args(pats: &[Term], args: &[Entity], theta: &Binding) -> Option<Binding> {
    if pats.len() != args.len() {
        return None;
    }
    let mut theta = theta.clone();
    for (pat, e) in pats.iter().zip(args) {
        match pat {
            Term::Var(v) => match theta.get(v) {
                Some(Bound::Ent(prev)) if prev == e => {}
                Some(_) => return None,
                None => {
                    theta.insert(v.clone(), Bound::Ent(e.clone()));
                }
            },
            Term::Const(c) if c == e.as_str() => {}
            _ => return None,
        }
    }
    Some(theta)
}

fn match_fluent_args(pats: &[Term], args: &[Arg], theta: &Binding) -> Option<Binding> {
    if pats.len() != args.len() {
        return None;
    }
    let mut theta = theta.clone();
    for (pat, arg) in pats.iter().zip(args) {
        match (pat, arg) {
            (Term::Var(v), Arg::Entity(e)) => match theta.get(v) {
                Some(Bound::Ent(prev)) if prev == e => {}
                Some(_) => return None,
                None => {
                    theta.insert(v.clone(), Bound::Ent(e.clone()));
                }
            },
            (Term::Var(v), Arg::Num(n)) => match theta.get(v) {
                Some(Bound::Int(prev)) if prev == n => {}
                Some(_) => return None,
                None => {
                    theta.insert(v.clone(), Bound::Int(*n));
                }
            },
            (Term::Const(c), Arg::Entity(e)) if c == e.as_str() => {}
            (Term::Num(a), Arg::Num(b)) if a == b => {}
            _ => return None,
        }
    }
    Some(theta)
}

fn eval_expr(e: &Expr, theta: &Binding) -> Option<i64> {
    match e {
        Expr::Num(n) => Some(*n),
        Expr::Var(v) => match theta.get(v)? {
            Bound::Int(n) => Some(*n),
            Bound::Ent(_) => None,
        },
        Expr::AbsDiff(a, b) => Some((eval_expr(a, theta)? - eval_expr(b, theta)?).abs()),
    }
}
