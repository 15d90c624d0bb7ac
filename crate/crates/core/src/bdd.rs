//! Boolean formulas over independent probabilistic variables, compiled to
//! reduced ordered BDDs for exact probability computation, plus a
//! brute-force possible-worlds oracle for cross-checking.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fmt::{self, Debug};
use std::hash::Hash;

use thiserror::Error;

/// Boolean expression tree over variables of type `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula<V> {
    True,
    False,
    Var(V),
    Not(Box<Formula<V>>),
    And(Vec<Formula<V>>),
    Or(Vec<Formula<V>>),
}

impl<V: Clone + Eq + Hash> Formula<V> {
    pub fn var(v: V) -> Formula<V> {
        Formula::Var(v)
    }

    pub fn not(f: Formula<V>) -> Formula<V> {
        Formula::Not(Box::new(f))
    }

    /// Conjunction with unit simplification.
    pub fn and(fs: Vec<Formula<V>>) -> Formula<V> {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with unit simplification.
    pub fn or(fs: Vec<Formula<V>>) -> Formula<V> {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Distinct variables in first-occurrence order.
    pub fn vars(&self) -> Vec<V> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    fn collect_vars(&self, seen: &mut HashMap<V, ()>, out: &mut Vec<V>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Var(v) => {
                if seen.insert(v.clone(), ()).is_none() {
                    out.push(v.clone());
                }
            }
            Formula::Not(f) => f.collect_vars(seen, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_vars(seen, out);
                }
            }
        }
    }

    pub fn eval(&self, assign: &impl Fn(&V) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(v) => assign(v),
            Formula::Not(f) => !f.eval(assign),
            Formula::And(fs) => fs.iter().all(|f| f.eval(assign)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(assign)),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BddError {
    #[error("variable {0} missing from the compilation order")]
    VarNotInOrder(String),
    #[error("{0} variables exceed the enumeration limit of {MAX_ENUM_VARS}")]
    TooManyVars(usize),
}

pub const MAX_ENUM_VARS: usize = 25;

/// Definitional success probability: sum over every assignment satisfying
/// the formula of the product of chosen fact probabilities. Exponential;
/// the ground-truth oracle for the BDD path.
pub fn world_enumeration<V: Clone + Eq + Hash>(
    f: &Formula<V>,
    prob: impl Fn(&V) -> f64,
) -> Result<f64, BddError> {
    let vars = f.vars();
    if vars.len() > MAX_ENUM_VARS {
        return Err(BddError::TooManyVars(vars.len()));
    }
    let index: HashMap<&V, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut total = 0.0;
    for world in 0u64..(1u64 << vars.len()) {
        let assign = |v: &V| world >> index[v] & 1 == 1;
        if f.eval(&assign) {
            let mut w = 1.0;
            for (i, v) in vars.iter().enumerate() {
                let p = prob(v);
                w *= if world >> i & 1 == 1 { p } else { 1.0 - p };
            }
            total += w;
        }
    }
    Ok(total)
}

pub type NodeId = u32;
pub const FALSE: NodeId = 0;
pub const TRUE: NodeId = 1;

const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    low: NodeId,
    high: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

/// Hash-consed ROBDD node table over a fixed variable order. Nodes are
/// canonical: logically equivalent formulas compile to the same `NodeId`.
pub struct BddManager<V> {
    order: Vec<V>,
    level_of: HashMap<V, u32>,
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeId>,
    apply_memo: HashMap<(Op, NodeId, NodeId), NodeId>,
    not_memo: HashMap<NodeId, NodeId>,
}

impl<V: Clone + Eq + Hash + Debug> BddManager<V> {
    pub fn new(order: Vec<V>) -> BddManager<V> {
        let level_of = order
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect();
        // Slots 0 and 1 are the terminals; their stored fields are unused.
        let terminals = vec![
            Node { level: TERMINAL_LEVEL, low: FALSE, high: FALSE },
            Node { level: TERMINAL_LEVEL, low: TRUE, high: TRUE },
        ];
        BddManager { order, level_of, nodes: terminals, unique: HashMap::new(), apply_memo: HashMap::new(), not_memo: HashMap::new() }
    }

    pub fn compile(&mut self, f: &Formula<V>) -> Result<NodeId, BddError> {
        match f {
            Formula::True => Ok(TRUE),
            Formula::False => Ok(FALSE),
            Formula::Var(v) => {
                let level = *self
                    .level_of
                    .get(v)
                    .ok_or_else(|| BddError::VarNotInOrder(format!("{v:?}")))?;
                Ok(self.mk(level, FALSE, TRUE))
            }
            Formula::Not(g) => {
                let n = self.compile(g)?;
                Ok(self.negate(n))
            }
            Formula::And(gs) => {
                let mut acc = TRUE;
                for g in gs {
                    let n = self.compile(g)?;
                    acc = self.apply(Op::And, acc, n);
                }
                Ok(acc)
            }
            Formula::Or(gs) => {
                let mut acc = FALSE;
                for g in gs {
                    let n = self.compile(g)?;
                    acc = self.apply(Op::Or, acc, n);
                }
                Ok(acc)
            }
        }
    }

    fn mk(&mut self, level: u32, low: NodeId, high: NodeId) -> NodeId {
        if low == high {
            return low;
        }
        let node = Node { level, low, high };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    fn negate(&mut self, n: NodeId) -> NodeId {
        match n {
            FALSE => TRUE,
            TRUE => FALSE,
            _ => {
                if let Some(&r) = self.not_memo.get(&n) {
                    return r;
                }
                let Node { level, low, high } = self.nodes[n as usize];
                let nl = self.negate(low);
                let nh = self.negate(high);
                let r = self.mk(level, nl, nh);
                self.not_memo.insert(n, r);
                r
            }
        }
    }

    fn apply(&mut self, op: Op, a: NodeId, b: NodeId) -> NodeId {
        match (op, a, b) {
            (Op::And, FALSE, _) | (Op::And, _, FALSE) => return FALSE,
            (Op::And, TRUE, x) | (Op::And, x, TRUE) => return x,
            (Op::Or, TRUE, _) | (Op::Or, _, TRUE) => return TRUE,
            (Op::Or, FALSE, x) | (Op::Or, x, FALSE) => return x,
            _ if a == b => return a,
            _ => {}
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let Some(&r) = self.apply_memo.get(&(op, a, b)) {
            return r;
        }
        let na = self.nodes[a as usize];
        let nb = self.nodes[b as usize];
        let level = na.level.min(nb.level);
        let (al, ah) = if na.level == level { (na.low, na.high) } else { (a, a) };
        let (bl, bh) = if nb.level == level { (nb.low, nb.high) } else { (b, b) };
        let low = self.apply(op, al, bl);
        let high = self.apply(op, ah, bh);
        let r = self.mk(level, low, high);
        self.apply_memo.insert((op, a, b), r);
        r
    }

    /// P(root) with P(node) = p·P(high) + (1−p)·P(low), P(TRUE)=1, P(FALSE)=0.
    pub fn probability(&self, root: NodeId, prob: &impl Fn(&V) -> f64) -> f64 {
        let mut memo: HashMap<NodeId, f64> = HashMap::new();
        self.prob_rec(root, prob, &mut memo)
    }

    fn prob_rec(
        &self,
        n: NodeId,
        prob: &impl Fn(&V) -> f64,
        memo: &mut HashMap<NodeId, f64>,
    ) -> f64 {
        match n {
            FALSE => 0.0,
            TRUE => 1.0,
            _ => {
                if let Some(&p) = memo.get(&n) {
                    return p;
                }
                let node = self.nodes[n as usize];
                let pv = prob(&self.order[node.level as usize]);
                let p = pv * self.prob_rec(node.high, prob, memo)
                    + (1.0 - pv) * self.prob_rec(node.low, prob, memo);
                memo.insert(n, p);
                p
            }
        }
    }

    /// Decision nodes reachable from `root` (terminals excluded).
    pub fn node_count(&self, root: NodeId) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            stack.push(node.low);
            stack.push(node.high);
        }
        seen.len()
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, root: NodeId) -> String
    where
        V: fmt::Display,
    {
        let mut out = String::from("digraph bdd {\n");
        let _ = writeln!(out, "  n0 [label=\"0\", shape=box];");
        let _ = writeln!(out, "  n1 [label=\"1\", shape=box];");
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            let _ = writeln!(out, "  n{n} [label=\"{}\"];", self.order[node.level as usize]);
            let _ = writeln!(out, "  n{n} -> n{} [label=\"high\"];", node.high);
            let _ = writeln!(out, "  n{n} -> n{} [label=\"low\", style=dashed];", node.low);
            stack.push(node.low);
            stack.push(node.high);
        }
        out.push_str("}\n");
        out
    }
}

/// Compile against an explicit variable order and return the probability.
pub fn formula_probability<V: Clone + Eq + Hash + Debug>(
    f: &Formula<V>,
    order: Vec<V>,
    prob: impl Fn(&V) -> f64,
) -> Result<f64, BddError> {
    let mut mgr = BddManager::new(order);
    let root = mgr.compile(f)?;
    Ok(mgr.probability(root, &prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type F = Formula<u32>;

    fn probs4(v: &u32) -> f64 {
        [0.70, 0.46, 0.69, 0.58][*v as usize]
    }

    fn dnf4() -> F {
        Formula::or(vec![
            Formula::and(vec![F::var(0), F::var(1)]),
            Formula::and(vec![F::var(2), F::var(3)]),
        ])
    }

    #[test]
    fn single_var_node() {
        let mut mgr = BddManager::new(vec![0u32]);
        let root = mgr.compile(&F::var(0)).unwrap();
        assert_eq!(mgr.nodes[root as usize], Node { level: 0, low: FALSE, high: TRUE });
        assert_eq!(mgr.node_count(root), 1);
    }

    #[test]
    fn idempotent_or() {
        let mut mgr = BddManager::new(vec![0u32]);
        let a = mgr.compile(&F::var(0)).unwrap();
        let aa = mgr.compile(&Formula::Or(vec![F::var(0), F::var(0)])).unwrap();
        assert_eq!(a, aa);
    }

    #[test]
    fn two_pair_dnf_has_four_nodes() {
        let mut mgr = BddManager::new(vec![0u32, 1, 2, 3]);
        let root = mgr.compile(&dnf4()).unwrap();
        assert_eq!(mgr.node_count(root), 4);
    }

    #[test]
    fn two_pair_dnf_probability() {
        let expected = 0.70 * 0.46 + 0.69 * 0.58 - 0.70 * 0.46 * 0.69 * 0.58;
        let p = formula_probability(&dnf4(), vec![0, 1, 2, 3], probs4).unwrap();
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 0.593).abs() < 5e-4);
        let w = world_enumeration(&dnf4(), probs4).unwrap();
        assert!((w - expected).abs() < 1e-12);
    }

    #[test]
    fn terminals() {
        let p = formula_probability::<u32>(&Formula::True, vec![], |_| 0.0).unwrap();
        assert_eq!(p, 1.0);
        let w = world_enumeration::<u32>(&Formula::False, |_| 0.0).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn single_world() {
        let w = world_enumeration(&F::var(0), |_| 0.3).unwrap();
        assert!((w - 0.3).abs() < 1e-15);
    }

    #[test]
    fn contradiction_is_zero() {
        let f = Formula::and(vec![F::var(0), F::not(F::var(0))]);
        assert_eq!(world_enumeration(&f, |_| 0.5).unwrap(), 0.0);
        let mut mgr = BddManager::new(vec![0u32]);
        assert_eq!(mgr.compile(&f).unwrap(), FALSE);
    }

    #[test]
    fn var_outside_order_rejected() {
        let mut mgr = BddManager::new(vec![0u32]);
        assert!(matches!(mgr.compile(&F::var(7)), Err(BddError::VarNotInOrder(_))));
    }

    #[test]
    fn enumeration_limit() {
        let f = Formula::Or((0u32..26).map(F::var).collect());
        assert_eq!(world_enumeration(&f, |_| 0.5), Err(BddError::TooManyVars(26)));
    }

    #[test]
    fn dot_export_mentions_every_var() {
        let mut mgr = BddManager::new(vec![0u32, 1, 2, 3]);
        let root = mgr.compile(&dnf4()).unwrap();
        let dot = mgr.to_dot(root);
        for label in ["\"0\"", "\"1\"", "\"2\"", "\"3\"", "high", "low"] {
            assert!(dot.contains(label), "missing {label} in {dot}");
        }
    }

    fn arb_formula(vars: u32, depth: u32) -> impl Strategy<Value = F> {
        let leaf = prop_oneof![
            (0..vars).prop_map(F::var),
            Just(Formula::True),
            Just(Formula::False),
        ];
        leaf.prop_recursive(depth, 32, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::And),
                prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::Or),
                inner.prop_map(|f| Formula::Not(Box::new(f))),
            ]
        })
    }

    proptest! {
        #[test]
        fn bdd_matches_enumeration(
            f in arb_formula(6, 4),
            probs in prop::collection::vec(0.0f64..=1.0, 6),
        ) {
            let prob = |v: &u32| probs[*v as usize];
            let expected = world_enumeration(&f, prob).unwrap();
            let got = formula_probability(&f, (0..6).collect(), prob).unwrap();
            prop_assert!((got - expected).abs() < 1e-12);
        }

        #[test]
        fn probability_is_order_independent(
            f in arb_formula(6, 4),
            probs in prop::collection::vec(0.01f64..=0.99, 6),
            seed in any::<u64>(),
        ) {
            let prob = |v: &u32| probs[*v as usize];
            let p1 = formula_probability(&f, (0..6).collect(), prob).unwrap();
            let mut order: Vec<u32> = (0..6).collect();
            // Cheap deterministic shuffle from the seed.
            for i in (1..order.len()).rev() {
                order.swap(i, (seed as usize).wrapping_mul(i + 7) % (i + 1));
            }
            let p2 = formula_probability(&f, order, prob).unwrap();
            prop_assert!((p1 - p2).abs() < 1e-12);
        }

        #[test]
        fn compile_is_canonical(f in arb_formula(5, 3)) {
            let mut mgr = BddManager::new((0u32..5).collect());
            let a = mgr.compile(&f).unwrap();
            let doubled = Formula::Or(vec![f.clone(), f.clone()]);
            let b = mgr.compile(&doubled).unwrap();
            prop_assert_eq!(a, b);
            let neg_neg = Formula::not(Formula::not(f));
            let c = mgr.compile(&neg_neg).unwrap();
            prop_assert_eq!(a, c);
        }
    }
}
