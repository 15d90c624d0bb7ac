//! Built-in spatial conditions evaluated from coordinate and orientation
//! facts: Euclidean distance, the `close` predicate, and orientation
//! difference.

use crate::model::{Entity, Narrative, Timepoint, Value};

/// `close(a,b,threshold)` at a timepoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloseQuery {
    pub a: Entity,
    pub b: Entity,
    pub threshold: i64,
    pub t: Timepoint,
}

pub fn distance(a: (i64, i64), b: (i64, i64)) -> f64 {
    let dx = (a.0 - b.0) as f64;
    let dy = (a.1 - b.1) as f64;
    (dx * dx + dy * dy).sqrt()
}

/// Coordinate facts for `e` at `t` as `((x,y), prob)` pairs.
pub fn coords_at(n: &Narrative, e: &Entity, t: Timepoint) -> Vec<((i64, i64), f64)> {
    n.fluents_at(t, "coord")
        .filter(|(_, fl, _)| fl.entity_args().next() == Some(e))
        .filter_map(|(_, fl, p)| match fl.value {
            Value::Coord(x, y) => Some(((x, y), p)),
            _ => None,
        })
        .collect()
}

/// Probability that the two entities are strictly closer than the
/// threshold. Missing coordinates make the goal unprovable (0). With
/// multiple probabilistic coordinate facts the pair contributions sum;
/// they stem from distinct random variables.
pub fn close_prob(q: &CloseQuery, n: &Narrative) -> f64 {
    let ca = coords_at(n, &q.a, q.t);
    let cb = coords_at(n, &q.b, q.t);
    let mut p = 0.0;
    for (pa, wa) in &ca {
        for (pb, wb) in &cb {
            if distance(*pa, *pb) < q.threshold as f64 {
                p += wa * wb;
            }
        }
    }
    p.min(1.0)
}

/// Plain absolute difference of two orientations in degrees. Deliberately
/// not circular: 10 and 350 differ by 340, not 20.
pub fn orientation_diff(o1: i64, o2: i64) -> i64 {
    (o1 - o2).abs()
}
