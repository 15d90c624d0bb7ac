//! Bundled example narratives and synthetic benchmark generators used by
//! tests, benches and the evaluation harness.

use std::collections::{BTreeMap, BTreeSet};

use crate::fact_io::parse_facts;
use crate::model::{index_narrative, Arg, Entity, FluentAtom, Narrative, Timepoint, Value};

/// Two people walking together with probabilistic detections: probability
/// jumps to 0.322 at frame 2, stays flat to 21, climbs to 0.8 by 41, then
/// decays after a walk-away termination at 41.
pub fn moving_example() -> Narrative {
    index_narrative(parse_facts(include_str!("../fixtures/moving_mike_sarah.facts")).unwrap())
        .unwrap()
}

/// A single-initiation activity: an object is left next to a person with
/// initiation probability 0.6, and picked up again with termination
/// probability 0.6.
pub fn leaving_object_example() -> Narrative {
    index_narrative(parse_facts(include_str!("../fixtures/leaving_object.facts")).unwrap())
        .unwrap()
}

/// Clean benchmark: two people walk together for `frames` frames and then
/// leave the scene. Returns the narrative and the ground truth for the
/// `moving` activity (canonical entity order).
pub fn synthetic_benchmark(frames: u64) -> (Narrative, BTreeSet<(FluentAtom, u64)>) {
    let mut text = String::new();
    for t in 1..=frames {
        text.push_str(&format!(
            "happensAt(walking(anna),{t}).\n\
             happensAt(walking(ben),{t}).\n\
             holdsAt(coord(anna)=(10,10),{t}).\n\
             holdsAt(coord(ben)=(30,10),{t}).\n\
             holdsAt(orientation(anna)=90,{t}).\n\
             holdsAt(orientation(ben)=90,{t}).\n"
        ));
    }
    let end = frames + 1;
    text.push_str(&format!(
        "happensAt(disappear(anna),{end}).\nhappensAt(disappear(ben),{end}).\n"
    ));
    let n = index_narrative(parse_facts(&text).unwrap()).unwrap();
    let atom = FluentAtom::new(
        "moving",
        vec![
            Arg::Entity(Entity::new("anna")),
            Arg::Entity(Entity::new("ben")),
        ],
        Value::Bool(true),
    );
    let truth = (2..=end).map(|t| (atom.clone(), t)).collect();
    (n, truth)
}

/// One entity walking for `frames` frames, with coordinates and
/// orientation; raw material for the noise-injection statistics.
pub fn walking_noise_narrative(frames: u64) -> Narrative {
    let mut text = String::new();
    for t in 1..=frames {
        let x = (t % 100) as i64;
        text.push_str(&format!(
            "happensAt(walking(w),{t}).\n\
             holdsAt(coord(w)=({x},50),{t}).\n\
             holdsAt(orientation(w)=90,{t}).\n"
        ));
    }
    index_narrative(parse_facts(&text).unwrap()).unwrap()
}

/// Truth map form used by the crisp engine comparisons.
pub fn truth_as_map(
    truth: &BTreeSet<(FluentAtom, u64)>,
) -> BTreeMap<FluentAtom, BTreeSet<Timepoint>> {
    let mut out: BTreeMap<FluentAtom, BTreeSet<Timepoint>> = BTreeMap::new();
    for (f, t) in truth {
        out.entry(f.clone()).or_default().insert(Timepoint(*t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crisp::crisp_recognize;
    use crate::rule_dsl::builtin_activity_rules;

    #[test]
    fn fixtures_parse() {
        assert_eq!(moving_example().horizon(), Timepoint(45));
        assert_eq!(leaving_object_example().horizon(), Timepoint(25));
    }

    #[test]
    fn benchmark_truth_matches_crisp_run() {
        let (n, truth) = synthetic_benchmark(50);
        let rules = builtin_activity_rules();
        let rec = crisp_recognize(&rules, &n);
        let atom = truth.iter().next().unwrap().0.clone();
        let frames: BTreeSet<u64> = rec[&atom].iter().map(|t| t.0).collect();
        let expected: BTreeSet<u64> = truth.iter().map(|(_, t)| *t).collect();
        assert_eq!(frames, expected);
    }
}
