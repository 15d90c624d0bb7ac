//! Noise injection for clean narratives, and the filtering step that
//! turns a probabilistic stream back into a crisp one.
//!
//! Probabilities are drawn as p = exp(−x) with x ~ Gamma(shape 2,
//! scale mean/2): the higher the configured mean, the lower the
//! probabilities. The shape parameter and the sample-to-probability
//! transform are implementation choices; only the monotone relation is
//! prescribed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::model::{
    index_narrative, Arg, Entity, EventAtom, FactBody, FluentAtom, Narrative, ProbFact, Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLevel {
    /// Probabilities on STA events only.
    Smooth,
    /// Smooth, plus independent probabilities on coordinate and
    /// orientation facts.
    Intermediate,
    /// Intermediate, plus spurious walking detections of a non-existent
    /// entity on a fraction of walking frames.
    Strong,
}

impl NoiseLevel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseLevel::Smooth => "smooth",
            NoiseLevel::Intermediate => "intermediate",
            NoiseLevel::Strong => "strong",
        }
    }
}

impl std::str::FromStr for NoiseLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<NoiseLevel, String> {
        match s {
            "smooth" => Ok(NoiseLevel::Smooth),
            "intermediate" => Ok(NoiseLevel::Intermediate),
            "strong" => Ok(NoiseLevel::Strong),
            other => Err(format!("unknown noise level '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseConfig {
    pub level: NoiseLevel,
    pub gamma_mean: f64,
    /// Fraction of walking frames that receive a spurious detection
    /// (strong level only).
    pub spurious_fraction: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(level: NoiseLevel, gamma_mean: f64, seed: u64) -> NoiseConfig {
        NoiseConfig { level, gamma_mean, spurious_fraction: 0.5, seed }
    }
}

/// Name prefix for injected entities, reserved so scoring can stay
/// unambiguous.
pub const SPURIOUS_ENTITY: &str = "ghost0";

/// Attach noise to a clean narrative. Real fact bodies are never altered,
/// only their probabilities; the strong level additionally appends
/// spurious facts. Deterministic given the seed.
pub fn inject(n: &Narrative, cfg: &NoiseConfig) -> Narrative {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma = Gamma::new(2.0, cfg.gamma_mean / 2.0).expect("positive gamma parameters");
    let mut facts: Vec<ProbFact> = Vec::with_capacity(n.facts().len());
    for f in n.facts() {
        let mut f = f.clone();
        if noised(&f.body, cfg.level) {
            f.prob = (-gamma.sample(&mut rng)).exp();
        }
        facts.push(f);
    }
    if cfg.level == NoiseLevel::Strong {
        let ghost = Entity::new(SPURIOUS_ENTITY);
        let mut spurious = Vec::new();
        for t in 0..=n.horizon().0 {
            let t = crate::model::Timepoint(t);
            let Some((idx, walker)) = n
                .events_at(t, "walking")
                .next()
                .map(|(i, ev, _)| (i, ev.args.first().cloned()))
            else {
                continue;
            };
            if !rng.gen_bool(cfg.spurious_fraction) {
                continue;
            }
            // The spurious detection is as likely as the real one was
            // unlikely: probability 1−p of the noised walking fact.
            let p = 1.0 - facts[idx].prob;
            spurious.push(ProbFact::new(
                FactBody::Happens {
                    event: EventAtom::new("walking", vec![ghost.clone()]),
                    at: t,
                },
                p,
            ));
            if let Some(walker) = walker {
                for (_, fl, _) in n.fluents_at(t, "coord") {
                    if fl.entity_args().next() == Some(&walker) {
                        if let Value::Coord(x, y) = fl.value {
                            spurious.push(ProbFact::new(
                                FactBody::Holds {
                                    fluent: FluentAtom::new(
                                        "coord",
                                        vec![Arg::Entity(ghost.clone())],
                                        Value::Coord(x + 5, y + 5),
                                    ),
                                    at: t,
                                },
                                p,
                            ));
                        }
                    }
                }
                for (_, fl, _) in n.fluents_at(t, "orientation") {
                    if fl.entity_args().next() == Some(&walker) {
                        spurious.push(ProbFact::new(
                            FactBody::Holds {
                                fluent: FluentAtom::new(
                                    "orientation",
                                    vec![Arg::Entity(ghost.clone())],
                                    fl.value.clone(),
                                ),
                                at: t,
                            },
                            p,
                        ));
                    }
                }
            }
        }
        facts.extend(spurious);
    }
    index_narrative(facts).expect("noise preserves fact validity")
}

fn noised(body: &FactBody, level: NoiseLevel) -> bool {
    match body {
        FactBody::Happens { event, .. } => event.is_sta(),
        FactBody::Holds { fluent, .. } => {
            level != NoiseLevel::Smooth
                && (fluent.functor == "coord" || fluent.functor == "orientation")
        }
        FactBody::Initially { .. } => false,
    }
}

/// Keep facts whose probability is strictly above the threshold, reset to
/// crisp; drop the rest.
pub fn filter_for_crisp(n: &Narrative, threshold: f64) -> Narrative {
    let facts: Vec<ProbFact> = n
        .facts()
        .iter()
        .filter(|f| f.prob > threshold)
        .map(|f| ProbFact::crisp(f.body.clone()))
        .collect();
    index_narrative(facts).expect("filtering preserves fact validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact_io::parse_facts;
    use crate::fixtures::walking_noise_narrative;
    use std::collections::BTreeSet;

    fn bodies(n: &Narrative) -> BTreeSet<FactBody> {
        n.facts().iter().map(|f| f.body.clone()).collect()
    }

    #[test]
    fn near_zero_mean_keeps_probabilities_near_one() {
        let n = walking_noise_narrative(200);
        let cfg = NoiseConfig::new(NoiseLevel::Intermediate, 1e-9, 7);
        let noisy = inject(&n, &cfg);
        assert_eq!(bodies(&noisy), bodies(&n));
        for f in noisy.facts() {
            assert!(f.prob > 0.999999, "prob {}", f.prob);
        }
    }

    #[test]
    fn smooth_touches_only_sta() {
        let n = walking_noise_narrative(100);
        let noisy = inject(&n, &NoiseConfig::new(NoiseLevel::Smooth, 4.0, 1));
        for f in noisy.facts() {
            match &f.body {
                FactBody::Happens { .. } => {}
                _ => assert_eq!(f.prob, 1.0),
            }
        }
        assert_eq!(bodies(&noisy), bodies(&n));
    }

    #[test]
    fn deterministic_given_seed() {
        let n = walking_noise_narrative(100);
        let mut cfg = NoiseConfig::new(NoiseLevel::Strong, 3.0, 42);
        cfg.spurious_fraction = 0.7;
        let a = inject(&n, &cfg);
        let b = inject(&n, &cfg);
        assert_eq!(a.facts(), b.facts());
        cfg.seed = 43;
        let c = inject(&n, &cfg);
        assert_ne!(a.facts(), c.facts());
    }

    #[test]
    fn strong_adds_ghost_facts() {
        let n = walking_noise_narrative(100);
        let mut cfg = NoiseConfig::new(NoiseLevel::Strong, 2.0, 5);
        cfg.spurious_fraction = 1.0;
        let noisy = inject(&n, &cfg);
        let ghosts: Vec<&ProbFact> = noisy
            .facts()
            .iter()
            .filter(|f| f.body.entities().iter().any(|e| e.as_str() == SPURIOUS_ENTITY))
            .collect();
        // walking + coord + orientation per walking frame
        assert_eq!(ghosts.len(), 300);
        let real: BTreeSet<FactBody> = noisy
            .facts()
            .iter()
            .filter(|f| !f.body.entities().iter().any(|e| e.as_str() == SPURIOUS_ENTITY))
            .map(|f| f.body.clone())
            .collect();
        assert_eq!(real, bodies(&n));
    }

    #[test]
    fn higher_mean_lowers_confidence() {
        let n = walking_noise_narrative(2000);
        let count_above = |mean: f64| {
            inject(&n, &NoiseConfig::new(NoiseLevel::Smooth, mean, 11))
                .facts()
                .iter()
                .filter(|f| matches!(f.body, FactBody::Happens { .. }) && f.prob > 0.5)
                .count()
        };
        let low = count_above(0.5);
        let high = count_above(8.0);
        assert!(low > 10 * high, "low={low} high={high}");
    }

    #[test]
    fn spurious_confidence_rises_with_mean() {
        let n = walking_noise_narrative(2000);
        let count_ghost_above = |mean: f64| {
            let mut cfg = NoiseConfig::new(NoiseLevel::Strong, mean, 11);
            cfg.spurious_fraction = 1.0;
            inject(&n, &cfg)
                .facts()
                .iter()
                .filter(|f| {
                    matches!(f.body, FactBody::Happens { .. })
                        && f.body.entities().iter().any(|e| e.as_str() == SPURIOUS_ENTITY)
                        && f.prob > 0.5
                })
                .count()
        };
        let low = count_ghost_above(0.5);
        let high = count_ghost_above(8.0);
        assert!(high > 2 * low, "low={low} high={high}");
    }

    #[test]
    fn filter_examples() {
        let facts = parse_facts(
            "0.7::happensAt(walking(a),1).\n\
             0.3::happensAt(walking(a),2).",
        )
        .unwrap();
        let n = index_narrative(facts).unwrap();
        let kept = filter_for_crisp(&n, 0.5);
        assert_eq!(kept.facts().len(), 1);
        assert_eq!(kept.fact(0).prob, 1.0);
        assert_eq!(kept.fact(0).body.timepoint().0, 1);

        let loose = filter_for_crisp(&n, 0.2);
        assert!(bodies(&kept).is_subset(&bodies(&loose)));

        let clean = walking_noise_narrative(10);
        assert_eq!(bodies(&filter_for_crisp(&clean, 0.9)), bodies(&clean));
    }
}
