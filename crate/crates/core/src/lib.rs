//! Crisp and probabilistic Event Calculus engines for long-term activity
//! recognition over probabilistic short-term activity streams.

pub mod bdd;
pub mod crisp;
pub mod eval;
pub mod fact_io;
pub mod fixtures;
pub mod grounding;
pub mod model;
pub mod noise;
pub mod prob;
pub mod rule_dsl;
pub mod spatial;

pub use bdd::{world_enumeration, BddError, BddManager, Formula, NodeId};
pub use crisp::{crisp_holds_stream, crisp_initiated, crisp_recognize, CrispState};
pub use eval::{
    aggregate, aggregate_csv, canonical, metrics_from_counts, parse_annotation, recognized_pairs,
    runs_csv, score, sweep, AggregateRow, Engine, Metrics, RunResult, SweepConfig,
};
pub use grounding::{EngineAtom, Grounder};
pub use fact_io::{emit_facts, parse_facts, FactParseError};
pub use noise::{filter_for_crisp, inject, NoiseConfig, NoiseLevel, SPURIOUS_ENTITY};
pub use model::{
    index_narrative, Arg, Entity, EventAtom, FactBody, FluentAtom, Narrative, NarrativeError,
    ProbFact, Timepoint, Value,
};
pub use prob::{
    exact_holds_formula, filter_recognitions, negate1, negate2, recognize, recognize_exact_bdd,
    recognitions_csv, step, substitute_crisp_facts, trace_csv, ExactEngine, RecognitionTrace,
};
pub use rule_dsl::{builtin_activity_rules, parse_rules, Rule, RuleError, RuleSet};
pub use spatial::{close_prob, distance, orientation_diff, CloseQuery};
