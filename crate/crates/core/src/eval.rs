//! Scoring of recognitions against ground truth, and multi-seed noise
//! sweeps comparing the crisp engine on filtered input against the
//! probabilistic engine on the raw noisy stream.

use std::collections::{BTreeMap, BTreeSet};

use crate::fact_io::{parse_facts, FactParseError};
use crate::model::{Arg, FactBody, FluentAtom, Narrative, Timepoint};
use crate::noise::{filter_for_crisp, inject, NoiseConfig, NoiseLevel};
use crate::prob::{filter_recognitions, recognize};
use crate::rule_dsl::RuleSet;

/// Frame-level counts and derived ratios. Zero denominators give zero
/// ratios rather than NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
}

pub fn metrics_from_counts(tp: u64, fp: u64, fn_: u64) -> Metrics {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let fmeasure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics { tp, fp, fn_, precision, recall, fmeasure }
}

/// Activities symmetric in their two entity arguments; recognitions and
/// truth are compared on the unordered pair.
pub const SYMMETRIC_FUNCTORS: [&str; 3] = ["meeting", "moving", "fighting"];

/// Sort the entity arguments of symmetric activities so that
/// `moving(b,a)` and `moving(a,b)` score as the same atom.
pub fn canonical(f: &FluentAtom) -> FluentAtom {
    if !SYMMETRIC_FUNCTORS.contains(&f.functor.as_str()) {
        return f.clone();
    }
    let mut args = f.args.clone();
    args.sort_by(|a, b| match (a, b) {
        (Arg::Entity(x), Arg::Entity(y)) => x.as_str().cmp(y.as_str()),
        _ => std::cmp::Ordering::Equal,
    });
    FluentAtom::new(f.functor.as_str(), args, f.value.clone())
}

fn canonical_set(s: &BTreeSet<(FluentAtom, u64)>) -> BTreeSet<(FluentAtom, u64)> {
    s.iter().map(|(f, t)| (canonical(f), *t)).collect()
}

/// Frame-level scoring: tp counts (atom, frame) pairs present on both
/// sides, after canonicalizing symmetric pairs.
pub fn score(
    recognized: &BTreeSet<(FluentAtom, u64)>,
    truth: &BTreeSet<(FluentAtom, u64)>,
) -> Metrics {
    let rec = canonical_set(recognized);
    let truth = canonical_set(truth);
    let tp = rec.intersection(&truth).count() as u64;
    let fp = rec.len() as u64 - tp;
    let fn_ = truth.len() as u64 - tp;
    metrics_from_counts(tp, fp, fn_)
}

/// Flatten a recognition map to scored pairs, keeping only functors that
/// appear in the truth set (auxiliary activities like `person` would
/// otherwise count as spurious).
pub fn recognized_pairs(
    rec: &BTreeMap<FluentAtom, BTreeSet<Timepoint>>,
    truth: &BTreeSet<(FluentAtom, u64)>,
) -> BTreeSet<(FluentAtom, u64)> {
    let functors: BTreeSet<&str> = truth.iter().map(|(f, _)| f.functor.as_str()).collect();
    let mut out = BTreeSet::new();
    for (f, frames) in rec {
        if functors.contains(f.functor.as_str()) {
            for t in frames {
                out.insert((f.clone(), t.0));
            }
        }
    }
    out
}

/// Ground truth read from annotation text: crisp `holdsAt` lines in the
/// fact syntax.
pub fn parse_annotation(text: &str) -> Result<BTreeSet<(FluentAtom, u64)>, FactParseError> {
    let facts = parse_facts(text)?;
    let mut out = BTreeSet::new();
    for (i, f) in facts.iter().enumerate() {
        match &f.body {
            FactBody::Holds { fluent, at } if f.prob == 1.0 => {
                out.insert((fluent.clone(), at.0));
            }
            _ => {
                return Err(FactParseError::Parse {
                    line: i + 1,
                    col: 1,
                    reason: "annotation lines must be crisp holdsAt facts".into(),
                })
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Crisp,
    Prob,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Crisp => "crisp",
            Engine::Prob => "prob",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub levels: Vec<NoiseLevel>,
    pub gamma_means: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub runs: u32,
    pub master_seed: u64,
    pub spurious_fraction: f64,
}

impl SweepConfig {
    /// The evaluation protocol the figures follow: gamma mean 0.5 to 8.0
    /// in steps of 0.5, thresholds 0.3/0.5/0.7, 5 runs per point.
    pub fn standard(levels: Vec<NoiseLevel>, master_seed: u64) -> SweepConfig {
        SweepConfig {
            levels,
            gamma_means: (1..=16).map(|i| i as f64 * 0.5).collect(),
            thresholds: vec![0.3, 0.5, 0.7],
            runs: 5,
            master_seed,
            spurious_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub engine: Engine,
    pub level: NoiseLevel,
    pub gamma_mean: f64,
    pub threshold: f64,
    pub run: u32,
    pub metrics: Metrics,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-run noise seed, derived from the master seed so that the whole
/// sweep is reproducible and distinct points are decorrelated.
pub fn run_seed(master: u64, level: NoiseLevel, gamma_mean: f64, run: u32) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ level.name().len() as u64 ^ (level as u64) << 8);
    s = splitmix64(s ^ gamma_mean.to_bits());
    splitmix64(s ^ run as u64)
}

/// Run both engines over every (level, gamma mean, run, threshold) point.
/// Noise is injected once per (level, mean, run) and shared across
/// thresholds, mirroring how a fixed noisy dataset is thresholded.
pub fn sweep(
    clean: &Narrative,
    truth: &BTreeSet<(FluentAtom, u64)>,
    rules: &RuleSet,
    cfg: &SweepConfig,
) -> Vec<RunResult> {
    let mut out = Vec::new();
    for &level in &cfg.levels {
        for &mean in &cfg.gamma_means {
            for run in 0..cfg.runs {
                let mut ncfg =
                    NoiseConfig::new(level, mean, run_seed(cfg.master_seed, level, mean, run));
                ncfg.spurious_fraction = cfg.spurious_fraction;
                let noisy = inject(clean, &ncfg);
                let prob_rec = recognize(rules, &noisy);
                for &threshold in &cfg.thresholds {
                    let kept: BTreeMap<FluentAtom, BTreeSet<Timepoint>> = prob_rec
                        .iter()
                        .map(|(f, trace)| (f.clone(), filter_recognitions(trace, threshold)))
                        .collect();
                    out.push(RunResult {
                        engine: Engine::Prob,
                        level,
                        gamma_mean: mean,
                        threshold,
                        run,
                        metrics: score(&recognized_pairs(&kept, truth), truth),
                    });
                    let filtered = filter_for_crisp(&noisy, threshold);
                    let crisp_rec = crate::crisp::crisp_recognize(rules, &filtered)
                        .into_iter()
                        .collect();
                    out.push(RunResult {
                        engine: Engine::Crisp,
                        level,
                        gamma_mean: mean,
                        threshold,
                        run,
                        metrics: score(&recognized_pairs(&crisp_rec, truth), truth),
                    });
                }
            }
        }
    }
    out
}

pub fn runs_csv(results: &[RunResult]) -> String {
    let mut s =
        String::from("engine,level,gamma_mean,threshold,run,tp,fp,fn,precision,recall,fmeasure\n");
    for r in results {
        let m = &r.metrics;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6}\n",
            r.engine.name(),
            r.level.name(),
            r.gamma_mean,
            r.threshold,
            r.run,
            m.tp,
            m.fp,
            m.fn_,
            m.precision,
            m.recall,
            m.fmeasure
        ));
    }
    s
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub engine: Engine,
    pub level: NoiseLevel,
    pub gamma_mean: f64,
    pub threshold: f64,
    pub runs: u32,
    pub mean_fmeasure: f64,
    pub stddev_fmeasure: f64,
}

/// Mean and (population) standard deviation of F-measure per sweep point.
pub fn aggregate(results: &[RunResult]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, usize, u64, u64), Vec<f64>> = BTreeMap::new();
    let mut meta: BTreeMap<(usize, usize, u64, u64), (Engine, NoiseLevel, f64, f64)> =
        BTreeMap::new();
    for r in results {
        let key = (
            r.engine as usize,
            r.level as usize,
            r.gamma_mean.to_bits(),
            r.threshold.to_bits(),
        );
        groups.entry(key).or_default().push(r.metrics.fmeasure);
        meta.entry(key)
            .or_insert((r.engine, r.level, r.gamma_mean, r.threshold));
    }
    groups
        .into_iter()
        .map(|(key, vals)| {
            let (engine, level, gamma_mean, threshold) = meta[&key];
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            AggregateRow {
                engine,
                level,
                gamma_mean,
                threshold,
                runs: vals.len() as u32,
                mean_fmeasure: mean,
                stddev_fmeasure: var.sqrt(),
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s =
        String::from("engine,level,gamma_mean,threshold,runs,mean_fmeasure,stddev_fmeasure\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6}\n",
            r.engine.name(),
            r.level.name(),
            r.gamma_mean,
            r.threshold,
            r.runs,
            r.mean_fmeasure,
            r.stddev_fmeasure
        ));
    }
    s
}
