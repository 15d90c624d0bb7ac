use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use probec_core::bdd::MAX_ENUM_VARS;
use probec_core::eval::{
    aggregate, aggregate_csv, parse_annotation, runs_csv, score, sweep, SweepConfig,
};
use probec_core::noise::{filter_for_crisp, inject, NoiseConfig, NoiseLevel};
use probec_core::prob::ExactEngine;
use probec_core::{
    builtin_activity_rules, crisp_recognize, emit_facts, filter_recognitions, index_narrative,
    parse_facts, parse_rules, recognitions_csv, recognize, substitute_crisp_facts, trace_csv,
    world_enumeration, FluentAtom, Narrative, RuleSet, Timepoint,
};

#[derive(Parser)]
#[command(name = "probec", about = "Activity recognition over probabilistic event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an engine over a fact stream and print a CSV of results
    Recognize(RecognizeArgs),
    /// Attach noise to a clean fact stream
    Noise(NoiseArgs),
    /// Keep facts above a probability threshold, reset to crisp
    Filter(FilterArgs),
    /// Score recognized frames against ground truth
    Eval(EvalArgs),
    /// Multi-seed noise sweep comparing both engines
    Sweep(SweepArgs),
    /// Cross-check the incremental engine against exact inference
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Crisp,
    Prob,
}

#[derive(Args)]
struct RecognizeArgs {
    #[arg(long)]
    facts: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "prob")]
    engine: EngineArg,
    /// With the prob engine: emit recognized frames above this threshold
    /// instead of the raw probability trace
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    facts: PathBuf,
    #[arg(long)]
    level: NoiseLevel,
    #[arg(long)]
    gamma_mean: f64,
    #[arg(long, default_value_t = 0.5)]
    spurious_fraction: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    facts: PathBuf,
    #[arg(long)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Recognized frames, as crisp holdsAt assertions
    #[arg(long)]
    recognized: PathBuf,
    /// Ground truth, as crisp holdsAt assertions
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    facts: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Comma-separated: smooth,intermediate,strong
    #[arg(long, value_delimiter = ',', default_value = "smooth")]
    levels: Vec<NoiseLevel>,
    /// Gamma mean range start:stop:step, or a comma-separated list
    #[arg(long, default_value = "0.5:8.0:0.5")]
    means: String,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    runs: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    spurious_fraction: f64,
    /// Write the per-run CSV here in addition to the aggregated output
    #[arg(long)]
    runs_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    facts: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too; keep
            // those on stdout with a zero exit
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Recognize(a) => cmd_recognize(a),
        Command::Noise(a) => cmd_noise(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn load_narrative(path: &PathBuf) -> Result<Narrative> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let facts = parse_facts(&text).with_context(|| format!("parsing {}", path.display()))?;
    index_narrative(facts).with_context(|| format!("indexing {}", path.display()))
}

fn load_rules(path: Option<&PathBuf>) -> Result<RuleSet> {
    let from_env = std::env::var_os("PROBEC_RULES").map(PathBuf::from);
    let path = path.cloned().or(from_env);
    match path {
        Some(p) => {
            let text =
                fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            parse_rules(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(builtin_activity_rules()),
    }
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_recognize(a: RecognizeArgs) -> Result<ExitCode> {
    let n = load_narrative(&a.facts)?;
    let rules = load_rules(a.rules.as_ref())?;
    let csv = match a.engine {
        EngineArg::Crisp => {
            if !n.is_crisp() {
                bail!(
                    "{} contains non-unit probabilities; the crisp engine requires \
                     a filtered stream (see the filter subcommand)",
                    a.facts.display()
                );
            }
            let rec: BTreeMap<FluentAtom, BTreeSet<Timepoint>> =
                crisp_recognize(&rules, &n).into_iter().collect();
            recognitions_csv(&rec)
        }
        EngineArg::Prob => {
            let traces = recognize(&rules, &n);
            match a.threshold {
                None => trace_csv(&traces),
                Some(th) => {
                    let rec: BTreeMap<FluentAtom, BTreeSet<Timepoint>> = traces
                        .iter()
                        .map(|(f, tr)| (f.clone(), filter_recognitions(tr, th)))
                        .collect();
                    recognitions_csv(&rec)
                }
            }
        }
    };
    write_output(a.out.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_noise(a: NoiseArgs) -> Result<ExitCode> {
    let n = load_narrative(&a.facts)?;
    if !(0.0..=1.0).contains(&a.spurious_fraction) {
        bail!("--spurious-fraction must be in [0,1]");
    }
    if a.gamma_mean <= 0.0 {
        bail!("--gamma-mean must be positive");
    }
    let mut cfg = NoiseConfig::new(a.level, a.gamma_mean, a.seed);
    cfg.spurious_fraction = a.spurious_fraction;
    let noisy = inject(&n, &cfg);
    write_output(a.out.as_ref(), &emit_facts(noisy.facts()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_filter(a: FilterArgs) -> Result<ExitCode> {
    let n = load_narrative(&a.facts)?;
    let kept = filter_for_crisp(&n, a.threshold);
    write_output(a.out.as_ref(), &emit_facts(kept.facts()))?;
    Ok(ExitCode::SUCCESS)
}

fn load_annotation(path: &PathBuf) -> Result<BTreeSet<(FluentAtom, u64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_annotation(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    let recognized = load_annotation(&a.recognized)?;
    let truth = load_annotation(&a.truth)?;
    let m = score(&recognized, &truth);
    let csv = format!(
        "tp,fp,fn,precision,recall,fmeasure\n{},{},{},{:.6},{:.6},{:.6}\n",
        m.tp, m.fp, m.fn_, m.precision, m.recall, m.fmeasure
    );
    write_output(a.out.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_means(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("--means range must be start:stop:step");
        }
        let start: f64 = parts[0].parse().context("--means start")?;
        let stop: f64 = parts[1].parse().context("--means stop")?;
        let step: f64 = parts[2].parse().context("--means step")?;
        if step <= 0.0 || stop < start {
            bail!("--means range must be increasing with a positive step");
        }
        let count = ((stop - start) / step).round() as u64;
        return Ok((0..=count)
            .map(|i| start + i as f64 * step)
            .filter(|m| *m <= stop + 1e-9)
            .collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad gamma mean '{s}'")))
        .collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let clean = load_narrative(&a.facts)?;
    let truth = load_annotation(&a.truth)?;
    let rules = load_rules(a.rules.as_ref())?;
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let cfg = SweepConfig {
        levels: a.levels.clone(),
        gamma_means: parse_means(&a.means)?,
        thresholds: a.thresholds.clone(),
        runs: a.runs,
        master_seed: a.seed,
        spurious_fraction: a.spurious_fraction,
    };
    let results = sweep(&clean, &truth, &rules, &cfg);
    if let Some(p) = &a.runs_out {
        fs::write(p, runs_csv(&results)).with_context(|| format!("writing {}", p.display()))?;
    }
    write_output(a.out.as_ref(), &aggregate_csv(&aggregate(&results)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: ValidateArgs) -> Result<ExitCode> {
    let n = load_narrative(&a.facts)?;
    let rules = load_rules(a.rules.as_ref())?;
    let traces = recognize(&rules, &n);
    let mut exact = ExactEngine::new(&rules, &n);
    let mut checked = 0u64;
    let mut enumerated = 0u64;
    for (f, trace) in &traces {
        for (t, &p_inc) in trace.iter().enumerate() {
            let t = Timepoint(t as u64);
            let p_bdd = exact.probability(f, t);
            if (p_inc - p_bdd).abs() >= a.tolerance {
                eprintln!(
                    "mismatch: {f} at {t}: incremental {p_inc}, exact bdd {p_bdd}"
                );
                return Ok(ExitCode::from(2));
            }
            let formula = substitute_crisp_facts(&exact.formula(f, t), &n);
            if formula.vars().len() <= MAX_ENUM_VARS {
                let p_enum = world_enumeration(&formula, |i| n.fact(*i).prob)
                    .expect("variable count checked");
                if (p_bdd - p_enum).abs() >= a.tolerance {
                    eprintln!(
                        "mismatch: {f} at {t}: exact bdd {p_bdd}, enumeration {p_enum}"
                    );
                    return Ok(ExitCode::from(2));
                }
                enumerated += 1;
            }
            checked += 1;
        }
    }
    println!(
        "ok: {checked} (fluent, frame) queries agree within {} ({enumerated} also \
         checked by world enumeration)",
        a.tolerance
    );
    Ok(ExitCode::SUCCESS)
}
