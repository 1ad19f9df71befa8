//! `rtforge`: translate task models to IMITATOR, check schedulability,
//! sweep parameter grids and replay traces.
//!
//! Exit codes: 0 success, 1 invalid model / valuation / region mismatch,
//! 2 I/O or parse error, 3 deadline miss or rejected trace, 4 inconclusive.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rtforge::emit::{emit_imitator, DEFAULT_TARGET};
use rtforge::engine::{self, CheckOptions, TimedTrace, VerdictKind, DEFAULT_STATE_LIMIT};
use rtforge::ingest::{self, MappingConfig, SourceDocument};
use rtforge::model::{self, RtModel, ValidatedModel};
use rtforge::rational::format_decimal;
use rtforge::report;
use rtforge::sweep::{self, Axis, ConstraintSet, ParameterGrid, PointVerdict, SweepOptions, DEFAULT_GRID_CAP};
use rtforge::translate::{self, Overrun, SporadicRelease, TranslateOptions, Translation};
use rtforge::{parse_rational, Valuation};
use serde_json::json;

use config::FileConfig;

#[derive(Parser, Debug)]
#[command(name = "rtforge", version, about = "Schedulability analysis of real-time task models via stopwatch automata")]
struct Cli {
    /// Defaults for state limit, quantum, jobs, grid cap, IMITATOR version
    /// and Time4sys mapping (TOML, or JSON by extension).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit the automata network in IMITATOR syntax.
    Translate(TranslateArgs),
    /// Check one valuation for deadline misses.
    Check(CheckArgs),
    /// Check every point of a parameter grid.
    Sweep(SweepArgs),
    /// Replay a timed script and draw its chronogram.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Native,
    Time4sys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Release {
    AtOffset,
    FromOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OverrunArg {
    All,
    WithDeadline,
    Off,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model file.
    input: PathBuf,
    /// Input format; guessed from the extension when omitted
    /// (.xml/.xmi/.time4sys are Time4sys).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Element/attribute mapping for Time4sys input (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    mapping: Option<PathBuf>,
    /// When a sporadic task may first be activated.
    #[arg(long, value_enum, default_value = "from-offset")]
    sporadic_release: Release,
    /// Which tasks report a new activation while still pending as a miss.
    #[arg(long, value_enum, default_value = "all")]
    overrun: OverrunArg,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output file (stdout when omitted).
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Turn every constant into a named parameter.
    #[arg(long)]
    parametric: bool,
    /// IMITATOR version to target.
    #[arg(long, value_name = "VERSION")]
    imitator_version: Option<String>,
    /// Print a JSON summary instead of the model.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Grid steps per model time unit.
    #[arg(long)]
    quantum: Option<i64>,
    /// Give up after this many states (also RTFORGE_STATE_LIMIT).
    #[arg(long)]
    state_limit: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Parameter value, e.g. T5Deadline=11 or T1WCET=9/2.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the witness of a miss as JSON.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Draw the witness of a miss as SVG.
    #[arg(long, value_name = "FILE")]
    gantt: Option<PathBuf>,
    /// Machine-readable result on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Swept parameter, name=lo:hi[:step] (step defaults to 1).
    #[arg(long, value_name = "AXIS")]
    free: Vec<String>,
    /// Fixed parameter value, name=value.
    #[arg(long, value_name = "NAME=VALUE")]
    fixed: Vec<String>,
    /// Expected region as JSON DNF: {"dnf": [["4 <= T1WCET <= 6", ...], ...]}.
    #[arg(long, value_name = "FILE")]
    expect: Option<PathBuf>,
    /// Cartography of two parameters as SVG.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Plotted parameters X,Y (default: the first two swept ones).
    #[arg(long, value_name = "X,Y")]
    axes: Option<String>,
    /// Region as JSON: to FILE when given, else on stdout.
    #[arg(long, value_name = "FILE", num_args = 0..=1)]
    json: Option<Option<PathBuf>>,
    /// Region as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Worker threads (default: all logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
    /// Refuse grids with more points.
    #[arg(long)]
    grid_cap: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// JSON array of [time, action] pairs; action may be null.
    #[arg(long, value_name = "FILE")]
    script: PathBuf,
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Chronogram as SVG.
    #[arg(long, value_name = "FILE")]
    gantt: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome = Result<u8, Failure>;

trait ExitWith<T> {
    fn exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn fail<T>(code: u8, error: anyhow::Error) -> Result<T, Failure> {
    Err(Failure { code, error })
}

const INVALID: u8 = 1;
const IO: u8 = 2;
const MISS: u8 = 3;
const INCONCLUSIVE: u8 = 4;

struct Ctx {
    file: FileConfig,
}

impl Ctx {
    fn check_options(&self, e: &EngineArgs) -> Result<CheckOptions, Failure> {
        let env = std::env::var(config::STATE_LIMIT_ENV).ok();
        let state_limit =
            config::state_limit(e.state_limit, env.as_deref(), &self.file, DEFAULT_STATE_LIMIT).exit(IO)?;
        let quantum = e.quantum.or(self.file.quantum).unwrap_or(1);
        Ok(CheckOptions { quantum, state_limit, ..Default::default() })
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).exit(IO)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).exit(IO)
}

fn load_model(args: &ModelArgs, ctx: &Ctx) -> Result<ValidatedModel, Failure> {
    let text = read_file(&args.input)?;
    let origin = args.input.display().to_string();
    let guessed = match args.input.extension().and_then(|e| e.to_str()) {
        Some("xml" | "xmi" | "time4sys") => Format::Time4sys,
        _ => Format::Native,
    };
    let model: RtModel = match args.format.unwrap_or(guessed) {
        Format::Native => ingest::parse_native(&SourceDocument::native(text, origin)).exit(IO)?,
        Format::Time4sys => {
            let mapping_path = args.mapping.clone().or_else(|| ctx.file.mapping.as_ref().map(PathBuf::from));
            let mapping = match mapping_path {
                None => MappingConfig::provisional(),
                Some(p) => {
                    let t = read_file(&p)?;
                    let m = if p.extension().is_some_and(|e| e == "json") {
                        MappingConfig::from_json(&t)
                    } else {
                        MappingConfig::from_toml(&t)
                    };
                    m.exit(IO)?
                }
            };
            let import = ingest::parse_time4sys_xmi(&SourceDocument::xmi(text, origin), &mapping).exit(IO)?;
            for w in &import.warnings {
                eprintln!("warning: {w}");
            }
            import.model
        }
    };
    match model::validate(model) {
        Ok(m) => Ok(m),
        Err(errs) => {
            for d in &errs.0 {
                eprintln!("error: {d}");
            }
            fail(INVALID, anyhow!("{} validation error(s)", errs.0.len()))
        }
    }
}

fn translate_options(args: &ModelArgs) -> TranslateOptions {
    TranslateOptions {
        sporadic_release: match args.sporadic_release {
            Release::AtOffset => SporadicRelease::AtOffset,
            Release::FromOffset => SporadicRelease::FromOffset,
        },
        overrun_detection: match args.overrun {
            OverrunArg::All => Overrun::All,
            OverrunArg::WithDeadline => Overrun::WithDeadline,
            OverrunArg::Off => Overrun::Off,
        },
    }
}

/// Translation with every constant lifted to a parameter, and the values
/// those parameters had.
fn lifted(m: &ValidatedModel, args: &ModelArgs) -> Result<(Translation, Valuation), Failure> {
    let (model, nominal) = translate::lift_parameters(m);
    let model = model::validate(model).map_err(|e| anyhow!("{e}")).exit(INVALID)?;
    Ok((translate::compile(&model, &translate_options(args)), nominal))
}

fn known_params(tr: &Translation) -> Vec<&str> {
    tr.network.params.iter().map(|p| p.name.as_str()).collect()
}

fn resolve<'a>(tr: &'a Translation, name: &str) -> Result<&'a str, Failure> {
    translate::resolve_param(name, known_params(tr)).ok_or_else(|| Failure {
        code: INVALID,
        error: anyhow!("UNKNOWN_PARAMETER: {name} (known: {})", known_params(tr).join(", ")),
    })
}

fn apply_assignments(tr: &Translation, v: &mut Valuation, pairs: &[String]) -> Result<(), Failure> {
    for pair in pairs {
        let (name, value) =
            pair.split_once('=').ok_or_else(|| anyhow!("expected NAME=VALUE, got `{pair}`")).exit(INVALID)?;
        let name = resolve(tr, name.trim())?;
        let value = parse_rational(value).exit(INVALID)?;
        v.insert(name.to_string(), value);
    }
    Ok(())
}

fn valuation_ok(tr: &Translation, v: &Valuation) -> Result<(), Failure> {
    if let Some(p) = tr.network.params.iter().find(|p| !v.contains_key(&p.name)) {
        return fail(INVALID, anyhow!("MISSING_VALUATION: no value for parameter {}", p.name));
    }
    if let Some(why) = sweep::infeasibility(tr, v) {
        return fail(INVALID, anyhow!("INFEASIBLE: {why}"));
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn cmd_translate(a: &TranslateArgs, ctx: &Ctx) -> Outcome {
    let m = load_model(&a.model, ctx)?;
    let tr = if a.parametric { lifted(&m, &a.model)?.0 } else { translate::compile(&m, &translate_options(&a.model)) };
    let version = a.imitator_version.as_deref().or(ctx.file.imitator_version.as_deref()).unwrap_or(DEFAULT_TARGET);
    let text = emit_imitator(&tr.network, version).exit(INVALID)?;
    match &a.output {
        Some(p) => write_file(p, &text)?,
        None if !a.json => {
            print!("{text}");
        }
        None => {}
    }
    if a.json {
        print_json(&json!({
            "automata": tr.network.automata.len(),
            "clocks": tr.network.clocks.len(),
            "actions": tr.network.actions.len(),
            "parameters": known_params(&tr),
            "output": a.output.as_ref().map(|p| p.display().to_string()),
        }));
    }
    Ok(0)
}

fn annotated(tr: &Translation, v: &Valuation, trace: &TimedTrace) -> TimedTrace {
    let mut t = trace.clone();
    // The witness comes from the same network, so replay cannot fail.
    let _ = engine::annotate(tr, v, &mut t);
    t
}

fn cmd_check(a: &CheckArgs, ctx: &Ctx) -> Outcome {
    let m = load_model(&a.model, ctx)?;
    let (tr, mut v) = lifted(&m, &a.model)?;
    apply_assignments(&tr, &mut v, &a.set)?;
    valuation_ok(&tr, &v)?;
    let opts = ctx.check_options(&a.engine)?;
    let verdict = engine::check_with(&tr.network, &v, &opts).exit(INVALID)?;
    let trace = verdict.trace().map(|t| annotated(&tr, &v, t));
    if let Some(t) = &trace {
        if let Some(p) = &a.trace {
            write_file(p, &serde_json::to_string_pretty(&report::trace_json(t)).expect("serializes"))?;
        }
        if let Some(p) = &a.gantt {
            write_file(p, &report::gantt_to_svg(t))?;
        }
    }
    if a.json {
        let mut out = report::verdict_json(&verdict);
        if let Some(t) = &trace {
            out["trace"] = report::trace_json(t);
        }
        print_json(&out);
    }
    Ok(match &verdict.kind {
        VerdictKind::Schedulable => {
            if !a.json {
                println!("SCHEDULABLE ({} states)", verdict.states_explored);
            }
            0
        }
        VerdictKind::DeadlineMiss { .. } => {
            if !a.json {
                let what = trace.as_ref().and_then(|t| t.miss.as_ref()).map_or(String::new(), |m| {
                    format!(": {} on {} misses at t = {}", m.task, m.processor, format_decimal(&m.marker))
                });
                println!("DEADLINE-MISS{what} ({} states)", verdict.states_explored);
            }
            MISS
        }
        VerdictKind::Inconclusive { reason } => {
            if !a.json {
                println!("INCONCLUSIVE: {reason}");
            }
            INCONCLUSIVE
        }
    })
}

fn cmd_sweep(a: &SweepArgs, ctx: &Ctx) -> Outcome {
    let m = load_model(&a.model, ctx)?;
    let (tr, mut fixed) = lifted(&m, &a.model)?;
    apply_assignments(&tr, &mut fixed, &a.fixed)?;
    let mut axes = Vec::new();
    for spec in &a.free {
        let mut axis = Axis::parse(spec).exit(INVALID)?;
        axis.param = resolve(&tr, &axis.param)?.to_string();
        axes.push(axis);
    }
    let grid = ParameterGrid::new(axes).exit(INVALID)?;
    let opts = SweepOptions {
        check: ctx.check_options(&a.engine)?,
        jobs: a.jobs.or(ctx.file.jobs),
        cap: a.grid_cap.or(ctx.file.grid_cap).unwrap_or(DEFAULT_GRID_CAP),
    };
    let region = sweep::sweep(&tr, &grid, &fixed, &opts).exit(INVALID)?;
    let mismatches = match &a.expect {
        None => None,
        Some(p) => {
            let cs = ConstraintSet::from_json(&read_file(p)?).map_err(|e| anyhow!("{}: {e}", p.display())).exit(IO)?;
            for name in cs.params() {
                resolve(&tr, &name)?;
            }
            Some(sweep::compare_region(&region, &cs))
        }
    };
    let json = report::sweep_json(&region, mismatches.as_deref());
    if let Some(p) = &a.svg {
        let params = grid.params();
        let (x, y) = match &a.axes {
            Some(spec) => {
                let (x, y) = spec.split_once(',').ok_or_else(|| anyhow!("--axes expects X,Y")).exit(INVALID)?;
                (resolve(&tr, x.trim())?.to_string(), resolve(&tr, y.trim())?.to_string())
            }
            None => match params.as_slice() {
                [x, y, ..] => (x.to_string(), y.to_string()),
                [x] => {
                    let y = fixed.keys().find(|k| k != x).cloned().unwrap_or_default();
                    (x.to_string(), y)
                }
                [] => return fail(INVALID, anyhow!("--svg needs at least one swept parameter")),
            },
        };
        write_file(p, &report::region_to_svg(&region, &x, &y).exit(INVALID)?)?;
    }
    if let Some(p) = &a.csv {
        write_file(p, &region.to_csv())?;
    }
    match &a.json {
        Some(Some(p)) => write_file(p, &serde_json::to_string_pretty(&json).expect("serializes"))?,
        Some(None) => print_json(&json),
        None => {}
    }
    if !matches!(a.json, Some(None)) {
        let counts: Vec<String> = [
            PointVerdict::Schedulable,
            PointVerdict::DeadlineMiss,
            PointVerdict::Infeasible,
            PointVerdict::Inconclusive,
        ]
        .iter()
        .map(|v| format!("{} {v}", region.count(*v)))
        .collect();
        println!("{} points: {}", region.points.len(), counts.join(", "));
        if let Some(ms) = &mismatches {
            println!("{} mismatches", ms.len());
            let names = grid.params();
            for mm in ms.iter().take(20) {
                let vals: Vec<String> =
                    names.iter().zip(&mm.values).map(|(n, v)| format!("{n}={}", format_decimal(v))).collect();
                let expected = if mm.expected_schedulable { "SCHEDULABLE" } else { "DEADLINE_MISS" };
                println!("  {}: got {}, expected {expected}", vals.join(" "), mm.verdict);
            }
        }
    }
    Ok(if mismatches.is_some_and(|m| !m.is_empty()) { INVALID } else { 0 })
}

fn cmd_trace(a: &TraceArgs, ctx: &Ctx) -> Outcome {
    let m = load_model(&a.model, ctx)?;
    let (tr, mut v) = lifted(&m, &a.model)?;
    apply_assignments(&tr, &mut v, &a.set)?;
    valuation_ok(&tr, &v)?;
    let text = read_file(&a.script)?;
    let events = engine::parse_script(&text).map_err(|e| anyhow!("{}: {e}", a.script.display())).exit(IO)?;
    let mut trace = TimedTrace::from_events(events);
    let check = engine::annotate(&tr, &v, &mut trace).exit(INVALID)?;
    if let Some(p) = &a.gantt {
        write_file(p, &report::gantt_to_svg(&trace))?;
    }
    if a.json {
        print_json(&report::trace_check_json(&check, &trace));
    } else if let Some(r) = &check.rejection {
        println!("REJECTED at step {}: {r}", r.index);
    } else {
        let miss = trace.miss.as_ref().map_or(String::new(), |m| {
            format!(", {} on {} misses at t = {}", m.task, m.processor, format_decimal(&m.marker))
        });
        println!("ACCEPTED ({} events{miss})", trace.events.len());
    }
    Ok(if check.accepted { 0 } else { MISS })
}

fn run(cli: &Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).exit(IO)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx { file };
    match &cli.command {
        Command::Translate(a) => cmd_translate(a, &ctx),
        Command::Check(a) => cmd_check(a, &ctx),
        Command::Sweep(a) => cmd_sweep(a, &ctx),
        Command::Trace(a) => cmd_trace(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
