//! Command-line front end: `run`, `check`, `engine-eval` and `bench`.
//!
//! Results go to the output stream (or `--out`), diagnostics to the error
//! stream. Exit codes: 0 success, 1 usage or I/O error, 2 runtime error,
//! 3 static diagnostics, 4 step budget exhausted.

use crate::analysis;
use crate::bench::{self, BenchName, BenchReport, BenchSpec};
use crate::desugar::desugar_all;
use crate::engine::{self, EngineInput, Strategy};
use crate::rules::{classify, classify_rules, explain};
use crate::runtime::{Machine, Mode, Options, RunError, DEFAULT_STEP_BUDGET};
use crate::syntax::{parse_facts, parse_program, print_program, Diagnostic, PredRef, Program};
use crate::value::{format_row, Relation};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_STATIC: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "rulelang", version, about = "Run programs that combine objects, sets and Datalog rule sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program and dump global variables.
    Run(RunArgs),
    /// Parse, desugar and statically check a program.
    Check(CheckArgs),
    /// Evaluate the rules of a program over a fact file.
    EngineEval(EngineArgs),
    /// Run benchmarks on generated inputs.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    program: PathBuf,
    /// Fact file; repeatable.
    #[arg(long = "facts", value_name = "FILE")]
    facts: Vec<PathBuf>,
    /// Bind fact relation NAME to global PRED; repeatable. Without any
    /// --bind every fact relation is bound to the global of the same name.
    #[arg(long = "bind", value_name = "PRED=NAME", value_parser = parse_bind)]
    bind: Vec<(String, String)>,
    #[arg(long, value_enum, default_value_t = CliMode::NoAlias)]
    mode: CliMode,
    /// Global to print after the run; repeatable.
    #[arg(long = "dump", value_name = "NAME")]
    dump: Vec<String>,
    #[arg(long = "step-budget", value_name = "N", default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
    /// Print the desugared program instead of running it.
    #[arg(long = "emit-core")]
    emit_core: bool,
    /// Write dumps to FILE instead of the output stream.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    program: PathBuf,
    #[arg(long, value_enum, default_value_t = CliMode::NoAlias)]
    mode: CliMode,
    /// List every update site with its classification.
    #[arg(long = "explain-updates")]
    explain_updates: bool,
    /// Print classification, dependencies and strata of rule set NAME; repeatable.
    #[arg(long = "explain-rules", value_name = "NAME")]
    explain_rules: Vec<String>,
    /// Print the desugared program.
    #[arg(long = "emit-core")]
    emit_core: bool,
}

#[derive(Args, Debug)]
struct EngineArgs {
    rules: PathBuf,
    facts: PathBuf,
    /// Predicate to print.
    #[arg(long, value_name = "PRED")]
    query: String,
    /// Rule set to evaluate; required when the file declares more than one.
    #[arg(long = "ruleset", value_name = "NAME")]
    ruleset: Option<String>,
    #[arg(long, value_enum, default_value_t = CliStrategy::Auto)]
    strategy: CliStrategy,
    /// Print undefined atoms (well-founded evaluation) instead of true ones.
    #[arg(long)]
    undefined: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Benchmark names, or `all`.
    #[arg(required = true, value_name = "NAME")]
    names: Vec<String>,
    /// Input override `key=value`; repeatable.
    #[arg(long = "spec", value_name = "KEY=VALUE")]
    spec: Vec<String>,
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    repeat: u32,
    /// Write a tab-separated summary to FILE.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Run the named benchmarks concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliMode {
    NoAlias,
    AliasChecked,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::NoAlias => Mode::NoAlias,
            CliMode::AliasChecked => Mode::AliasChecked,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliStrategy {
    Naive,
    Seminaive,
    Wellfounded,
    Auto,
}

impl From<CliStrategy> for Strategy {
    fn from(s: CliStrategy) -> Strategy {
        match s {
            CliStrategy::Naive => Strategy::Naive,
            CliStrategy::Seminaive => Strategy::SemiNaive,
            CliStrategy::Wellfounded => Strategy::WellFounded,
            CliStrategy::Auto => Strategy::Auto,
        }
    }
}

fn parse_bind(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((p, n)) if !p.is_empty() && !n.is_empty() => Ok((p.to_string(), n.to_string())),
        _ => Err(format!("expected PRED=NAME, got `{s}`")),
    }
}

/// A command outcome: exit code, with a message for the error stream.
struct Fail(i32, String);

type Res = Result<(), Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn diags(path: &Path, ds: &[Diagnostic]) -> Fail {
    Fail(EXIT_STATIC, ds.iter().map(|d| format!("{}:{d}\n", path.display())).collect())
}

fn run_error(path: &Path, e: RunError) -> Fail {
    match e {
        RunError::StepBudget(_) => Fail(EXIT_BUDGET, format!("{}: error[step-budget]: {e}\n", path.display())),
        RunError::Runtime(_) => Fail(EXIT_RUNTIME, format!("{}:{e}\n", path.display())),
    }
}

fn load(path: &Path) -> Result<Program, Fail> {
    let src = read(path)?;
    let prog = parse_program(&src).map_err(|d| diags(path, &d))?;
    Ok(desugar_all(prog))
}

fn write_out(out: &mut dyn Write, text: &str) -> Res {
    out.write_all(text.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}")))
}

/// Runs the command line `args` (program name first), writing results to `out`
/// and diagnostics to `err`. Returns the exit code.
pub fn main_with(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            } else {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            };
        }
    };
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::EngineEval(a) => cmd_engine(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
    };
    let _ = out.flush();
    match res {
        Ok(()) => EXIT_OK,
        Err(Fail(code, msg)) => {
            let _ = err.write_all(msg.as_bytes());
            if !msg.ends_with('\n') {
                let _ = err.write_all(b"\n");
            }
            code
        }
    }
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Res {
    let prog = load(&a.program)?;
    if a.emit_core {
        return write_out(out, &print_program(&prog));
    }
    let mut facts: BTreeMap<String, Relation> = BTreeMap::new();
    for f in &a.facts {
        let parsed = parse_facts(&read(f)?).map_err(|d| diags(f, &[d]))?;
        for (k, rel) in parsed {
            facts.entry(k).or_default().extend(rel);
        }
    }
    let bindings: Vec<(String, Relation)> = if a.bind.is_empty() {
        facts.into_iter().collect()
    } else {
        a.bind
            .iter()
            .map(|(p, n)| match facts.get(n) {
                Some(r) => Ok((p.clone(), r.clone())),
                None => Err(usage(format!("--bind {p}={n}: no fact relation named {n}"))),
            })
            .collect::<Result<_, _>>()?
    };
    let mode: Mode = a.mode.into();
    analysis::check(&prog, mode).map_err(|d| diags(&a.program, &d))?;
    let opts = Options { mode, step_budget: a.step_budget, ..Options::default() };
    let mut m = Machine::new(&prog, opts).map_err(|e| run_error(&a.program, e))?;
    for (p, rel) in &bindings {
        m.bind_global_set(p, rel).map_err(|e| run_error(&a.program, e))?;
    }
    m.run().map_err(|e| run_error(&a.program, e))?;
    let text: String = a.dump.iter().map(|d| m.dump(d)).collect();
    match &a.out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => write_out(out, &text),
    }
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Res {
    let prog = load(&a.program)?;
    let mut text = String::new();
    if a.emit_core {
        text.push_str(&print_program(&prog));
    }
    for name in &a.explain_rules {
        let decls: Vec<_> = prog
            .rulesets
            .iter()
            .chain(prog.classes.iter().flat_map(|c| c.rulesets.iter()))
            .filter(|r| &r.name == name)
            .collect();
        if decls.is_empty() {
            return Err(usage(format!("--explain-rules: no rule set named {name}")));
        }
        for d in decls {
            text.push_str(&explain(&classify(d)));
        }
    }
    let report = analysis::check(&prog, a.mode.into()).map_err(|d| diags(&a.program, &d))?;
    if a.explain_updates {
        text.push_str(&report.explain());
    }
    write_out(out, &text)
}

fn cmd_engine(a: EngineArgs, out: &mut dyn Write) -> Res {
    let prog = load(&a.rules)?;
    let facts = parse_facts(&read(&a.facts)?).map_err(|d| diags(&a.facts, &[d]))?;
    let all: Vec<_> = prog.rulesets.iter().chain(prog.classes.iter().flat_map(|c| c.rulesets.iter())).collect();
    let rules = match &a.ruleset {
        Some(n) => all
            .iter()
            .find(|r| &r.name == n)
            .map(|r| r.rules.clone())
            .ok_or_else(|| usage(format!("no rule set named {n}")))?,
        None if all.len() == 1 => all[0].rules.clone(),
        None if all.is_empty() => return Err(usage(format!("{} declares no rule set", a.rules.display()))),
        None => return Err(usage("the file declares several rule sets; choose one with --ruleset")),
    };
    let info = classify_rules("", &rules);
    let mut input = EngineInput { rules, facts: BTreeMap::new() };
    for p in info.base() {
        input.facts.insert(p.clone(), facts.get(p.name()).cloned().unwrap_or_default());
    }
    let res = engine::eval(&input, a.strategy.into()).map_err(|e| Fail(EXIT_RUNTIME, format!("error[engine]: {e}")))?;
    let pick = |m: &BTreeMap<PredRef, Relation>| m.iter().find(|(p, _)| p.name() == a.query).map(|(_, r)| r.clone());
    let rel = if a.undefined {
        pick(&res.undefined).or_else(|| pick(&res.extensions).map(|_| Relation::new()))
    } else {
        pick(&res.extensions)
    }
    .or_else(|| info.base().iter().find(|p| p.name() == a.query).map(|p| input.facts[p].clone()))
    .ok_or_else(|| usage(format!("no predicate named {} in the rule set", a.query)))?;
    let text: String = rel.iter().map(|r| format!("{}\n", format_row(r))).collect();
    write_out(out, &text)
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Res {
    let mut names = Vec::new();
    for n in &a.names {
        if n.eq_ignore_ascii_case("all") {
            names.extend(BenchName::ALL);
        } else {
            names.push(n.parse::<BenchName>().map_err(usage)?);
        }
    }
    let mut jobs = Vec::new();
    for n in names {
        let mut spec = BenchSpec::defaults(n);
        for kv in &a.spec {
            spec.set(kv).map_err(usage)?;
        }
        jobs.push((n, spec));
    }
    let run_one = |(n, spec): &(BenchName, BenchSpec)| -> Vec<Result<BenchReport, String>> {
        (0..a.repeat).map(|_| bench::run_bench(*n, spec).map_err(|e| format!("{n}: {e}"))).collect()
    };
    let results: Vec<Vec<Result<BenchReport, String>>> = if a.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|j| std::thread::Builder::new().stack_size(BIG_STACK).spawn_scoped(s, || run_one(j)).expect("spawn"))
                .collect();
            handles.into_iter().map(|h| h.join().expect("benchmark thread panicked")).collect()
        })
    } else {
        jobs.iter().map(run_one).collect()
    };
    let mut tsv = format!("{}\n", BenchReport::TSV_HEADER);
    let mut failure = None;
    for r in results.into_iter().flatten() {
        match r {
            Ok(rep) => {
                write_out(out, &format!("{rep}\n"))?;
                tsv.push_str(&rep.tsv());
                tsv.push('\n');
                if rep.verified == Some(false) {
                    failure.get_or_insert(Fail(EXIT_RUNTIME, format!("{}: result differs from the oracle", rep.name)));
                }
            }
            Err(msg) => {
                let _ = writeln!(err, "{msg}");
                failure.get_or_insert(Fail(EXIT_RUNTIME, "benchmark failed".into()));
            }
        }
    }
    if let Some(path) = &a.out {
        std::fs::write(path, tsv).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    failure.map_or(Ok(()), Err)
}

/// Stack size for the threads that run programs.
pub const BIG_STACK: usize = 256 * 1024 * 1024;

/// Entry point of the `rulelang` binary.
pub fn main() -> i32 {
    let args: Vec<OsString> = std::env::args_os().collect();
    std::thread::Builder::new()
        .stack_size(BIG_STACK)
        .spawn(move || {
            let stdout = std::io::stdout();
            let stderr = std::io::stderr();
            main_with(args, &mut stdout.lock(), &mut stderr.lock())
        })
        .expect("spawn main thread")
        .join()
        .unwrap_or(EXIT_RUNTIME)
}
