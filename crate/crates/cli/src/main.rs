//! Command-line front-end: learn machines from samples, generate
//! benchmark instances, run timing sweeps, and compare machines.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 size bound exceeded
//! or solver answered unknown, 3 machines inequivalent.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use automin::automata::{self, equivalent, EquivOutcome, Machine};
use automin::benchgen::{self, ModBenchSpec, RandomMachineSpec};
use automin::encoding::AxiomStyle;
use automin::error::Error;
use automin::oracle::{brute_force_minimal, OracleBudget};
use automin::samples::{self, Sample};
use automin::search::{learn_minimal, EmitSmt, EncodingChoice, LearnOptions};
use automin::solver::SolverConfig;
use automin::MachineKind;

#[derive(Parser)]
#[command(
    name = "automin",
    version,
    about = "Learn minimal DFAs, Moore and Mealy machines from samples via an SMT solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn the minimal consistent machine for a sample file.
    Learn(LearnArgs),
    /// Generate benchmark machines and samples.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Run a timing sweep over a benchmark suite and write a CSV.
    Bench(BenchArgs),
    /// Check two machine files for equivalence.
    CheckEquiv(CheckEquivArgs),
    /// Brute-force the minimal machine size on a tiny sample.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Dfa,
    Moore,
    Mealy,
}

impl From<KindArg> for MachineKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dfa => MachineKind::Dfa,
            KindArg::Moore => MachineKind::Moore,
            KindArg::Mealy => MachineKind::Mealy,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EncodingArg {
    Natural,
    Expressive,
}

impl From<EncodingArg> for EncodingChoice {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Natural => EncodingChoice::Natural,
            EncodingArg::Expressive => EncodingChoice::Expressive,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AxiomsArg {
    Bool,
    Ineq,
}

impl From<AxiomsArg> for AxiomStyle {
    fn from(a: AxiomsArg) -> Self {
        match a {
            AxiomsArg::Bool => AxiomStyle::BooleanDisjunction,
            AxiomsArg::Ineq => AxiomStyle::LinearInequality,
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    /// Machine kind to learn.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Constraint encoding (natural is dfa-only).
    #[arg(long, value_enum, default_value = "expressive")]
    encoding: EncodingArg,
    /// Axiom style for range bounds.
    #[arg(long, value_enum, default_value = "ineq")]
    axioms: AxiomsArg,
    /// Sample file to learn from.
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the learned machine.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver command, e.g. "z3 -in" (falls back to $SMT_SOLVER_CMD).
    #[arg(long)]
    solver: Option<String>,
    /// Per-check timeout in seconds.
    #[arg(long = "timeout-s", default_value_t = 600)]
    timeout_s: u64,
    /// First size to try.
    #[arg(long = "start-n", default_value_t = 1)]
    start_n: usize,
    /// Give up beyond this size.
    #[arg(long = "max-n")]
    max_n: Option<usize>,
    /// Dump the SMT-LIB2 script tried at each size into this directory.
    #[arg(long = "emit-smt")]
    emit_smt: Option<PathBuf>,
    /// Write the per-size statistics CSV here.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// The cyclic length-counting DFA benchmark sample.
    Mod(GenModArgs),
    /// A seeded random reachable minimal Mealy machine.
    RandomMealy(GenRandomMealyArgs),
    /// A characterizing trace sample for a Mealy machine file.
    Charsample(GenCharsampleArgs),
}

#[derive(Args)]
struct GenModArgs {
    #[arg(long)]
    k: usize,
    #[arg(long = "max-len")]
    max_len: usize,
    /// Sample file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the generating DFA here.
    #[arg(long = "machine-out")]
    machine_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenRandomMealyArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    inputs: usize,
    #[arg(long)]
    outputs: usize,
    #[arg(long)]
    seed: u64,
    /// Machine file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenCharsampleArgs {
    /// Mealy machine file to build the conformance suite for.
    #[arg(long)]
    machine: PathBuf,
    #[arg(long = "extra-depth", default_value_t = 0)]
    extra_depth: usize,
    /// Sample file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark suite; only "mod" exists.
    #[arg(long, default_value = "mod")]
    suite: String,
    #[arg(long = "k-min", default_value_t = 1)]
    k_min: usize,
    #[arg(long = "k-max")]
    k_max: usize,
    #[arg(long = "max-len", default_value_t = 100)]
    max_len: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Comma-separated configurations out of natural-bool, natural-ineq,
    /// expressive-bool, expressive-ineq; or "all".
    #[arg(long, default_value = "all")]
    configs: String,
    /// CSV file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "timeout-s", default_value_t = 600)]
    timeout_s: u64,
    /// Parallel benchmark cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct CheckEquivArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "max-n", default_value_t = 4)]
    max_n: usize,
    #[arg(long = "max-machines", default_value_t = 20_000_000)]
    max_machines: u64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2; usage problems are exit 1 here
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BoundExceeded { .. } | Error::UnknownVerdict { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Cmd::Learn(args) => cmd_learn(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::CheckEquiv(args) => cmd_check_equiv(args),
        Cmd::Oracle(args) => cmd_oracle(args),
    }
}

fn solver_config(flag: Option<&str>, timeout_s: u64) -> Result<SolverConfig, Error> {
    let line = match flag {
        Some(f) => f.to_string(),
        None => std::env::var("SMT_SOLVER_CMD").map_err(|_| {
            Error::Input("no solver configured: pass --solver or set SMT_SOLVER_CMD".into())
        })?,
    };
    Ok(SolverConfig::from_command_line(&line)?
        .with_timeout(Duration::from_secs(timeout_s)))
}

fn read_sample(kind: MachineKind, path: &PathBuf) -> Result<Sample, Error> {
    let text = std::fs::read_to_string(path)?;
    match kind {
        MachineKind::Dfa => Ok(Sample::Dfa(samples::parse_dfa_sample(&text)?)),
        _ => {
            let traces = samples::parse_trace_sample(&text)?;
            if traces.kind() != kind {
                return Err(Error::Input(format!(
                    "requested kind {kind}, but the sample file is {}",
                    traces.kind()
                )));
            }
            Ok(Sample::Traces(traces))
        }
    }
}

fn cmd_learn(args: LearnArgs) -> Result<i32, Error> {
    let kind: MachineKind = args.kind.into();
    let sample = read_sample(kind, &args.input)?;
    let mut opts = LearnOptions::new(kind, solver_config(args.solver.as_deref(), args.timeout_s)?);
    opts.encoding = args.encoding.into();
    opts.style = args.axioms.into();
    opts.start_n = args.start_n;
    opts.max_n = args.max_n;
    if let Some(dir) = args.emit_smt {
        let basename = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sample".into());
        opts.emit_smt = Some(EmitSmt { dir, basename });
    }

    match learn_minimal(&sample, &opts) {
        Ok(result) => {
            if let Some(out) = args.out {
                std::fs::write(out, automata::serialize_machine(&result.machine))?;
            }
            if let Some(stats) = args.stats {
                std::fs::write(stats, automin::search::stats_csv(&result.stats))?;
            }
            let total_ms: u128 = result.stats.iter().map(|r| r.time_ms).sum();
            println!("minimal_n {}", result.minimal_n);
            println!("total_time_ms {total_ms}");
            Ok(0)
        }
        Err(failure) => {
            if let Some(stats) = args.stats {
                std::fs::write(stats, automin::search::stats_csv(&failure.stats))?;
            }
            eprintln!("error: {}", failure.error);
            Ok(exit_code_for(&failure.error))
        }
    }
}

fn cmd_gen(cmd: GenCmd) -> Result<i32, Error> {
    match cmd {
        GenCmd::Mod(args) => {
            let sample = benchgen::gen_mod_sample(&ModBenchSpec {
                k: args.k,
                max_len: args.max_len,
            })?;
            std::fs::write(&args.out, samples::serialize_dfa_sample(&sample))?;
            if let Some(machine_out) = args.machine_out {
                let dfa = benchgen::gen_mod_dfa(args.k)?;
                std::fs::write(
                    machine_out,
                    automata::serialize_machine(&Machine::Dfa(dfa)),
                )?;
            }
            Ok(0)
        }
        GenCmd::RandomMealy(args) => {
            let machine = benchgen::gen_random_mealy(&RandomMachineSpec {
                states: args.states,
                inputs: args.inputs,
                outputs: args.outputs,
                seed: args.seed,
            })?;
            std::fs::write(
                &args.out,
                automata::serialize_machine(&Machine::Mealy(machine)),
            )?;
            Ok(0)
        }
        GenCmd::Charsample(args) => {
            let text = std::fs::read_to_string(&args.machine)?;
            let machine = automata::parse_machine(&text)?;
            let mealy = machine
                .as_mealy()
                .ok_or_else(|| Error::Input("charsample needs a mealy machine file".into()))?;
            let sample = benchgen::characterizing_sample(mealy, args.extra_depth)?;
            std::fs::write(&args.out, samples::serialize_trace_sample(&sample))?;
            Ok(0)
        }
    }
}

struct BenchConfig {
    encoding: EncodingChoice,
    axioms: AxiomStyle,
    name: (&'static str, &'static str),
}

fn parse_configs(spec: &str) -> Result<Vec<BenchConfig>, Error> {
    let all = [
        ("natural-bool", EncodingChoice::Natural, AxiomStyle::BooleanDisjunction),
        ("natural-ineq", EncodingChoice::Natural, AxiomStyle::LinearInequality),
        ("expressive-bool", EncodingChoice::Expressive, AxiomStyle::BooleanDisjunction),
        ("expressive-ineq", EncodingChoice::Expressive, AxiomStyle::LinearInequality),
    ];
    let wanted: Vec<&str> = if spec == "all" {
        all.iter().map(|(n, _, _)| *n).collect()
    } else {
        spec.split(',').map(str::trim).collect()
    };
    let mut configs = Vec::new();
    for w in wanted {
        let found = all
            .iter()
            .find(|(n, _, _)| *n == w)
            .ok_or_else(|| Error::Input(format!("unknown configuration {w:?}")))?;
        let (enc_name, style_name) = w.split_once('-').expect("config names contain a dash");
        // leak the small fixed set of names so rows can borrow them
        configs.push(BenchConfig {
            encoding: found.1,
            axioms: found.2,
            name: (
                match enc_name {
                    "natural" => "natural",
                    _ => "expressive",
                },
                match style_name {
                    "bool" => "bool",
                    _ => "ineq",
                },
            ),
        });
    }
    Ok(configs)
}

fn cmd_bench(args: BenchArgs) -> Result<i32, Error> {
    if args.suite != "mod" {
        return Err(Error::Input(format!("unknown suite {:?}", args.suite)));
    }
    if args.k_max < args.k_min || args.k_min < 1 {
        return Err(Error::Input("need 1 <= k-min <= k-max".into()));
    }
    let configs = parse_configs(&args.configs)?;
    let solver = solver_config(args.solver.as_deref(), args.timeout_s)?;

    struct Cell {
        k: usize,
        config_idx: usize,
        repeat: usize,
    }
    let mut cells = Vec::new();
    for k in args.k_min..=args.k_max {
        for (config_idx, _) in configs.iter().enumerate() {
            for repeat in 1..=args.repeats {
                cells.push(Cell {
                    k,
                    config_idx,
                    repeat,
                });
            }
        }
    }

    let samples_by_k: std::collections::HashMap<usize, Sample> = (args.k_min..=args.k_max)
        .map(|k| {
            benchgen::gen_mod_sample(&ModBenchSpec {
                k,
                max_len: args.max_len,
            })
            .map(|s| (k, Sample::Dfa(s)))
        })
        .collect::<Result<_, _>>()?;

    let rows: Mutex<Vec<(usize, String)>> = Mutex::new(Vec::new());
    let next_cell = AtomicUsize::new(0);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let jobs = args.jobs.max(1);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = next_cell.fetch_add(1, Ordering::SeqCst);
                if idx >= cells.len() || failure.lock().unwrap().is_some() {
                    return;
                }
                let cell = &cells[idx];
                let config = &configs[cell.config_idx];
                let sample = &samples_by_k[&cell.k];
                let mut opts = LearnOptions::new(MachineKind::Dfa, solver.clone());
                opts.encoding = config.encoding;
                opts.style = config.axioms;
                let (n, time_ms, verdict) = match learn_minimal(sample, &opts) {
                    Ok(result) => {
                        let total: u128 = result.stats.iter().map(|r| r.time_ms).sum();
                        (result.minimal_n, total, "sat".to_string())
                    }
                    Err(failure_info) => {
                        let total: u128 = failure_info.stats.iter().map(|r| r.time_ms).sum();
                        match failure_info.error {
                            Error::UnknownVerdict { n, ref reason } if reason == "timeout" => {
                                (n, total, "timeout".to_string())
                            }
                            Error::UnknownVerdict { n, .. } => (n, total, "unknown".to_string()),
                            Error::BoundExceeded { max_n } => {
                                (max_n, total, "bound".to_string())
                            }
                            e => {
                                *failure.lock().unwrap() = Some(e);
                                return;
                            }
                        }
                    }
                };
                let row = format!(
                    "mod{},{},{},{},{},{},{}",
                    cell.k, config.name.0, config.name.1, n, cell.repeat, time_ms, verdict
                );
                rows.lock().unwrap().push((idx, row));
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut rows = rows.into_inner().unwrap();
    rows.sort();
    let mut csv = String::from("instance,encoding,axioms,n,repeat,time_ms,verdict\n");
    for (_, row) in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    std::fs::write(&args.out, csv)?;
    Ok(0)
}

fn cmd_check_equiv(args: CheckEquivArgs) -> Result<i32, Error> {
    let a = automata::parse_machine(&std::fs::read_to_string(&args.a)?)?;
    let b = automata::parse_machine(&std::fs::read_to_string(&args.b)?)?;
    match equivalent(&a, &b)? {
        EquivOutcome::Equivalent => {
            println!("equivalent");
            Ok(0)
        }
        EquivOutcome::Inequivalent { counterexample } => {
            if counterexample.is_empty() {
                println!("counterexample \u{3b5}");
            } else {
                println!("counterexample {}", counterexample.join(" "));
            }
            Ok(3)
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<i32, Error> {
    let kind: MachineKind = args.kind.into();
    let sample = read_sample(kind, &args.input)?;
    let budget = OracleBudget {
        max_n: args.max_n,
        max_machines: args.max_machines,
    };
    match brute_force_minimal(&sample, &budget)? {
        Some((_, n)) => {
            println!("minimal_n {n}");
            Ok(0)
        }
        None => {
            println!("no consistent machine with at most {} states", args.max_n);
            Ok(0)
        }
    }
}
