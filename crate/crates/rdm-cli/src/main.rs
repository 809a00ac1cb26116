//! `rdm`: resilience, responsibility, and minimal factorization for
//! conjunctive queries over CSV instances.
//!
//! Every subcommand prints one JSON report to standard output and a
//! one-line summary to standard error. Exit codes: 0 success, 2 bad
//! input (parse, data, unsupported query, unknown target), 3 undefined
//! resilience (a witness with no endogenous tuple), 4 solver node
//! limit. Unexpected internal failures exit 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lpcore::LpError;
use rdm_core::classify::predict_complexity;
use rdm_core::factorize::{solve_minfac, FactorizeError};
use rdm_core::instance::{
    load_instance, random_instance, save_instance, Instance, Semantics,
};
use rdm_core::interventions::{
    solve_resilience, solve_responsibility, ResilienceMode, ResponsibilityMode,
    SolveError,
};
use rdm_core::oracle::{
    brute_minfac_min, brute_resilience, brute_responsibility, CancelToken,
    OracleBudget, OracleError,
};
use rdm_core::query::{parse_query, Query};
use rdm_core::report::{opt_rat_json, rat_json, stats_json};
use rdm_core::{rat, Rat, SolveOptions};

#[derive(Parser)]
#[command(name = "rdm", version, about = "Resilience, responsibility, and provenance factorization over CSV instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum deletion weight removing every query answer
    Resilience(ResilienceArgs),
    /// Minimum contingency for one tuple, reported as 1/(1+cost)
    Responsibility(ResponsibilityArgs),
    /// Shortest factorized form of the query provenance
    Factorize(FactorizeArgs),
    /// Structural analysis and tractability predictions for a query
    Classify(ClassifyArgs),
    /// Brute-force reference values for small instances
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Write a deterministic random instance as CSV files
    Gen(GenArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exhaustive resilience by deletion-set enumeration
    Resilience(OracleSolveArgs),
    /// Exhaustive responsibility for one target tuple
    Responsibility(OracleResponsibilityArgs),
    /// Exhaustive minimal factorization length by plan assignment
    Factorize(OracleSolveArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Query file (.dl)
    #[arg(short = 'q', long = "query")]
    query: PathBuf,
    /// Directory holding one <Relation>.csv per relation
    #[arg(short = 'd', long = "data")]
    data: PathBuf,
    /// Bag semantics: weight tuples by their _mult column
    #[arg(long)]
    bag: bool,
    /// Also write the JSON report to this file
    #[arg(long = "json", value_name = "FILE")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ResilienceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// lp: relaxation only; ilp: always branch; auto: branch on demand
    #[arg(long, value_enum, default_value_t = ResilienceCliMode::Auto)]
    mode: ResilienceCliMode,
}

#[derive(Args)]
struct ResponsibilityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target tuple id, e.g. Oscar:1
    #[arg(short = 't', long = "target")]
    target: String,
    /// milp: relax the tuple variables; ilp: everything integral
    #[arg(long, value_enum, default_value_t = ResponsibilityCliMode::Milp)]
    mode: ResponsibilityCliMode,
}

#[derive(Args)]
struct FactorizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Include the factored expression in the report
    #[arg(long = "emit-expr")]
    emit_expr: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Query file (.dl)
    #[arg(short = 'q', long = "query")]
    query: PathBuf,
    /// Also write the JSON report to this file
    #[arg(long = "json", value_name = "FILE")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleSolveArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct OracleResponsibilityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target tuple id, e.g. Oscar:1
    #[arg(short = 't', long = "target")]
    target: String,
}

#[derive(Args)]
struct GenArgs {
    /// Query file (.dl); one CSV is written per relation
    #[arg(short = 'q', long = "query")]
    query: PathBuf,
    /// Rows drawn per relation (duplicates collapse)
    #[arg(long, default_value_t = 5)]
    tuples: usize,
    /// Domain size: values are drawn from c1..c<domain>
    #[arg(long, default_value_t = 3)]
    domain: usize,
    /// RNG seed; equal seeds give byte-identical output
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the CSV files
    #[arg(long)]
    out: PathBuf,
    /// Draw bag multiplicities (1..=3) and write a _mult column
    #[arg(long)]
    bag: bool,
    /// Also write the JSON report to this file
    #[arg(long = "json", value_name = "FILE")]
    json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResilienceCliMode {
    Lp,
    Ilp,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResponsibilityCliMode {
    Milp,
    Ilp,
}

/// A failed run: exit code plus the message printed to stderr.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Failure {
        let code = match &e {
            SolveError::Undefined => 3,
            SolveError::TargetNotFound(_) | SolveError::TargetExogenous(_) => 2,
            SolveError::Lp(LpError::NodeLimitExceeded { .. }) => 4,
            SolveError::Lp(_) | SolveError::Audit(_) => 1,
        };
        fail(code, e.to_string())
    }
}

impl From<FactorizeError> for Failure {
    fn from(e: FactorizeError) -> Failure {
        let code = match &e {
            FactorizeError::SelfJoin
            | FactorizeError::TooManyVariables(_)
            | FactorizeError::ExpansionLimit(_)
            | FactorizeError::Inconsistent(_) => 2,
            FactorizeError::Lp(LpError::NodeLimitExceeded { .. }) => 4,
            FactorizeError::Lp(_) | FactorizeError::UnassignedWitness(_) => 1,
        };
        fail(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Failure {
        let code = match &e {
            OracleError::Undefined => 3,
            OracleError::BadTarget(_)
            | OracleError::Unsupported(_)
            | OracleError::BudgetExceeded(_) => 2,
            OracleError::Cancelled => 1,
        };
        fail(code, e.to_string())
    }
}

fn read_query(path: &Path) -> Result<Query, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(2, format!("reading {}: {e}", path.display())))?;
    parse_query(&text).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn read_instance(input: &InputArgs, q: &Query) -> Result<Instance, Failure> {
    let semantics = if input.bag { Semantics::Bag } else { Semantics::Set };
    let (inst, warnings) = load_instance(&input.data, q, semantics)
        .map_err(|e| fail(2, e.to_string()))?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(inst)
}

fn solve_options() -> Result<SolveOptions, Failure> {
    let mut options = SolveOptions::default();
    if let Ok(raw) = std::env::var("RDM_NODE_LIMIT") {
        let limit = raw
            .parse::<u64>()
            .map_err(|_| fail(2, format!("RDM_NODE_LIMIT must be an integer, got {raw:?}")))?;
        options.node_limit = Some(limit);
    }
    Ok(options)
}

/// Assembles the fixed report envelope. Every command fills the same
/// keys so downstream scripts can rely on the shape.
struct Report {
    command: &'static str,
    query: PathBuf,
    data: Option<PathBuf>,
    semantics: Option<Semantics>,
    result: Value,
    lp_bound: Value,
    lp_integral: Value,
    stats: Value,
    summary: String,
    started: Instant,
    solve_ms: u128,
}

impl Report {
    fn new(command: &'static str, query: &Path, started: Instant) -> Report {
        Report {
            command,
            query: query.to_path_buf(),
            data: None,
            semantics: None,
            result: Value::Null,
            lp_bound: Value::Null,
            lp_integral: Value::Null,
            stats: Value::Null,
            summary: String::new(),
            started,
            solve_ms: 0,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "query": self.query.display().to_string(),
            "data": self.data.as_ref().map(|p| p.display().to_string()),
            "semantics": self.semantics.map(Semantics::name),
            "result": self.result,
            "lp_bound": self.lp_bound,
            "lp_integral": self.lp_integral,
            "stats": self.stats,
            "timings_ms": {
                "solve": self.solve_ms,
                "total": self.started.elapsed().as_millis(),
            },
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

fn emit(report: &Report, json_out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(&report.to_json()).unwrap();
    text.push('\n');
    print!("{text}");
    if let Some(path) = json_out {
        std::fs::write(path, &text)
            .map_err(|e| fail(2, format!("writing {}: {e}", path.display())))?;
    }
    eprintln!("{}", report.summary);
    Ok(())
}

fn responsibility_value(cost: &Option<Rat>) -> Rat {
    match cost {
        Some(c) => rat(1) / (rat(1) + c.clone()),
        None => rat(0),
    }
}

fn cmd_resilience(args: &ResilienceArgs, started: Instant) -> Result<Report, Failure> {
    let q = read_query(&args.input.query)?;
    let inst = read_instance(&args.input, &q)?;
    let mode = match args.mode {
        ResilienceCliMode::Lp => ResilienceMode::Lp,
        ResilienceCliMode::Ilp => ResilienceMode::Ilp,
        ResilienceCliMode::Auto => ResilienceMode::Auto,
    };
    let options = solve_options()?;
    let solve_start = Instant::now();
    let r = solve_resilience(&q, &inst, mode, &options)?;
    let mut report = Report::new("resilience", &args.input.query, started);
    report.solve_ms = solve_start.elapsed().as_millis();
    report.data = Some(args.input.data.clone());
    report.semantics = Some(inst.semantics);
    report.result = json!({
        "value": rat_json(&r.value),
        "deleted": r.deleted,
        "mode": r.mode.name(),
    });
    report.lp_bound = rat_json(&r.lp_bound);
    report.lp_integral = json!(r.lp_integral);
    report.stats = stats_json(&r.stats);
    report.summary = format!(
        "resilience ({}) = {} [{} tuple(s) deleted]",
        inst.semantics.name(),
        lpcore::rational_decimal(&r.value),
        r.deleted.len(),
    );
    Ok(report)
}

fn cmd_responsibility(
    args: &ResponsibilityArgs,
    started: Instant,
) -> Result<Report, Failure> {
    let q = read_query(&args.input.query)?;
    let inst = read_instance(&args.input, &q)?;
    let mode = match args.mode {
        ResponsibilityCliMode::Milp => ResponsibilityMode::Milp,
        ResponsibilityCliMode::Ilp => ResponsibilityMode::Ilp,
    };
    let options = solve_options()?;
    let solve_start = Instant::now();
    let r = solve_responsibility(&q, &inst, &args.target, mode, &options)?;
    let mut report = Report::new("responsibility", &args.input.query, started);
    report.solve_ms = solve_start.elapsed().as_millis();
    report.data = Some(args.input.data.clone());
    report.semantics = Some(inst.semantics);
    report.result = json!({
        "target": r.target,
        "status": r.status.name(),
        "cost": opt_rat_json(&r.cost),
        "responsibility": rat_json(&r.responsibility),
        "contingency": r.contingency,
        "preserved_witness": r.preserved_witness,
        "escalated": r.escalated,
        "mode": r.mode.name(),
    });
    report.lp_bound = opt_rat_json(&r.lp_bound);
    report.stats = stats_json(&r.stats);
    report.summary = format!(
        "responsibility({}) = {} [status {}]",
        r.target,
        lpcore::rational_decimal(&r.responsibility),
        r.status.name(),
    );
    Ok(report)
}

fn cmd_factorize(args: &FactorizeArgs, started: Instant) -> Result<Report, Failure> {
    let q = read_query(&args.input.query)?;
    let inst = read_instance(&args.input, &q)?;
    let options = solve_options()?;
    let solve_start = Instant::now();
    let r = solve_minfac(&q, &inst, &options)?;
    let mut report = Report::new("factorize", &args.input.query, started);
    report.solve_ms = solve_start.elapsed().as_millis();
    report.data = Some(args.input.data.clone());
    report.semantics = Some(inst.semantics);
    let (expr_text, expr_tree) = match (&r.expression, args.emit_expr) {
        (Some(e), true) => (json!(e.text()), e.to_json()),
        _ => (Value::Null, Value::Null),
    };
    report.result = json!({
        "length": r.length,
        "expression": expr_text,
        "expression_tree": expr_tree,
        "assignment": r.assignment,
        "plan_ids": r.plan_ids,
    });
    report.lp_bound = rat_json(&r.lp_bound);
    report.lp_integral = json!(r.lp_integral);
    report.stats = stats_json(&r.stats);
    report.summary = format!("minimal factorization length = {}", r.length);
    Ok(report)
}

fn cmd_classify(args: &ClassifyArgs, started: Instant) -> Result<Report, Failure> {
    let q = read_query(&args.query)?;
    let c = predict_complexity(&q);
    let mut report = Report::new("classify", &args.query, started);
    report.result = c.to_json();
    let verdicts: Vec<String> = c
        .predictions
        .iter()
        .map(|(k, p)| format!("{k}: {}", p.verdict.name()))
        .collect();
    report.summary = verdicts.join(", ");
    Ok(report)
}

fn cmd_oracle(cmd: &OracleCommand, started: Instant) -> Result<Report, Failure> {
    let budget = OracleBudget::default();
    let cancel = CancelToken::new();
    match cmd {
        OracleCommand::Resilience(args) => {
            let q = read_query(&args.input.query)?;
            let inst = read_instance(&args.input, &q)?;
            let solve_start = Instant::now();
            let value = brute_resilience(&q, &inst, &budget, &cancel)?;
            let mut report = Report::new("oracle_resilience", &args.input.query, started);
            report.solve_ms = solve_start.elapsed().as_millis();
            report.data = Some(args.input.data.clone());
            report.semantics = Some(inst.semantics);
            report.result = json!({ "value": rat_json(&value) });
            report.summary = format!(
                "oracle resilience ({}) = {}",
                inst.semantics.name(),
                lpcore::rational_decimal(&value),
            );
            Ok(report)
        }
        OracleCommand::Responsibility(args) => {
            let q = read_query(&args.input.query)?;
            let inst = read_instance(&args.input, &q)?;
            let solve_start = Instant::now();
            let cost = brute_responsibility(&q, &inst, &args.target, &budget, &cancel)?;
            let responsibility = responsibility_value(&cost);
            let mut report =
                Report::new("oracle_responsibility", &args.input.query, started);
            report.solve_ms = solve_start.elapsed().as_millis();
            report.data = Some(args.input.data.clone());
            report.semantics = Some(inst.semantics);
            report.result = json!({
                "target": args.target,
                "cost": opt_rat_json(&cost),
                "responsibility": rat_json(&responsibility),
            });
            report.summary = format!(
                "oracle responsibility({}) = {}",
                args.target,
                lpcore::rational_decimal(&responsibility),
            );
            Ok(report)
        }
        OracleCommand::Factorize(args) => {
            let q = read_query(&args.input.query)?;
            let inst = read_instance(&args.input, &q)?;
            let solve_start = Instant::now();
            let length = brute_minfac_min(&q, &inst, &budget, &cancel)?;
            let mut report = Report::new("oracle_factorize", &args.input.query, started);
            report.solve_ms = solve_start.elapsed().as_millis();
            report.data = Some(args.input.data.clone());
            report.semantics = Some(inst.semantics);
            report.result = json!({ "length": length });
            report.summary = format!("oracle factorization length = {length}");
            Ok(report)
        }
    }
}

fn cmd_gen(args: &GenArgs, started: Instant) -> Result<Report, Failure> {
    let q = read_query(&args.query)?;
    if args.domain == 0 {
        return Err(fail(2, "--domain must be at least 1"));
    }
    let semantics = if args.bag { Semantics::Bag } else { Semantics::Set };
    let inst = random_instance(&q, args.tuples, args.domain, args.seed, semantics);
    save_instance(&inst, &args.out).map_err(|e| fail(2, e.to_string()))?;
    let relations: Vec<String> = inst.relation_names().map(str::to_string).collect();
    let rows: Vec<usize> = relations
        .iter()
        .map(|r| inst.tuples_of(r).len())
        .collect();
    let mut report = Report::new("gen", &args.query, started);
    report.data = Some(args.out.clone());
    report.semantics = Some(semantics);
    report.result = json!({
        "out": args.out.display().to_string(),
        "tuples": args.tuples,
        "domain": args.domain,
        "seed": args.seed,
        "relations": relations,
        "rows": rows,
    });
    report.summary = format!(
        "wrote {} relation(s) to {}",
        relations.len(),
        args.out.display(),
    );
    Ok(report)
}

fn run(cli: &Cli, started: Instant) -> Result<(), Failure> {
    let (report, json_out) = match &cli.command {
        Command::Resilience(args) => {
            (cmd_resilience(args, started)?, args.input.json_out.clone())
        }
        Command::Responsibility(args) => {
            (cmd_responsibility(args, started)?, args.input.json_out.clone())
        }
        Command::Factorize(args) => {
            (cmd_factorize(args, started)?, args.input.json_out.clone())
        }
        Command::Classify(args) => (cmd_classify(args, started)?, args.json_out.clone()),
        Command::Oracle(cmd) => {
            let json_out = match cmd {
                OracleCommand::Resilience(a) | OracleCommand::Factorize(a) => {
                    a.input.json_out.clone()
                }
                OracleCommand::Responsibility(a) => a.input.json_out.clone(),
            };
            (cmd_oracle(cmd, started)?, json_out)
        }
        Command::Gen(args) => (cmd_gen(args, started)?, args.json_out.clone()),
    };
    emit(&report, json_out.as_deref())
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    match run(&cli, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
