//! The `tabterm` command line.
//!
//! Subcommands: `check` (full pipeline, JSON report), `run` (bounded
//! engine only), `transform` (emit the answer-guarded source), `graph`
//! (DOT), `certify` (re-check a stored certificate). JSON and DOT go to
//! stdout; one-line human summaries go to stderr, colored when stderr is
//! a terminal (`TABTERM_COLOR=0|1` overrides).
//!
//! Exit codes: 0 — every requested verdict is proved / the run completed
//! / the certificate holds; 1 — a requested verdict is unproved or the
//! run was cut by a budget or the certificate fails; 2 — input or usage
//! errors.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::build_dep_graph;
use crate::engine::{call_graph_sample, Budget};
use crate::prove::{
    check_certificate, prove_lg, prove_quasi, Certificate, ProveOptions,
};
use crate::report::{build_report, run_doc, GoalDoc};
use crate::syntax::{
    parse_goal, parse_program, render_program, Mode, ParseOptions, Program,
};
use crate::transform::a_transform;

#[derive(Parser)]
#[command(
    name = "tabterm",
    version,
    about = "Termination workbench for tabled logic programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full pipeline: parse, analyse, prove, cross-run. Emits a JSON report.
    Check(CheckArgs),
    /// Evaluate one goal on the bounded engine. Emits a JSON run document.
    Run(RunArgs),
    /// Print the answer-guarded program as loadable source.
    Transform(FileArgs),
    /// Print the dependency graph (or a sampled call graph) as DOT.
    Graph(GraphArgs),
    /// Re-check a stored certificate against a program.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Which verdict(s) the exit code reflects. The report always
    /// contains both.
    #[arg(long, value_enum, default_value_t = GoalArg::Quasi)]
    goal: GoalArg,
    /// Largest coefficient value the certificate search may use.
    #[arg(long, default_value_t = 2)]
    bound: u64,
    #[command(flatten)]
    parse: ParseArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Unify with the occurs check.
    #[arg(long)]
    occurs_check: bool,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Goal to evaluate, e.g. "path(a,[e(a,b),e(b,a)],Y,L)".
    #[arg(long)]
    query: String,
    #[command(flatten)]
    parse: ParseArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long)]
    occurs_check: bool,
}

#[derive(Args)]
struct FileArgs {
    file: PathBuf,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Args)]
struct GraphArgs {
    file: PathBuf,
    /// Sample the runtime call graph of --query instead of the static
    /// dependency graph.
    #[arg(long, requires = "query")]
    call_graph: bool,
    #[arg(long)]
    query: Option<String>,
    #[command(flatten)]
    parse: ParseArgs,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct CertifyArgs {
    file: PathBuf,
    certificate: PathBuf,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Args)]
struct ParseArgs {
    /// Assume this mode for undeclared predicate arguments instead of
    /// rejecting the program.
    #[arg(long, value_enum)]
    default_mode: Option<ModeArg>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = Budget::default().max_steps)]
    max_steps: usize,
    #[arg(long, default_value_t = Budget::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = Budget::default().max_tables)]
    max_tables: usize,
    /// Answers retained per table.
    #[arg(long = "max-answers",
          default_value_t = Budget::default().max_answers_per_table)]
    max_answers: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum GoalArg {
    Quasi,
    Lg,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    In,
    Out,
}

impl ParseArgs {
    fn options(&self) -> ParseOptions {
        ParseOptions {
            default_mode: self.default_mode.map(|m| match m {
                ModeArg::In => Mode::In,
                ModeArg::Out => Mode::Out,
            }),
        }
    }
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget {
            max_steps: self.max_steps,
            max_depth: self.max_depth,
            max_tables: self.max_tables,
            max_answers_per_table: self.max_answers,
        }
    }
}

/// Run the command line against an explicit argument vector and return
/// the process exit code. `main` is a thin wrapper around this.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Transform(a) => cmd_transform(a),
        Cmd::Graph(a) => cmd_graph(a),
        Cmd::Certify(a) => cmd_certify(a),
    }
}

fn cmd_check(a: CheckArgs) -> i32 {
    let start = Instant::now();
    let p = match load(&a.file, &a.parse) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let opts = ProveOptions {
        bound: a.bound,
        budget: a.budget.budget(),
        occurs_check: a.occurs_check,
    };
    let quasi = prove_quasi(&p, &p.queries, &opts);
    let lg = prove_lg(&p, &p.queries, &opts);
    let mut doc = build_report(
        &a.file.display().to_string(),
        &p,
        &quasi,
        &lg,
        &opts.budget,
        opts.occurs_check,
    );
    doc.timing_ms = start.elapsed().as_millis();
    print_json(&doc);
    goal_line("quasi", &doc.quasi);
    goal_line("lg", &doc.lg);
    let ok = match a.goal {
        GoalArg::Quasi => doc.quasi.is_proved(),
        GoalArg::Lg => doc.lg.is_proved(),
        GoalArg::Both => doc.quasi.is_proved() && doc.lg.is_proved(),
    };
    if ok {
        0
    } else {
        1
    }
}

fn cmd_run(a: RunArgs) -> i32 {
    let p = match load(&a.file, &a.parse) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let q = match parse_goal(&a.query, &p) {
        Ok(q) => q,
        Err(e) => return input_error(e),
    };
    let doc = run_doc(&p, &q, &a.budget.budget(), a.occurs_check);
    print_json(&doc);
    let completed = doc.status == "completed";
    note(
        &doc.status,
        if completed { GREEN } else { YELLOW },
        &format!(
            "{} trees, {} answers, {} steps",
            doc.trees.len(),
            doc.answers.len(),
            doc.steps
        ),
    );
    if completed {
        0
    } else {
        1
    }
}

fn cmd_transform(a: FileArgs) -> i32 {
    let p = match load(&a.file, &a.parse) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match a_transform(&p) {
        Ok((t, _)) => {
            print!("{}", render_program(&t));
            0
        }
        Err(e) => input_error(e),
    }
}

fn cmd_graph(a: GraphArgs) -> i32 {
    let p = match load(&a.file, &a.parse) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let dot = if a.call_graph {
        let q = match parse_goal(a.query.as_deref().unwrap_or_default(), &p) {
            Ok(q) => q,
            Err(e) => return input_error(e),
        };
        call_graph_sample(&p, &q.atom, &a.budget.budget()).to_dot()
    } else {
        build_dep_graph(&p).to_dot(&p.effective_tabling())
    };
    print!("{dot}");
    0
}

fn cmd_certify(a: CertifyArgs) -> i32 {
    let p = match load(&a.file, &a.parse) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match fs::read_to_string(&a.certificate) {
        Ok(t) => t,
        Err(e) => return input_error(format_args!(
            "{}: {e}",
            a.certificate.display()
        )),
    };
    let cert: Certificate = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => return input_error(format_args!(
            "{}: {e}",
            a.certificate.display()
        )),
    };
    match check_certificate(&p, &cert) {
        Ok(rep) => {
            print_json(&rep);
            if rep.ok() {
                note(
                    "accepted",
                    GREEN,
                    &format!("{} conditions hold", rep.total),
                );
                0
            } else {
                note(
                    "rejected",
                    RED,
                    &format!("{} of {} conditions fail", rep.failures, rep.total),
                );
                1
            }
        }
        Err(e) => input_error(e),
    }
}

fn load(file: &Path, parse: &ParseArgs) -> Result<Program, i32> {
    let src = fs::read_to_string(file)
        .map_err(|e| input_error(format_args!("{}: {e}", file.display())))?;
    parse_program(&src, &parse.options()).map_err(|e| input_error(e))
}

fn print_json(doc: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(doc).expect("serializable"));
}

const GREEN: &str = "32";
const YELLOW: &str = "33";
const RED: &str = "31";

fn color_enabled() -> bool {
    match std::env::var("TABTERM_COLOR").ok().as_deref() {
        Some("0") => false,
        Some("1") => true,
        _ => std::io::stderr().is_terminal(),
    }
}

fn paint(color: &str, s: &str) -> String {
    if color_enabled() {
        format!("\x1b[{color}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

fn note(head: &str, color: &str, rest: &str) {
    eprintln!("{}: {rest}", paint(color, head));
}

fn goal_line(name: &str, g: &GoalDoc) {
    let color = match g.verdict.as_str() {
        "proved" => GREEN,
        "unproved-within-bound" => YELLOW,
        _ => RED,
    };
    let mut line = format!("{} (bound {})", paint(color, &g.verdict), g.bound);
    if let Some(d) = &g.detail {
        line.push_str(&format!(" — {d}"));
    }
    eprintln!("{name}: {line}");
}

fn input_error(e: impl Display) -> i32 {
    note("error", RED, &e.to_string());
    2
}
