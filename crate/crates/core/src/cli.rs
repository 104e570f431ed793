//! Command-line surface. Every command builds a [`RunReport`]; the binary
//! only parses arguments, calls [`main_with_args`], and exits with its code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cutalg::{self, IndexSet};
use crate::engine::{self, DecompositionTrace, EngineOptions, GrowthFunction, SearchMode};
use crate::error::{Error, Result};
use crate::graphreg::{
    self, Check, DiscrepancyReport, Graph, PairDiscrepancy, Relation, VerifyOptions,
};
use crate::matcore::{self, Matrix};
use crate::oracle::OracleBudget;
use crate::report::to_json_string;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_BOUND: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "regularity",
    version,
    about = "Regularity decompositions of matrices and graphs"
)]
pub struct Cli {
    /// Worker threads for the parallel searches (output does not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Add wall-clock time to the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded random or structured graph as an edge list.
    Gen(GenArgs),
    /// Run a weak or strong decomposition.
    Decompose(DecomposeArgs),
    /// Compute matrix norms.
    Norms(NormsArgs),
    /// Check a graph-regularity statement on an input graph.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Gnp,
    CompleteBipartite,
    PlantedPartition,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Node count (gnp, planted-partition).
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge probability (gnp).
    #[arg(long)]
    pub p: Option<f64>,
    /// Side sizes (complete-bipartite).
    #[arg(long)]
    pub a: Option<usize>,
    #[arg(long)]
    pub b: Option<usize>,
    /// Group count and edge probabilities (planted-partition).
    #[arg(long)]
    pub parts: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Rank,
    Cut,
}

#[derive(Args, Debug, Clone)]
pub struct BudgetArgs {
    /// Restarts for heuristic cut search.
    #[arg(long, default_value_t = cutalg::DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Largest side for exhaustive cut search.
    #[arg(long, default_value_t = OracleBudget::default().max_dim)]
    pub max_dim: usize,
    /// Largest enumeration count for exhaustive searches.
    #[arg(long, default_value_t = OracleBudget::default().max_evaluations)]
    pub max_evaluations: u64,
}

impl BudgetArgs {
    fn budget(&self) -> OracleBudget {
        OracleBudget {
            max_evaluations: self.max_evaluations,
            max_dim: self.max_dim,
        }
    }

    fn engine(&self) -> EngineOptions {
        EngineOptions {
            restarts: self.restarts,
            budget: self.budget(),
            ..EngineOptions::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = AtomKind::Cut)]
    pub atoms: AtomKind,
    #[arg(long, default_value = "exact")]
    pub mode: SearchMode,
    #[arg(long)]
    pub epsilon: f64,
    /// Growth function: const:c, exp:b or scaledexp:a:b.
    #[arg(long, default_value = "const:1")]
    pub f: GrowthFunction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated: frob, fk:k, cut1, cutk:k, classical.
    #[arg(long, value_delimiter = ',', default_value = "frob,cut1,classical")]
    pub which: Vec<NormSpec>,
    #[arg(long, default_value = "exact")]
    pub mode: SearchMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    WeakGraph,
    Disc,
    Irregular,
    Exceptional,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value = "exact")]
    pub mode: SearchMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Largest part side for exact discrepancy.
    #[arg(long, default_value_t = graphreg::DEFAULT_MAX_SIDE)]
    pub max_side: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "norm", content = "k")]
pub enum NormSpec {
    Frob,
    Fk(usize),
    Cut1,
    Cutk(usize),
    Classical,
}

impl std::str::FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown norm `{s}`"));
        let k = |t: &str| t.parse::<usize>().ok().filter(|&k| k > 0).ok_or_else(bad);
        match s.split_once(':') {
            None => match s {
                "frob" => Ok(NormSpec::Frob),
                "cut1" => Ok(NormSpec::Cut1),
                "classical" => Ok(NormSpec::Classical),
                _ => Err(bad()),
            },
            Some(("fk", t)) => Ok(NormSpec::Fk(k(t)?)),
            Some(("cutk", t)) => Ok(NormSpec::Cutk(k(t)?)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormSpec::Frob => write!(f, "frob"),
            NormSpec::Fk(k) => write!(f, "fk:{k}"),
            NormSpec::Cut1 => write!(f, "cut1"),
            NormSpec::Cutk(k) => write!(f, "cutk:{k}"),
            NormSpec::Classical => write!(f, "classical"),
        }
    }
}

/// What was read or generated.
#[derive(Clone, Debug, Serialize)]
pub struct InputDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub kind: &'static str,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormValue {
    pub which: String,
    pub value: f64,
    /// `exact`, `heuristic` (a lower bound) or `power-iteration`.
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<IndexSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<IndexSet>,
}

/// JSON report written by every command. Field order is the wire order.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub input: InputDescriptor,
    #[serde(serialize_with = "ordered_map")]
    pub parameters: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<DecompositionTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norms: Option<Vec<NormValue>>,
    /// Node lists per part; the exceptional part, when present, is first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<IndexSet>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceptional_part: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_pair: Option<Vec<PairDiscrepancy>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irregular_pairs: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_disc: Option<f64>,
    /// `f_iterate(f, rounds)`, or `"saturated"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_iterate_bound: Option<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

fn ordered_map<S: serde::Serializer>(
    pairs: &[(String, String)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(pairs.iter().map(|(k, v)| (k, v)))
}

impl RunReport {
    fn new(
        command: &'static str,
        input: InputDescriptor,
        parameters: Vec<(String, String)>,
    ) -> Self {
        Self {
            command,
            input,
            parameters,
            trace: None,
            norms: None,
            partition: None,
            exceptional_part: None,
            c: None,
            per_pair: None,
            irregular_pairs: None,
            sum_disc: None,
            f_iterate_bound: None,
            checks: Vec::new(),
            passed: true,
            wall_time_ms: None,
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_BOUND
        }
    }
}

/// Exit code for an error, looking through aborted runs.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Convergence { .. } | Error::JacobiConvergence { .. } => EXIT_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}

/// Parsed input file.
#[derive(Clone, Debug)]
pub enum Input {
    Graph(Graph),
    Matrix(Matrix),
}

impl Input {
    pub fn matrix(&self) -> &Matrix {
        match self {
            Input::Graph(g) => g.adjacency(),
            Input::Matrix(m) => m,
        }
    }
}

/// Edge lists and matrices share the two-integer header; text that parses as
/// an edge list is treated as a graph, anything else as a matrix. Errors are
/// reported for the format the header suggests.
pub fn parse_input(text: &str) -> Result<Input> {
    let graph_err = match text.parse::<Graph>() {
        Ok(g) => return Ok(Input::Graph(g)),
        Err(e) => e,
    };
    match text.parse::<Matrix>() {
        Ok(m) => Ok(Input::Matrix(m)),
        Err(matrix_err) => {
            let looks_like_edges = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .nth(1)
                .is_some_and(|l| l.split_whitespace().all(|t| t.parse::<usize>().is_ok()));
            Err(if looks_like_edges {
                graph_err
            } else {
                matrix_err
            })
        }
    }
}

fn read_input(path: &Path) -> Result<Input> {
    parse_input(&fs::read_to_string(path)?)
}

fn describe(path: &Path, input: &Input) -> InputDescriptor {
    let (rows, cols) = input.matrix().shape();
    InputDescriptor {
        path: Some(path.display().to_string()),
        generator: None,
        seed: None,
        kind: match input {
            Input::Graph(_) => "graph",
            Input::Matrix(_) => "matrix",
        },
        rows,
        cols,
    }
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn params(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn positive_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )))
    }
}

fn require<T>(v: Option<T>, flag: &str, kind: GenKind) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for {kind:?}")))
}

fn probability(p: f64, flag: &str) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidParameter(format!(
            "--{flag} must lie in [0, 1], got {p}"
        )))
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<RunReport> {
    let (graph, spec) = match args.kind {
        GenKind::Gnp => {
            let n = require(args.n, "n", args.kind)?;
            let p = probability(require(args.p, "p", args.kind)?, "p")?;
            (Graph::gnp(n, p, args.seed), format!("gnp:n={n}:p={p}"))
        }
        GenKind::CompleteBipartite => {
            let a = require(args.a, "a", args.kind)?;
            let b = require(args.b, "b", args.kind)?;
            (
                Graph::complete_bipartite(a, b),
                format!("complete-bipartite:a={a}:b={b}"),
            )
        }
        GenKind::PlantedPartition => {
            let n = require(args.n, "n", args.kind)?;
            let parts = require(args.parts, "parts", args.kind)?;
            let p_in = probability(require(args.p_in, "p-in", args.kind)?, "p-in")?;
            let p_out = probability(require(args.p_out, "p-out", args.kind)?, "p-out")?;
            if parts == 0 {
                return Err(Error::InvalidParameter("--parts must be positive".into()));
            }
            (
                Graph::planted_partition(n, parts, p_in, p_out, args.seed),
                format!("planted-partition:n={n}:parts={parts}:p_in={p_in}:p_out={p_out}"),
            )
        }
    };
    if graph.n() == 0 {
        return Err(Error::InvalidParameter(
            "graph needs at least one node".into(),
        ));
    }
    fs::write(&args.out, graph.to_string())?;
    let input = InputDescriptor {
        path: Some(args.out.display().to_string()),
        generator: Some(spec),
        seed: Some(args.seed),
        kind: "graph",
        rows: graph.n(),
        cols: graph.n(),
    };
    let report = RunReport::new(
        "gen",
        input,
        params(&[("edges", graph.edge_count().to_string())]),
    );
    Ok(report.finish())
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<RunReport> {
    positive_eps(args.epsilon)?;
    let input = read_input(&args.input)?;
    let a = input.matrix();
    let opts = args.budget.engine();
    let run = match args.atoms {
        AtomKind::Rank => {
            engine::strong_decompose_rank_with(a, args.epsilon, args.f, args.seed, &opts)?
        }
        AtomKind::Cut => {
            engine::strong_decompose_cut_with(a, args.epsilon, args.f, args.mode, args.seed, &opts)?
        }
    };
    let mut report = RunReport::new(
        "decompose",
        describe(&args.input, &input),
        params(&[
            ("atoms", value_name(args.atoms)),
            ("mode", args.mode.to_string()),
            ("epsilon", format!("{:.16e}", args.epsilon)),
            ("f", args.f.to_string()),
            ("seed", args.seed.to_string()),
        ]),
    );
    let rounds = run.rounds() as u64;
    let bound = engine::f_iterate(args.f, rounds);
    let eps2 = args.epsilon * args.epsilon;
    report.checks.push(Check::new(
        "rounds < eps^-2",
        rounds as f64,
        Some(1.0 / eps2),
        Relation::Less,
    ));
    report.checks.push(Check::new(
        "k_witness <= f_iterate(f, rounds)",
        run.k_witness as f64,
        match bound {
            engine::Bound::Finite(b) => Some(b as f64),
            engine::Bound::Saturated => None,
        },
        Relation::LessEq,
    ));
    report.f_iterate_bound = Some(bound.to_string());
    report.trace = Some(run.trace);
    Ok(report.finish())
}

pub fn cmd_norms(args: &NormsArgs) -> Result<RunReport> {
    let input = read_input(&args.input)?;
    let a = input.matrix();
    let budget = args.budget.budget();
    let mut values = Vec::with_capacity(args.which.len());
    for which in &args.which {
        let name = which.to_string();
        let plain = |value, method| NormValue {
            which: name.clone(),
            value,
            method,
            rows: None,
            cols: None,
        };
        values.push(match *which {
            NormSpec::Frob => plain(matcore::frobenius_norm(a), "exact"),
            NormSpec::Fk(k) => plain(
                matcore::f_top_k_norm(a, k, matcore::DEFAULT_TOL, args.seed)?,
                "power-iteration",
            ),
            NormSpec::Cut1 => {
                let w = match args.mode {
                    SearchMode::Exact => cutalg::cut_norm_exact_with(a, &budget)?,
                    SearchMode::Heuristic => {
                        cutalg::cut_norm_heuristic(a, args.budget.restarts, args.seed)?
                    }
                };
                NormValue {
                    which: name.clone(),
                    value: w.value,
                    method: if args.mode == SearchMode::Exact {
                        "exact"
                    } else {
                        "heuristic"
                    },
                    rows: Some(w.rows),
                    cols: Some(w.cols),
                }
            }
            NormSpec::Cutk(k) => plain(
                cutalg::black_square_norm_exact_with(a, k, &budget)?,
                "exact",
            ),
            NormSpec::Classical => plain(cutalg::classical_cut_norm_with(a, &budget)?, "exact"),
        });
    }
    let mut report = RunReport::new(
        "norms",
        describe(&args.input, &input),
        params(&[
            (
                "which",
                args.which
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("mode", args.mode.to_string()),
            ("seed", args.seed.to_string()),
        ]),
    );
    report.norms = Some(values);
    Ok(report.finish())
}

fn absorb(report: &mut RunReport, d: DiscrepancyReport, per_pair: bool) {
    let parts = d.partition.parts();
    report.exceptional_part = d.partition.exceptional();
    report.partition = Some(parts);
    if per_pair {
        report.per_pair = Some(d.per_pair);
        report.irregular_pairs = Some(d.irregular_pairs);
        report.sum_disc = Some(d.sum_disc);
        report.f_iterate_bound = Some(d.f_bound.to_string());
    }
    report.checks = d.checks;
    report.trace = Some(d.trace);
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<RunReport> {
    positive_eps(args.epsilon)?;
    let input = read_input(&args.input)?;
    let Input::Graph(g) = &input else {
        return Err(Error::InvalidParameter(
            "verify needs an edge-list graph".into(),
        ));
    };
    let opts = VerifyOptions {
        max_side: args.max_side,
        engine: args.budget.engine(),
    };
    let (eps, mode, seed) = (args.epsilon, args.mode, args.seed);
    let mut report = RunReport::new(
        "verify",
        describe(&args.input, &input),
        params(&[
            ("theorem", value_name(args.theorem)),
            ("epsilon", format!("{eps:.16e}")),
            ("mode", mode.to_string()),
            ("seed", seed.to_string()),
        ]),
    );
    match args.theorem {
        Theorem::WeakGraph => {
            let (cg, d) = graphreg::verify_weak_graph_with(g, eps, mode, seed, &opts)?;
            report.c = Some(cg.c);
            absorb(&mut report, d, false);
        }
        Theorem::Disc => absorb(
            &mut report,
            graphreg::verify_szemeredi_disc_with(g, eps, mode, seed, &opts)?,
            true,
        ),
        Theorem::Irregular => absorb(
            &mut report,
            graphreg::verify_irregularity_with(g, eps, mode, seed, &opts)?,
            true,
        ),
        Theorem::Exceptional => {
            let (_, d) = graphreg::verify_exceptional_with(g, eps, mode, seed, &opts)?;
            absorb(&mut report, d, true);
        }
    }
    Ok(report.finish())
}

fn dispatch(cli: &Cli) -> Result<(RunReport, Option<PathBuf>)> {
    Ok(match &cli.command {
        Command::Gen(a) => (cmd_gen(a)?, a.json.clone()),
        Command::Decompose(a) => (cmd_decompose(a)?, a.json.clone()),
        Command::Norms(a) => (cmd_norms(a)?, a.json.clone()),
        Command::Verify(a) => (cmd_verify(a)?, a.json.clone()),
    })
}

fn summary(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(norms) = &report.norms {
        for n in norms {
            out.push_str(&format!("{} = {:.16e} ({})\n", n.which, n.value, n.method));
        }
    }
    if let Some(t) = &report.trace {
        out.push_str(&format!(
            "{}: {} rounds, k_witness {}, certificate {:?}\n",
            t.mode,
            t.rounds.len(),
            t.k_witness,
            t.halting_certificate
        ));
    }
    for c in &report.checks {
        let bound = c.bound.map_or("inf".to_string(), |b| format!("{b:.16e}"));
        out.push_str(&format!(
            "{} {}: {:.16e} vs {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            bound
        ));
    }
    out
}

/// Runs a parsed command line; returns stdout text and the exit code.
pub fn execute(cli: &Cli) -> (String, i32) {
    let start = Instant::now();
    let outcome = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => dispatch(cli),
    };
    match outcome {
        Ok((mut report, json_path)) => {
            if cli.timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let json = report.to_json();
            let text = match json_path {
                Some(path) => match fs::write(&path, format!("{json}\n")) {
                    Ok(()) => summary(&report),
                    Err(e) => return (format!("error: {e}\n"), EXIT_USAGE),
                },
                None => format!("{json}\n"),
            };
            (text, report.exit_code())
        }
        Err(e) => (format!("error: {e}\n"), exit_code(&e)),
    }
}

/// Entry point for the binary: parse, execute, print. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (text, code) = execute(&cli);
    if code == EXIT_USAGE || code == EXIT_BUDGET || code == EXIT_CONVERGENCE {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    code
}
