//! Command-line front end. [`dispatch`] takes argv and explicit streams so it
//! can be driven from tests.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_benchmark, sign_test, to_csv, Algorithm, BenchConfig};
use crate::exact::{decide_cdpc_with, solve_exact_with, ExactOptions, SearchBudget};
use crate::ga::{run_ga, GaConfig};
use crate::gen::{generate, FitnessMode, GenParams, SizeRange};
use crate::greedy::solve_greedy;
use crate::model::{
    parse_instance, parse_tree, serialize_instance, serialize_tree, Instance, InterviewTree,
};
use crate::rational::Rational;
use crate::reduction::{cdpc_to_gcopc, transform_sc, ScInstance};
use crate::verify::{decide_cdpc_tree, verify_gcopc, ReportDoc};

pub const SEED_ENV: &str = "PRIVTREE_SEED";

#[derive(Debug, Parser)]
#[command(name = "privtree", version, about = "Privacy-constrained interview trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Build an interview tree for an instance.
    Solve(SolveArgs),
    /// Check a tree against an instance and report its goodness.
    Verify(VerifyArgs),
    /// Decide a decision-mode instance exactly.
    Decide(DecideArgs),
    /// Turn a set-cover instance into a decision-mode instance.
    ReduceSc(ConvertArgs),
    /// Turn a decision-mode instance into an optimization instance.
    GcopcFromCdpc(ConvertArgs),
    /// Compare algorithms over a set of instances.
    Bench(BenchArgs),
    /// Paired one-sided sign test over two score columns of a CSV file.
    Signtest(SigntestArgs),
    /// Walk a tree interactively, reading one answer per line.
    Conduct(ConductArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value = "2000..4000")]
    types: SizeRange,
    #[arg(long, default_value = "150..300")]
    questions: SizeRange,
    #[arg(long, default_value = "2..5")]
    answers: SizeRange,
    #[arg(long, default_value = "4..9")]
    private: SizeRange,
    #[arg(long, default_value = "10..15")]
    limit: SizeRange,
    #[arg(long, default_value_t = 100)]
    quantity: u64,
    #[arg(long, value_enum, default_value_t = FitnessMode::Uniform)]
    fitness: FitnessMode,
    #[arg(long, default_value = "1/10")]
    slack: Rational,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Genetic-search settings. Flags override a `--ga-config` document, which
/// overrides the defaults.
#[derive(Debug, Args)]
struct GaArgs {
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Population size (default 20).
    #[arg(long)]
    pop: Option<usize>,
    /// Generations (default 400).
    #[arg(long)]
    iters: Option<usize>,
    /// Mutation probability (default 0.2).
    #[arg(long)]
    mutation: Option<f64>,
    /// Question draws per node before giving up (default 100).
    #[arg(long)]
    attempts: Option<usize>,
    /// JSON document with any of the GaConfig fields.
    #[arg(long)]
    ga_config: Option<PathBuf>,
}

impl GaArgs {
    fn config(&self, reinforced: bool) -> Result<GaConfig, Failure> {
        let mut c = match &self.ga_config {
            Some(path) => serde_json::from_str::<GaConfig>(&read_file(path)?)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?,
            None => GaConfig::default(),
        };
        c.reinforced = reinforced;
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.pop {
            c.population_size = v;
        }
        if let Some(v) = self.iters {
            c.iterations = v;
        }
        if let Some(v) = self.mutation {
            c.mutation_rate = v;
        }
        if let Some(v) = self.attempts {
            c.repair_attempts = v;
        }
        c.validate().map_err(usage)?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Wall-clock cap for exact search, in seconds.
    #[arg(long)]
    time_cap: Option<f64>,
    /// Cap on expanded search nodes.
    #[arg(long)]
    node_cap: Option<u64>,
    /// Remember solved (population, depth) states.
    #[arg(long)]
    memo: bool,
}

impl BudgetArgs {
    fn budget(&self) -> Result<SearchBudget, Failure> {
        let time_cap = match self.time_cap {
            Some(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(Failure::Usage(format!("--time-cap must be positive, got {s}")))
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        if self.node_cap == Some(0) {
            return Err(Failure::Usage("--node-cap must be positive".into()));
        }
        Ok(SearchBudget { time_cap, node_cap: self.node_cap })
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Greedy)]
    algo: Algorithm,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Where to write the tree; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    tree: PathBuf,
    /// Also apply the decision thresholds of the instance.
    #[arg(long)]
    cdpc: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DecideArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Where to write the witness tree when the answer is positive.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    memo: bool,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Instance files; the file stem is the instance id.
    #[arg(short, long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "greedy,ga,ga-reinforced")]
    algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[command(flatten)]
    ga: GaArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Record wall times in the CSV (makes the output run-dependent).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SigntestArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Column holding the A scores.
    #[arg(long, default_value = "basic")]
    a: String,
    /// Column holding the B scores.
    #[arg(long, default_value = "reinforced")]
    b: String,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ConductArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    tree: PathBuf,
}

#[derive(Debug)]
enum Failure {
    /// Bad flags, unreadable files, invalid documents: exit 2.
    Usage(String),
    /// Well-formed input with a negative outcome: exit 1.
    Domain(String),
}

type Outcome = Result<i32, Failure>;

struct Io<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// exit code: 0 success, 1 domain failure, 2 usage or validation error.
pub fn dispatch<I, T>(
    argv: I,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { input, out, err };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, &mut io),
        Command::Solve(a) => cmd_solve(a, &mut io),
        Command::Verify(a) => cmd_verify(a, &mut io),
        Command::Decide(a) => cmd_decide(a, &mut io),
        Command::ReduceSc(a) => cmd_reduce_sc(a, &mut io),
        Command::GcopcFromCdpc(a) => cmd_gcopc_from_cdpc(a, &mut io),
        Command::Bench(a) => cmd_bench(a, &mut io),
        Command::Signtest(a) => cmd_signtest(a, &mut io),
        Command::Conduct(a) => cmd_conduct(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            2
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(io.err, "{msg}");
            1
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    dispatch(std::env::args_os(), &mut input, &mut out, &mut err)
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn write_io(e: std::io::Error) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path, io: &mut Io) -> Result<Instance, Failure> {
    let (inst, warnings) =
        parse_instance(&read_file(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    for w in warnings {
        writeln!(io.err, "warning: {w}").map_err(write_io)?;
    }
    Ok(inst)
}

fn load_tree(path: &Path, inst: &Instance) -> Result<InterviewTree, Failure> {
    parse_tree(&read_file(path)?, inst).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, or to stdout when no path is given.
fn emit(text: &str, path: Option<&Path>, io: &mut Io) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => writeln!(io.out, "{text}").map_err(write_io),
    }
}

/// Summary lines go to stdout unless stdout carries the main document.
fn summary<'a>(io: &'a mut Io, document_on_stdout: bool) -> &'a mut dyn Write {
    if document_on_stdout {
        &mut *io.err
    } else {
        &mut *io.out
    }
}

fn show(r: Rational) -> String {
    format!("{r} ({})", r.decimal4())
}

fn cmd_generate(a: GenerateArgs, io: &mut Io) -> Outcome {
    let params = GenParams {
        n_types: a.types,
        n_questions: a.questions,
        answers_per_question: a.answers,
        private_count: a.private,
        question_limit: a.limit,
        quantity_per_type: a.quantity,
        fitness_mode: a.fitness,
        privacy_slack: a.slack,
        seed: a.seed,
    };
    let inst = generate(&params).map_err(usage)?;
    emit(&serialize_instance(&inst), a.output.as_deref(), io)?;
    writeln!(
        summary(io, a.output.is_none()),
        "generated {} types, {} questions, {} privacy rules, limit {}",
        inst.n_types(),
        inst.n_questions(),
        inst.privacy_rules().len(),
        inst.question_limit()
    )
    .map_err(write_io)?;
    Ok(0)
}

fn cmd_solve(a: SolveArgs, io: &mut Io) -> Outcome {
    let inst = load_instance(&a.input, io)?;
    let domain = |e: &dyn std::fmt::Display| Failure::Domain(format!("cannot solve: {e}"));
    let (tree, value, note) = match a.algo {
        Algorithm::Greedy => {
            let tree = solve_greedy(&inst).map_err(|e| domain(&e))?;
            let value = crate::verify::goodness(&tree, &inst).expect("greedy trees are well formed");
            (tree, value, String::new())
        }
        Algorithm::Exact => {
            let options = ExactOptions { memo: a.budget.memo, ..ExactOptions::default() };
            let sol = solve_exact_with(&inst, a.budget.budget()?, options).map_err(|e| domain(&e))?;
            let note = if sol.optimal {
                format!(", optimal, {} nodes", sol.nodes)
            } else {
                format!(", budget exhausted after {} nodes (best found)", sol.nodes)
            };
            (sol.tree, sol.goodness, note)
        }
        Algorithm::Ga | Algorithm::GaReinforced => {
            let config = a.ga.config(a.algo == Algorithm::GaReinforced)?;
            let record = run_ga(&inst, &config).map_err(|e| domain(&e))?;
            (record.best_tree, record.best_goodness, format!(", seed {}", config.seed))
        }
    };
    emit(&serialize_tree(&tree, &inst), a.output.as_deref(), io)?;
    writeln!(summary(io, a.output.is_none()), "{}: goodness {}{note}", a.algo, show(value))
        .map_err(write_io)?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs, io: &mut Io) -> Outcome {
    let inst = load_instance(&a.input, io)?;
    let tree = load_tree(&a.tree, &inst)?;
    let report = verify_gcopc(&tree, &inst).map_err(usage)?;
    let cdpc = if a.cdpc {
        Some(decide_cdpc_tree(&tree, &inst).map_err(usage)?)
    } else {
        None
    };
    if a.json {
        let doc = ReportDoc::new(&report, &inst, cdpc);
        writeln!(io.out, "{}", serde_json::to_string_pretty(&doc).expect("report serializes"))
            .map_err(write_io)?;
    } else {
        writeln!(
            io.out,
            "{}, goodness {}, {} leaves, depth {}",
            if report.feasible { "feasible" } else { "infeasible" },
            show(report.goodness),
            report.leaf_count,
            report.depth
        )
        .map_err(write_io)?;
        let qs = inst.questions();
        for v in report.first_per_leaf() {
            let r = inst.privacy_rules()[v.rule];
            let path: Vec<String> = v
                .path
                .iter()
                .map(|&(q, ans)| format!("{}={}", qs[q].id, qs[q].answers[ans]))
                .collect();
            writeln!(
                io.out,
                "  violation at [{}]: {} = {} ratio {} outside [{}, {}]",
                path.join(", "),
                qs[r.question].id,
                qs[r.question].answers[r.answer],
                show(v.ratio),
                r.low,
                r.high
            )
            .map_err(write_io)?;
        }
        if let Some(accepted) = cdpc {
            writeln!(io.out, "cdpc {}", if accepted { "accepted" } else { "rejected" })
                .map_err(write_io)?;
        }
    }
    Ok(if report.feasible && cdpc != Some(false) { 0 } else { 1 })
}

fn cmd_decide(a: DecideArgs, io: &mut Io) -> Outcome {
    let inst = load_instance(&a.input, io)?;
    let options = ExactOptions { memo: a.memo, ..ExactOptions::default() };
    let decision = decide_cdpc_with(&inst, options).map_err(usage)?;
    if let (Some(tree), Some(path)) = (&decision.witness, a.output.as_deref()) {
        emit(&serialize_tree(tree, &inst), Some(path), io)?;
    }
    writeln!(
        io.out,
        "{} ({} nodes)",
        if decision.accepted { "accepted" } else { "rejected" },
        decision.nodes
    )
    .map_err(write_io)?;
    Ok(if decision.accepted { 0 } else { 1 })
}

fn cmd_reduce_sc(a: ConvertArgs, io: &mut Io) -> Outcome {
    let sc = ScInstance::parse(&read_file(&a.input)?).map_err(usage)?;
    let inst = transform_sc(&sc);
    emit(&serialize_instance(&inst), a.output.as_deref(), io)?;
    let meta = inst.meta();
    let line = if sc.is_trivial() {
        "k covers every set; emitted a fixed positive instance".to_string()
    } else {
        format!(
            "omega {}, a {}, b {}, x {}, y {}, {} types, {} questions",
            meta["omega"],
            meta["a"],
            meta["b"],
            meta["x"],
            meta["y"],
            inst.n_types(),
            inst.n_questions()
        )
    };
    writeln!(summary(io, a.output.is_none()), "{line}").map_err(write_io)?;
    Ok(0)
}

fn cmd_gcopc_from_cdpc(a: ConvertArgs, io: &mut Io) -> Outcome {
    let inst = load_instance(&a.input, io)?;
    let out = cdpc_to_gcopc(&inst).map_err(usage)?;
    emit(&serialize_instance(&out), a.output.as_deref(), io)?;
    Ok(0)
}

fn cmd_bench(a: BenchArgs, io: &mut Io) -> Outcome {
    let mut instances = Vec::with_capacity(a.input.len());
    for path in &a.input {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        instances.push((id, load_instance(path, io)?));
    }
    let ga = a.ga.config(false)?;
    let config = BenchConfig {
        runs_per_ga: a.runs,
        base_seed: ga.seed,
        ga,
        exact_budget: a.budget.budget()?,
    };
    let result = run_benchmark(&instances, &a.algos, &config).map_err(usage)?;
    let csv = to_csv(&result, a.timings);
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&result).expect("bench results serialize");
        emit(&text, Some(path), io)?;
    }
    match &a.csv {
        Some(path) => emit(&csv, Some(path), io)?,
        None => write!(io.out, "{csv}").map_err(write_io)?,
    }
    Ok(0)
}

fn read_column(path: &Path, name: &str) -> Result<Vec<Rational>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(usage)?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| usage(format!("{}: no column {name:?}", path.display())))?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(usage)?;
            let cell = rec.get(col).unwrap_or("").trim();
            cell.parse::<Rational>()
                .map_err(|e| usage(format!("{}: row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn cmd_signtest(a: SigntestArgs, io: &mut Io) -> Outcome {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let xs = read_column(&a.input, &a.a)?;
    let ys = read_column(&a.input, &a.b)?;
    let r = sign_test(&xs, &ys, a.alpha).map_err(|e| match e {
        crate::bench::StatsError::AllTied => Failure::Domain(e.to_string()),
        _ => usage(e),
    })?;
    if a.json {
        writeln!(io.out, "{}", serde_json::to_string_pretty(&r).expect("result serializes"))
            .map_err(write_io)?;
    } else {
        writeln!(
            io.out,
            "one-sided sign test ({} > {}): statistic {}, n {}, ties {}, p {:.4} ({}), alpha {}: H0 {}",
            a.b,
            a.a,
            r.statistic,
            r.n_effective,
            r.ties,
            r.p_value,
            r.p_exact,
            r.alpha,
            if r.reject_h0 { "rejected" } else { "not rejected" }
        )
        .map_err(write_io)?;
    }
    Ok(0)
}

fn cmd_conduct(a: ConductArgs, io: &mut Io) -> Outcome {
    let inst = load_instance(&a.input, io)?;
    let tree = load_tree(&a.tree, &inst)?;
    crate::verify::validate_tree(&tree, &inst).map_err(usage)?;
    let mut pop = inst.root();
    let mut node = &tree;
    let mut asked = 0;
    while let InterviewTree::Ask { question, .. } = node {
        let q = &inst.questions()[*question];
        asked += 1;
        writeln!(io.out, "Question {asked}: {}", q.id).map_err(write_io)?;
        for (i, ans) in q.answers.iter().enumerate() {
            writeln!(io.out, "  {}) {ans}", i + 1).map_err(write_io)?;
        }
        let answer = loop {
            write!(io.out, "> ").map_err(write_io)?;
            io.out.flush().map_err(write_io)?;
            let mut line = String::new();
            if io.input.read_line(&mut line).map_err(usage)? == 0 {
                return Err(Failure::Domain("interview abandoned: input ended".into()));
            }
            let reply = line.trim();
            let chosen = q.answers.iter().position(|x| x == reply).or_else(|| {
                reply.parse::<usize>().ok().filter(|&n| (1..=q.answers.len()).contains(&n)).map(|n| n - 1)
            });
            match chosen {
                Some(ans) if inst.restrict(&pop, *question, ans).is_some() => break ans,
                Some(_) => writeln!(io.err, "no candidate gives that answer here; try again"),
                None => writeln!(io.err, "unrecognized answer {reply:?}; try again"),
            }
            .map_err(write_io)?;
        };
        pop = inst.restrict(&pop, *question, answer).expect("checked above");
        match node.branch(answer) {
            Some(next) => node = next,
            None => break,
        }
    }
    writeln!(
        io.out,
        "Interview finished after {asked} question(s): {} candidates remain, fitness ratio {}",
        pop.total_quantity(),
        show(inst.fit_ratio(&pop))
    )
    .map_err(write_io)?;
    for r in inst.privacy_rules() {
        let q = &inst.questions()[r.question];
        let ratio = inst.answer_ratio(&pop, r.question, r.answer);
        writeln!(
            io.out,
            "  {} = {}: ratio {} (allowed [{}, {}])",
            q.id,
            q.answers[r.answer],
            show(ratio),
            r.low,
            r.high
        )
        .map_err(write_io)?;
    }
    Ok(0)
}
