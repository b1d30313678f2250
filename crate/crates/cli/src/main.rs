use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ltlplan::automaton::{
    compile, distinguishing_trace, Alphabet, AlphabetMode, AutomatonError, TraceAutomaton,
    DEFAULT_STATE_CAP,
};
use ltlplan::datagen::{
    apply_paraphrase_hook, complexity_stats, env_file_name, generate_corpus, read_corpus,
    write_corpus, Corpus, CorpusConfig, DatagenError,
};
use ltlplan::decoding::{
    compile_for, run, serve_uniform, DecodeConfig, DecodingError, GreedyPolicy, Policy,
    SubprocessPolicy, UniformPolicy,
};
use ltlplan::environment::{random_environment, DomainKind, EnvError, Environment};
use ltlplan::evaluation::{evaluate_corpus, EvalConfig, Planner};
use ltlplan::ltl::{evaluate, parse_any, Formula, LtlError};
use ltlplan::oracle::{
    default_max_len, enumerate_accepting_plans, export_training_pairs, optimal_plan, OracleError,
    PairTask, SearchLimits, DEFAULT_NODE_CAP,
};
use ltlplan::voting::{
    translate_and_vote, vote_texts, NoisyOracleTranslator, VoteResult, VotingError,
};

const DEFAULT_PLAN_CAP_TEXT: &str = "100000";

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_UNSAT: u8 = 4;
const EXIT_TIMEOUT: u8 = 5;
const EXIT_DEAD_END: u8 = 6;
const EXIT_STEP_LIMIT: u8 = 7;

const FORMAT_HELP: &str = "\
Formula grammar: docs/FORMATS.md, section \"Formulas\".
Environment, corpus and automaton files: docs/FORMATS.md.
External policy wire format: docs/PROTOCOL.md.
Exit codes: 0 ok, 1 other error, 2 usage, 3 parse error, 4 unsatisfiable,
5 timeout, 6 dead end, 7 step limit.";

#[derive(Parser)]
#[command(name = "ltlplan", version, about = "Finite-trace LTL planning toolkit", after_help = FORMAT_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output notation for formulas.
    #[arg(long, global = true, value_enum, default_value_t = Notation::Infix)]
    format: Notation,
    /// Alphabet for commands that compile a bare formula.
    #[arg(long, global = true, value_parser = parse_mode, default_value = "full")]
    alphabet: AlphabetMode,
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Per-task time limit in seconds.
    #[arg(long, global = true, default_value_t = 300.0)]
    time_limit: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Notation {
    Infix,
    Prefix,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Uniform,
    Greedy,
    Subprocess,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerKind {
    Constrained,
    Unconstrained,
    Oracle,
}

fn parse_mode(s: &str) -> Result<AlphabetMode, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula (infix or prefix) and print it.
    Parse {
        formula: String,
        /// Also print depth, width and atoms.
        #[arg(long)]
        info: bool,
    },
    /// Compile a formula to a trace automaton.
    Compile {
        formula: String,
        #[arg(long, conflicts_with = "text")]
        dot: bool,
        #[arg(long)]
        text: bool,
        /// Comma-separated atom universe; defaults to the formula's atoms.
        #[arg(long, value_delimiter = ',')]
        universe: Vec<String>,
        /// Compile over this environment's one-hot planning alphabet instead.
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Decide whether two formulas accept the same finite traces.
    CheckEquiv {
        left: String,
        right: String,
        #[arg(long, value_delimiter = ',')]
        universe: Vec<String>,
    },
    /// Majority vote over candidate formulas grouped by equivalence.
    Vote {
        /// File with one candidate per line; `-` reads stdin.
        #[arg(conflicts_with = "truth")]
        input: Option<PathBuf>,
        /// Sample candidates from a noisy translator around this formula.
        #[arg(long)]
        truth: Option<String>,
        #[arg(long, default_value_t = 0.6)]
        p: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Decode a plan under a specification.
    Plan {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Commit policy samples without automaton masking.
        #[arg(long)]
        unconstrained: bool,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Print masked actions per step to stderr.
        #[arg(long)]
        log: bool,
    },
    /// Cheapest plan by uniform-cost search over the product graph.
    OraclePlan {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        /// List accepting plans (up to this many) instead.
        #[arg(long, num_args = 0..=1, default_missing_value = DEFAULT_PLAN_CAP_TEXT)]
        enumerate: Option<usize>,
        /// Enumeration depth; defaults to twice the number of entities.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Write a random environment file.
    GenEnv {
        #[arg(long, value_parser = parse_domain, default_value = "navigation")]
        domain: DomainKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a task corpus (records.jsonl plus envs/).
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_domain, default_value = "navigation")]
        domain: DomainKind,
        #[arg(long, default_value_t = 100)]
        environments: usize,
        #[arg(long, default_value_t = 5)]
        per_environment: usize,
        /// External command that rewrites each NL description.
        #[arg(long)]
        paraphrase_cmd: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        paraphrase_arg: Vec<String>,
    },
    /// Solve every corpus task optimally and write (task, plan) pairs.
    ExportPairs {
        /// records.jsonl or the directory holding it.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Score a planner on a corpus: SF, CP, ET, PT.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = PlannerKind::Constrained)]
        planner: PlannerKind,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Also write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Omit wall-clock timings so output depends only on inputs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Syntax-tree and automaton complexity of a corpus.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        /// Emit the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Answer policy requests on stdin with uniform weights.
    PolicyServer,
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(
        long,
        conflicts_with = "spec_file",
        required_unless_present = "spec_file"
    )]
    spec: Option<String>,
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Natural-language task text passed to the policy.
    #[arg(long, default_value = "")]
    task: String,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value_t = PolicyKind::Greedy)]
    policy: PolicyKind,
    /// Program for `--policy subprocess`.
    #[arg(long)]
    policy_cmd: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    policy_arg: Vec<String>,
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

type CliResult = Result<String, Failure>;

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<LtlError> for Failure {
    fn from(e: LtlError) -> Self {
        let code = match e {
            LtlError::Syntax { .. } | LtlError::InvalidAtomName(_) => EXIT_PARSE,
            _ => EXIT_OTHER,
        };
        fail(code, e.to_string())
    }
}

impl From<AutomatonError> for Failure {
    fn from(e: AutomatonError) -> Self {
        let code = match e {
            AutomatonError::StateCapExceeded { .. } => EXIT_TIMEOUT,
            _ => EXIT_OTHER,
        };
        fail(code, e.to_string())
    }
}

impl From<DecodingError> for Failure {
    fn from(e: DecodingError) -> Self {
        let code = match &e {
            DecodingError::Unsatisfiable => EXIT_UNSAT,
            DecodingError::TimeLimit { .. } => EXIT_TIMEOUT,
            DecodingError::DeadEnd { .. } => EXIT_DEAD_END,
            DecodingError::StepLimit { .. } => EXIT_STEP_LIMIT,
            DecodingError::Automaton(a) => return a.clone().into(),
            _ => EXIT_OTHER,
        };
        fail(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match &e {
            OracleError::Unsatisfiable => EXIT_UNSAT,
            OracleError::TimeLimit | OracleError::NodeCapExceeded { .. } => EXIT_TIMEOUT,
            OracleError::Automaton(a) => return a.clone().into(),
            _ => EXIT_OTHER,
        };
        fail(code, e.to_string())
    }
}

impl From<VotingError> for Failure {
    fn from(e: VotingError) -> Self {
        match e {
            VotingError::Automaton(a) => a.into(),
            e => fail(EXIT_OTHER, e.to_string()),
        }
    }
}

impl From<EnvError> for Failure {
    fn from(e: EnvError) -> Self {
        fail(EXIT_OTHER, e.to_string())
    }
}

impl From<DatagenError> for Failure {
    fn from(e: DatagenError) -> Self {
        match e {
            DatagenError::Ltl(l) => l.into(),
            e => fail(EXIT_OTHER, e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        fail(EXIT_OTHER, e.to_string())
    }
}

fn render(f: &Formula, notation: Notation) -> String {
    match notation {
        Notation::Infix => f.to_infix(),
        Notation::Prefix => f.to_prefix(),
    }
}

fn parse_formula(text: &str) -> Result<Formula, Failure> {
    Ok(parse_any(text)?)
}

fn universe_for(explicit: &[String], formulas: &[&Formula]) -> Vec<String> {
    if !explicit.is_empty() {
        return explicit.to_vec();
    }
    let mut atoms = std::collections::BTreeSet::new();
    for f in formulas {
        atoms.extend(f.atoms());
    }
    atoms.into_iter().collect()
}

fn time_limit(g: &Global) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(g.time_limit)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| {
            fail(
                EXIT_OTHER,
                "--time-limit must be a positive number of seconds",
            )
        })
}

fn corpus_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("records.jsonl")
    } else {
        p.to_path_buf()
    }
}

fn load_corpus(p: &Path) -> Result<(PathBuf, Corpus), Failure> {
    let path = corpus_path(p);
    let corpus = read_corpus(&path)?;
    Ok((path, corpus))
}

fn load_task(t: &TaskArgs) -> Result<(Environment, Formula), Failure> {
    let env = Environment::load(&t.env)?;
    let text = match (&t.spec, &t.spec_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| fail(EXIT_OTHER, format!("{}: {e}", p.display())))?,
        (None, None) => return Err(fail(EXIT_OTHER, "one of --spec or --spec-file is required")),
    };
    Ok((env, parse_formula(text.trim())?))
}

fn make_policy(p: &PolicyArgs) -> Result<Box<dyn Policy>, DecodingError> {
    Ok(match p.policy {
        PolicyKind::Uniform => Box::new(UniformPolicy),
        PolicyKind::Greedy => Box::new(GreedyPolicy::default()),
        PolicyKind::Subprocess => {
            let cmd = p.policy_cmd.as_deref().ok_or_else(|| {
                DecodingError::Policy("--policy subprocess needs --policy-cmd".into())
            })?;
            Box::new(SubprocessPolicy::spawn(cmd, &p.policy_arg)?)
        }
    })
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<Option<String>, Failure> {
    match out {
        Some(p) => {
            std::fs::write(p, text)
                .map_err(|e| fail(EXIT_OTHER, format!("{}: {e}", p.display())))?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

fn cmd_compile(
    g: &Global,
    formula: &str,
    dot: bool,
    universe: &[String],
    env: &Option<PathBuf>,
) -> CliResult {
    let f = parse_formula(formula)?;
    let automaton: TraceAutomaton = match env {
        Some(path) => compile_for(&Environment::load(path)?, &f, g.state_cap)?,
        None => {
            let alphabet = Alphabet::new(universe_for(universe, &[&f]), g.alphabet)?;
            compile(&f, &alphabet, g.state_cap)?
        }
    };
    Ok(if dot {
        automaton.to_dot()
    } else {
        automaton.to_text()
    })
}

fn cmd_check_equiv(g: &Global, left: &str, right: &str, universe: &[String]) -> CliResult {
    let (f, h) = (parse_formula(left)?, parse_formula(right)?);
    let alphabet = Alphabet::new(universe_for(universe, &[&f, &h]), g.alphabet)?;
    match distinguishing_trace(&f, &h, &alphabet, g.state_cap)? {
        None => Ok("equivalent\n".into()),
        Some(trace) => {
            let steps: Vec<String> = trace
                .iter()
                .map(|l| format!("{{{}}}", l.iter().cloned().collect::<Vec<_>>().join(",")))
                .collect();
            Ok(format!("not equivalent\nwitness [{}]\n", steps.join(" ")))
        }
    }
}

fn vote_report(r: &VoteResult, g: &Global) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "winner {}", render(&r.representative, g.format));
    let _ = writeln!(out, "candidates {}", r.partition.candidates.len());
    let _ = writeln!(out, "dropped {}", r.dropped);
    let _ = writeln!(out, "tie {}", r.tie);
    let _ = writeln!(out, "equivalence_calls {}", r.partition.equivalence_calls);
    for (i, grp) in r.partition.groups.iter().enumerate() {
        let states = grp
            .states
            .map_or_else(|| "-".to_string(), |s| s.to_string());
        let mark = if i == r.winner { " *" } else { "" };
        let _ = writeln!(
            out,
            "group {i} size={} states={states} {}{mark}",
            grp.size(),
            render(&grp.representative, g.format)
        );
    }
    out
}

fn cmd_vote(
    g: &Global,
    input: &Option<PathBuf>,
    truth: &Option<String>,
    p: f64,
    samples: usize,
) -> CliResult {
    let result = if let Some(t) = truth {
        if !(0.0..=1.0).contains(&p) {
            return Err(fail(EXIT_OTHER, "--p must lie in [0, 1]"));
        }
        let truth = parse_formula(t)?;
        let universe: Vec<String> = truth.atoms().into_iter().collect();
        let mut translator =
            NoisyOracleTranslator::new(truth, p, universe, ChaCha8Rng::seed_from_u64(g.seed))?;
        translate_and_vote(&mut translator, "", samples, g.state_cap)?
    } else {
        let lines: Vec<String> = match input.as_deref() {
            None => return Err(fail(EXIT_OTHER, "give a candidate file, `-`, or --truth")),
            Some(p) if p == Path::new("-") => {
                io::stdin().lock().lines().collect::<Result<_, _>>()?
            }
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| fail(EXIT_OTHER, format!("{}: {e}", p.display())))?
                .lines()
                .map(str::to_string)
                .collect(),
        };
        let lines: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
        vote_texts(&lines, g.state_cap)?
    };
    Ok(vote_report(&result, g))
}

fn cmd_plan(
    g: &Global,
    task: &TaskArgs,
    policy: &PolicyArgs,
    unconstrained: bool,
    max_steps: Option<usize>,
    log: bool,
) -> CliResult {
    let (env, spec) = load_task(task)?;
    let deadline = Instant::now() + time_limit(g)?;
    let automaton = compile_for(&env, &spec, g.state_cap)?;
    let mut policy = make_policy(policy)?;
    let config = DecodeConfig {
        seed: g.seed,
        max_steps,
        constrained: !unconstrained,
        deadline: Some(deadline),
    };
    let outcome = run(&env, &task.task, &automaton, policy.as_mut(), &config)?;
    if log {
        let mut err = io::stderr().lock();
        for s in &outcome.log {
            for m in &s.masked {
                let _ = writeln!(
                    err,
                    "step {} masked {} p={:.4}",
                    s.step, m.action, m.probability
                );
            }
        }
    }
    let (trace, cost) = env.simulate(&outcome.plan)?;
    let safe = evaluate(&spec, &trace, 0)?;
    let mut out = String::new();
    for a in outcome.plan.actions() {
        let _ = writeln!(out, "{a}");
    }
    let _ = writeln!(out, "cost {cost:.4}");
    let _ = writeln!(out, "safe {safe}");
    Ok(out)
}

fn cmd_oracle_plan(
    g: &Global,
    task: &TaskArgs,
    node_cap: usize,
    enumerate: Option<usize>,
    max_len: Option<usize>,
) -> CliResult {
    let (env, spec) = load_task(task)?;
    let deadline = Instant::now() + time_limit(g)?;
    let automaton = compile_for(&env, &spec, g.state_cap)?;
    let mut out = String::new();
    if let Some(cap) = enumerate {
        let max_len = max_len.unwrap_or_else(|| default_max_len(&env));
        let e = enumerate_accepting_plans(&env, &automaton, max_len, cap)?;
        for (plan, cost) in &e.plans {
            let _ = writeln!(out, "{cost:.4}\t{plan}");
        }
        let _ = writeln!(
            out,
            "plans {} max_len {} truncated {}",
            e.plans.len(),
            e.max_len,
            e.truncated
        );
        return Ok(out);
    }
    let limits = SearchLimits {
        node_cap,
        deadline: Some(deadline),
    };
    let best = optimal_plan(&env, &automaton, &limits)?;
    for a in best.plan.actions() {
        let _ = writeln!(out, "{a}");
    }
    let _ = writeln!(out, "cost {:.4}", best.cost);
    let _ = writeln!(out, "expanded {}", best.expanded);
    Ok(out)
}

fn cmd_gen_corpus(
    g: &Global,
    out: &Path,
    domain: DomainKind,
    environments: usize,
    per_environment: usize,
    hook: &Option<String>,
    hook_args: &[String],
) -> CliResult {
    let config = CorpusConfig {
        domain,
        environments,
        per_environment,
        seed: g.seed,
        generator: ltlplan::datagen::GeneratorConfig {
            state_cap: g.state_cap,
            ..Default::default()
        },
    };
    let mut corpus = generate_corpus(&config)?;
    if let Some(cmd) = hook {
        apply_paraphrase_hook(&mut corpus.records, cmd, hook_args)?;
    }
    let path = write_corpus(out, &corpus)?;
    Ok(format!(
        "wrote {} records over {} environments to {}\n",
        corpus.records.len(),
        corpus.environments.len(),
        path.display()
    ))
}

fn cmd_export_pairs(
    g: &Global,
    corpus: &Path,
    out: &Option<PathBuf>,
    node_cap: usize,
) -> CliResult {
    let (_, corpus) = load_corpus(corpus)?;
    let mut tasks = Vec::with_capacity(corpus.records.len());
    for r in &corpus.records {
        let env = corpus.environment(&r.environment_id).ok_or_else(|| {
            fail(
                EXIT_OTHER,
                format!("unknown environment {}", r.environment_id),
            )
        })?;
        tasks.push(PairTask {
            env,
            env_file: Some(env_file_name(env)),
            nl: r.nl.clone(),
            spec: r.spec()?,
        });
    }
    let limits = SearchLimits {
        node_cap,
        deadline: None,
    };
    let (pairs, skipped) = export_training_pairs(&tasks, g.state_cap, &limits);
    let mut text = String::new();
    for p in &pairs {
        text.push_str(&serde_json::to_string(p).expect("pair serializes"));
        text.push('\n');
    }
    let mut err = io::stderr().lock();
    for s in &skipped {
        let _ = writeln!(err, "skipped task {}: {}", s.index, s.reason);
    }
    let summary = format!(
        "exported {} pairs, skipped {}\n",
        pairs.len(),
        skipped.len()
    );
    Ok(match write_output(out, &text)? {
        Some(t) => t,
        None => summary,
    })
}

fn cmd_evaluate(
    g: &Global,
    corpus: &Path,
    planner: PlannerKind,
    policy: &PolicyArgs,
    report: &Option<PathBuf>,
    threads: usize,
    no_timing: bool,
) -> CliResult {
    let (_, corpus) = load_corpus(corpus)?;
    if matches!(policy.policy, PolicyKind::Subprocess) && policy.policy_cmd.is_none() {
        return Err(fail(EXIT_OTHER, "--policy subprocess needs --policy-cmd"));
    }
    let factory = || make_policy(policy);
    let planner = match planner {
        PlannerKind::Constrained => Planner::Constrained(&factory),
        PlannerKind::Unconstrained => Planner::Unconstrained(&factory),
        PlannerKind::Oracle => Planner::Oracle,
    };
    let config = EvalConfig {
        seed: g.seed,
        time_limit: time_limit(g)?,
        state_cap: g.state_cap,
        threads,
        ..Default::default()
    };
    let mut r =
        evaluate_corpus(&corpus, &planner, &config).map_err(|e| fail(EXIT_OTHER, e.to_string()))?;
    if no_timing {
        r = r.without_timing();
    }
    if let Some(p) = report {
        let json = serde_json::to_string_pretty(&r).expect("report serializes");
        std::fs::write(p, json + "\n")
            .map_err(|e| fail(EXIT_OTHER, format!("{}: {e}", p.display())))?;
    }
    Ok(r.table(!no_timing))
}

fn cmd_stats(g: &Global, corpus: &Path, json: bool) -> CliResult {
    let (_, corpus) = load_corpus(corpus)?;
    let s = complexity_stats(&corpus, g.state_cap)?;
    if json {
        return Ok(serde_json::to_string_pretty(&s).expect("stats serialize") + "\n");
    }
    let mut out = String::new();
    let _ = writeln!(out, "records {}", s.records);
    let _ = writeln!(out, "mean_depth {:.2}", s.mean_depth);
    let _ = writeln!(out, "mean_width {:.2}", s.mean_width);
    let _ = writeln!(out, "mean_states {:.1}", s.mean_states);
    let _ = writeln!(out, "mean_edges {:.1}", s.mean_edges);
    let _ = writeln!(out, "nl_collisions {}", s.nl_collisions);
    let hist = |h: &std::collections::BTreeMap<usize, usize>| {
        h.iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "depth_histogram {}", hist(&s.depth_histogram));
    let _ = writeln!(out, "width_histogram {}", hist(&s.width_histogram));
    Ok(out)
}

fn dispatch(cli: &Cli) -> CliResult {
    let g = &cli.global;
    match &cli.command {
        Command::Parse { formula, info } => {
            let f = parse_formula(formula)?;
            let mut out = render(&f, g.format) + "\n";
            if *info {
                let atoms: Vec<String> = f.atoms().into_iter().collect();
                let _ = writeln!(
                    out,
                    "depth {}\nwidth {}\natoms {}",
                    f.depth(),
                    f.width(),
                    atoms.join(" ")
                );
            }
            Ok(out)
        }
        Command::Compile {
            formula,
            dot,
            text: _,
            universe,
            env,
        } => cmd_compile(g, formula, *dot, universe, env),
        Command::CheckEquiv {
            left,
            right,
            universe,
        } => cmd_check_equiv(g, left, right, universe),
        Command::Vote {
            input,
            truth,
            p,
            samples,
        } => cmd_vote(g, input, truth, *p, *samples),
        Command::Plan {
            task,
            policy,
            unconstrained,
            max_steps,
            log,
        } => cmd_plan(g, task, policy, *unconstrained, *max_steps, *log),
        Command::OraclePlan {
            task,
            node_cap,
            enumerate,
            max_len,
        } => cmd_oracle_plan(g, task, *node_cap, *enumerate, *max_len),
        Command::GenEnv { domain, out } => {
            let env = random_environment(*domain, g.seed);
            let json = env.to_json() + "\n";
            Ok(write_output(out, &json)?.unwrap_or_default())
        }
        Command::GenCorpus {
            out,
            domain,
            environments,
            per_environment,
            paraphrase_cmd,
            paraphrase_arg,
        } => cmd_gen_corpus(
            g,
            out,
            *domain,
            *environments,
            *per_environment,
            paraphrase_cmd,
            paraphrase_arg,
        ),
        Command::ExportPairs {
            corpus,
            out,
            node_cap,
        } => cmd_export_pairs(g, corpus, out, *node_cap),
        Command::Evaluate {
            corpus,
            planner,
            policy,
            report,
            threads,
            no_timing,
        } => cmd_evaluate(g, corpus, *planner, policy, report, *threads, *no_timing),
        Command::Stats { corpus, json } => cmd_stats(g, corpus, *json),
        Command::PolicyServer => {
            serve_uniform(io::stdin().lock(), io::stdout().lock())?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(EXIT_OTHER);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == EXIT_PARSE {
                eprintln!("see docs/FORMATS.md, section \"Formulas\", for the grammar");
            }
            ExitCode::from(f.code)
        }
    }
}
