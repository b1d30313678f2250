//! Template-grammar generation of specifications, structured-English
//! rendering, task assembly and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::{AutomatonError, DEFAULT_STATE_CAP};
use crate::decoding::compile_for;
use crate::environment::{random_environment, DomainKind, EnvError, Environment};
use crate::ltl::{conjoin, parse_any, Formula, GroundingMap, LtlError};
use crate::oracle::{optimal_plan, SearchLimits};

/// Draws allowed per record before giving up.
pub const RESAMPLE_BUDGET: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("template needs {needed} placeholders, {available} available")]
    UniverseTooSmall { needed: usize, available: usize },
    #[error("constraint count must be between 1 and 5, got {0}")]
    BadConstraintCount(usize),
    #[error("no satisfiable task after {budget} draws; last draw: {last}")]
    BudgetExhausted { budget: usize, last: String },
    #[error("record {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("paraphrase hook failed: {0}")]
    Hook(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Template classes of the specification grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateClass {
    /// `F a & F b & ...`
    VisitAll,
    /// `!b U a`
    Ordering,
    /// `G(a -> X b)`
    ImmediateSuccessor,
    /// `G(a -> (!b U c))`
    AvoidanceUntil,
    /// `G !a`
    GlobalAvoid,
}

impl TemplateClass {
    pub const CONSTRAINTS: [TemplateClass; 4] = [
        TemplateClass::Ordering,
        TemplateClass::ImmediateSuccessor,
        TemplateClass::AvoidanceUntil,
        TemplateClass::GlobalAvoid,
    ];

    /// Placeholders consumed; `None` for the variable-arity visit-all.
    pub fn arity(self) -> Option<usize> {
        match self {
            TemplateClass::VisitAll => None,
            TemplateClass::Ordering | TemplateClass::ImmediateSuccessor => Some(2),
            TemplateClass::AvoidanceUntil => Some(3),
            TemplateClass::GlobalAvoid => Some(1),
        }
    }
}

/// Instantiates a template on the given atoms, in order.
pub fn instantiate(class: TemplateClass, atoms: &[&str]) -> Result<Formula, DatagenError> {
    let need = class.arity().unwrap_or(1);
    if atoms.len() < need {
        return Err(DatagenError::UniverseTooSmall {
            needed: need,
            available: atoms.len(),
        });
    }
    let a = |i: usize| Formula::atom(atoms[i]);
    Ok(match class {
        TemplateClass::VisitAll => {
            conjoin(atoms.iter().map(|x| Formula::finally(Formula::atom(*x)))).expect("non-empty")
        }
        TemplateClass::Ordering => Formula::until(Formula::not(a(1)), a(0)),
        TemplateClass::ImmediateSuccessor => {
            Formula::globally(Formula::implies(a(0), Formula::next(a(1))))
        }
        TemplateClass::AvoidanceUntil => Formula::globally(Formula::implies(
            a(0),
            Formula::until(Formula::not(a(1)), a(2)),
        )),
        TemplateClass::GlobalAvoid => Formula::globally(Formula::not(a(0))),
    })
}

/// Samples a template instance over `universe` without replacement.
/// Visit-all uses between two and four atoms (fewer if the universe is small).
pub fn generate_formula<R: Rng + ?Sized, S: AsRef<str>>(
    class: TemplateClass,
    universe: &[S],
    rng: &mut R,
) -> Result<Formula, DatagenError> {
    let n = match class.arity() {
        Some(k) => k,
        None => rng.gen_range(2..=4).min(universe.len()).max(1),
    };
    if universe.len() < n {
        return Err(DatagenError::UniverseTooSmall {
            needed: n,
            available: universe.len(),
        });
    }
    let picked: Vec<&str> = universe
        .choose_multiple(rng, n)
        .map(|s| s.as_ref())
        .collect();
    instantiate(class, &picked)
}

/// How atoms are phrased in structured English.
pub trait Lexicon {
    /// Imperative, e.g. "visit A".
    fn act(&self, atom: &str) -> String;
    /// Perfect, e.g. "visited A".
    fn done(&self, atom: &str) -> String;
}

/// "visit X" / "visited X".
pub struct VisitLexicon;

impl Lexicon for VisitLexicon {
    fn act(&self, atom: &str) -> String {
        format!("visit {atom}")
    }

    fn done(&self, atom: &str) -> String {
        format!("visited {atom}")
    }
}

/// Navigation: `red_room` reads "the red room".
pub struct RoomLexicon;

fn room_phrase(atom: &str) -> String {
    format!("the {}", atom.replace('_', " "))
}

impl Lexicon for RoomLexicon {
    fn act(&self, atom: &str) -> String {
        format!("visit {}", room_phrase(atom))
    }

    fn done(&self, atom: &str) -> String {
        format!("visited {}", room_phrase(atom))
    }
}

/// Manipulation: `blk3_in_boxA` reads "put blk3 in boxA".
pub struct PlacementLexicon;

fn placement_phrase(atom: &str) -> String {
    match atom.split_once("_in_") {
        Some((b, x)) => format!("{b} in {x}"),
        None => atom.to_string(),
    }
}

impl Lexicon for PlacementLexicon {
    fn act(&self, atom: &str) -> String {
        format!("put {}", placement_phrase(atom))
    }

    fn done(&self, atom: &str) -> String {
        format!("put {}", placement_phrase(atom))
    }
}

pub fn lexicon_for(kind: DomainKind) -> &'static dyn Lexicon {
    match kind {
        DomainKind::Navigation => &RoomLexicon,
        DomainKind::Manipulation => &PlacementLexicon,
    }
}

fn as_atom(f: &Formula) -> Option<&str> {
    match f {
        Formula::Atom(a) => Some(a),
        _ => None,
    }
}

fn negated_atom(f: &Formula) -> bool {
    matches!(f, Formula::Not(c) if as_atom(c).is_some())
}

fn finally_atom(f: &Formula) -> Option<&str> {
    match f {
        Formula::Finally(c) => as_atom(c),
        _ => None,
    }
}

/// Items of a right-nested conjunction whose every item is `F atom`.
fn visit_chain(f: &Formula) -> Option<Vec<&str>> {
    let mut out = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::And(l, r) => {
                out.push(finally_atom(l)?);
                cur = r;
            }
            other => {
                out.push(finally_atom(other)?);
                return Some(out);
            }
        }
    }
}

fn paren(lex: &dyn Lexicon, f: &Formula) -> String {
    match f {
        Formula::Atom(a) => lex.act(a),
        Formula::True | Formula::False => render(lex, f),
        _ => format!("({})", render(lex, f)),
    }
}

fn render(lex: &dyn Lexicon, f: &Formula) -> String {
    use Formula::*;
    if let Some(items) = visit_chain(f) {
        let phrases: Vec<String> = items
            .iter()
            .map(|a| format!("eventually {}", lex.act(a)))
            .collect();
        return match phrases.as_slice() {
            [one] => one.clone(),
            [init @ .., last] => format!("{} and {}", init.join(", "), last),
            [] => unreachable!(),
        };
    }
    match f {
        True => "true".into(),
        False => "false".into(),
        Atom(a) => lex.act(a),
        Until(l, r) => match (&**l, as_atom(r)) {
            (Not(b), Some(a)) if negated_atom(l) => format!(
                "do not {} until you have {}",
                lex.act(as_atom(b).unwrap()),
                lex.done(a)
            ),
            _ => format!("{} until {}", paren(lex, l), paren(lex, r)),
        },
        Globally(c) => match &**c {
            Not(a) if as_atom(a).is_some() => format!("never {}", lex.act(as_atom(a).unwrap())),
            Implies(a, rhs) if as_atom(a).is_some() => {
                let a = as_atom(a).unwrap();
                match &**rhs {
                    Next(b) if as_atom(b).is_some() => format!(
                        "whenever you {}, {} immediately next",
                        lex.act(a),
                        lex.act(as_atom(b).unwrap())
                    ),
                    Until(nb, c) if negated_atom(nb) && as_atom(c).is_some() => {
                        format!("whenever you {}, {}", lex.act(a), render(lex, rhs))
                    }
                    _ => format!("always {}", paren(lex, c)),
                }
            }
            _ => format!("always {}", paren(lex, c)),
        },
        Finally(c) => format!("eventually {}", paren(lex, c)),
        Next(c) => format!("in the next step {}", paren(lex, c)),
        Not(c) => match as_atom(c) {
            Some(a) => format!("do not {}", lex.act(a)),
            None => format!("not {}", paren(lex, c)),
        },
        And(l, r) => format!("{} and {}", paren(lex, l), paren(lex, r)),
        Or(l, r) => format!("{} or {}", paren(lex, l), paren(lex, r)),
        Implies(l, r) => format!("if {} then {}", paren(lex, l), paren(lex, r)),
    }
}

/// Structured English with the "visit" phrasing.
pub fn structured_english(f: &Formula) -> String {
    render(&VisitLexicon, f)
}

pub fn structured_english_with(f: &Formula, lex: &dyn Lexicon) -> String {
    render(lex, f)
}

fn sentence(clause: &str) -> String {
    let mut c = clause.chars();
    match c.next() {
        Some(first) => format!("{}{}.", first.to_uppercase(), c.as_str()),
        None => String::new(),
    }
}

/// Joins clauses into sentences.
pub fn task_text(clauses: &[Formula], lex: &dyn Lexicon) -> String {
    clauses
        .iter()
        .map(|f| sentence(&render(lex, f)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub nl: String,
    /// Lifted conjunction of the goal and the constraints.
    pub ltl_prefix: String,
    pub placeholders: Vec<String>,
    pub grounding: GroundingMap,
    pub environment_id: String,
    pub n_constraints: usize,
    pub seed: u64,
    /// Lifted goal formula alone.
    pub goal_prefix: String,
    pub domain: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_file: Option<String>,
}

impl TaskRecord {
    pub fn lifted_spec(&self) -> Result<Formula, LtlError> {
        parse_any(&self.ltl_prefix)
    }

    pub fn spec(&self) -> Result<Formula, LtlError> {
        self.grounding.ground(&self.lifted_spec()?)
    }

    pub fn goal(&self) -> Result<Formula, LtlError> {
        self.grounding.ground(&parse_any(&self.goal_prefix)?)
    }
}

/// Knobs of the task generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub goal_min: usize,
    pub goal_max: usize,
    /// Placeholders that appear only in constraints.
    pub extra_max: usize,
    /// Relative frequency of each constraint template, in
    /// [`TemplateClass::CONSTRAINTS`] order.
    pub weights: [f64; 4],
    pub budget: usize,
    pub state_cap: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            goal_min: 2,
            goal_max: 4,
            extra_max: 2,
            weights: [0.3, 0.25, 0.25, 0.2],
            budget: RESAMPLE_BUDGET,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

fn placeholder(i: usize) -> String {
    // F and G are operators; skip them
    ["A", "B", "C", "D", "E", "H", "I", "J", "K", "L", "M", "N"][i].to_string()
}

struct Draw {
    goal: Formula,
    constraints: Vec<Formula>,
    goals: usize,
    total: usize,
}

fn draw_lifted<R: Rng + ?Sized>(n: usize, config: &GeneratorConfig, rng: &mut R) -> Draw {
    let goals = rng.gen_range(config.goal_min..=config.goal_max);
    let extras = rng.gen_range(0..=config.extra_max);
    let names: Vec<String> = (0..goals + extras).map(placeholder).collect();
    let goal_names: Vec<&str> = names[..goals].iter().map(String::as_str).collect();
    let goal = instantiate(TemplateClass::VisitAll, &goal_names).expect("goal arity");
    let all: Vec<&str> = names.iter().map(String::as_str).collect();
    let extra: Vec<&str> = names[goals..].iter().map(String::as_str).collect();
    let total_w: f64 = config.weights.iter().sum();
    let mut constraints = Vec::with_capacity(n);
    while constraints.len() < n {
        let mut u = rng.gen_range(0.0..total_w);
        let mut class = TemplateClass::CONSTRAINTS[3];
        for (i, w) in config.weights.iter().enumerate() {
            if u < *w {
                class = TemplateClass::CONSTRAINTS[i];
                break;
            }
            u -= w;
        }
        let pool: &[&str] = if class == TemplateClass::GlobalAvoid && !extra.is_empty() {
            &extra
        } else {
            &all
        };
        let k = class.arity().expect("constraint arity");
        if pool.len() < k {
            continue;
        }
        let picked: Vec<&str> = pool.choose_multiple(rng, k).copied().collect();
        constraints.push(instantiate(class, &picked).expect("arity checked"));
    }
    Draw {
        goal,
        constraints,
        goals,
        total: goals + extras,
    }
}

/// Maps placeholders to distinct environment propositions. Manipulation
/// placeholders use distinct blocks, each with a random box.
fn draw_grounding<R: Rng + ?Sized>(
    env: &Environment,
    placeholders: &[String],
    rng: &mut R,
) -> Result<GroundingMap, DatagenError> {
    let targets: Vec<String> = match env.kind() {
        DomainKind::Navigation => {
            let rooms: Vec<String> = env.landmarks().map(|l| l.name.clone()).collect();
            rooms
                .choose_multiple(rng, placeholders.len())
                .cloned()
                .collect()
        }
        DomainKind::Manipulation => {
            let blocks: Vec<String> = env.blocks().map(|b| b.name.clone()).collect();
            let boxes: Vec<String> = env.boxes().map(|b| b.name.clone()).collect();
            blocks
                .choose_multiple(rng, placeholders.len())
                .map(|b| crate::environment::move_event(b, boxes.choose(rng).expect("boxes")))
                .collect()
        }
    };
    if targets.len() < placeholders.len() {
        return Err(DatagenError::UniverseTooSmall {
            needed: placeholders.len(),
            available: targets.len(),
        });
    }
    Ok(GroundingMap::new(
        placeholders.iter().cloned().zip(targets),
    )?)
}

/// Draws a satisfiable task with `n_constraints` constraints for `env`.
pub fn make_task(
    env: &Environment,
    n_constraints: usize,
    seed: u64,
    config: &GeneratorConfig,
) -> Result<TaskRecord, DatagenError> {
    if !(1..=5).contains(&n_constraints) {
        return Err(DatagenError::BadConstraintCount(n_constraints));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..config.budget {
        let draw = draw_lifted(n_constraints, config, &mut rng);
        let placeholders: Vec<String> = (0..draw.total).map(placeholder).collect();
        let grounding = draw_grounding(env, &placeholders, &mut rng)?;
        let mut parts = vec![draw.goal.clone()];
        parts.extend(draw.constraints.iter().cloned());
        let lifted = conjoin(parts.clone()).expect("non-empty");
        last = lifted.to_infix();
        let grounded = grounding.ground(&lifted)?;
        let automaton = match compile_for(env, &grounded, config.state_cap) {
            Ok(a) => a,
            Err(AutomatonError::StateCapExceeded { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if automaton.is_dead(automaton.initial()) {
            continue;
        }
        if optimal_plan(env, &automaton, &SearchLimits::default()).is_err() {
            continue;
        }
        let grounded_parts: Vec<Formula> = parts
            .iter()
            .map(|p| grounding.ground(p))
            .collect::<Result<_, _>>()?;
        let nl = task_text(&grounded_parts, lexicon_for(env.kind()));
        debug_assert!(draw.goals <= draw.total);
        return Ok(TaskRecord {
            nl,
            ltl_prefix: lifted.to_prefix(),
            placeholders,
            grounding,
            environment_id: env.id().to_string(),
            n_constraints,
            seed,
            goal_prefix: draw.goal.to_prefix(),
            domain: env.kind(),
            env_file: None,
        });
    }
    Err(DatagenError::BudgetExhausted {
        budget: config.budget,
        last,
    })
}

/// Mixes indices into a seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A generated dataset: environments plus task records.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub environments: Vec<Environment>,
    pub records: Vec<TaskRecord>,
}

impl Corpus {
    pub fn environment(&self, id: &str) -> Option<&Environment> {
        self.environments.iter().find(|e| e.id() == id)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub domain: DomainKind,
    pub environments: usize,
    pub per_environment: usize,
    pub seed: u64,
    pub generator: GeneratorConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            domain: DomainKind::Navigation,
            environments: 100,
            per_environment: 5,
            seed: 0,
            generator: GeneratorConfig::default(),
        }
    }
}

/// Generates a corpus. Record `j` of each environment has `j % 5 + 1`
/// constraints, so five records per environment cover every count once.
pub fn generate_corpus(config: &CorpusConfig) -> Result<Corpus, DatagenError> {
    let mut environments = Vec::with_capacity(config.environments);
    let mut records = Vec::with_capacity(config.environments * config.per_environment);
    for e in 0..config.environments {
        let env = random_environment(config.domain, derive_seed(config.seed, e as u64, 0));
        for j in 0..config.per_environment {
            let seed = derive_seed(config.seed, e as u64, j as u64 + 1);
            let mut r = make_task(&env, j % 5 + 1, seed, &config.generator)?;
            r.env_file = Some(env_file_name(&env));
            records.push(r);
        }
        environments.push(env);
    }
    Ok(Corpus {
        environments,
        records,
    })
}

pub fn env_file_name(env: &Environment) -> String {
    format!("envs/{}.json", env.id())
}

/// Writes `records.jsonl` and `envs/*.json` under `dir`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf, DatagenError> {
    let envs = dir.join("envs");
    std::fs::create_dir_all(&envs).map_err(io_err(&envs))?;
    for env in &corpus.environments {
        env.save(&dir.join(env_file_name(env)))?;
    }
    let path = dir.join("records.jsonl");
    std::fs::write(&path, records_to_jsonl(&corpus.records)).map_err(io_err(&path))?;
    Ok(path)
}

pub fn records_to_jsonl(records: &[TaskRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<TaskRecord>, DatagenError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| DatagenError::BadRecord {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads a records file and the environment files it references (paths
/// relative to the records file).
pub fn read_corpus(path: &Path) -> Result<Corpus, DatagenError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let records = records_from_jsonl(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut environments: Vec<Environment> = Vec::new();
    let mut loaded = BTreeSet::new();
    for (i, r) in records.iter().enumerate() {
        let Some(file) = &r.env_file else {
            return Err(DatagenError::BadRecord {
                line: i + 1,
                message: "missing env_file".into(),
            });
        };
        if loaded.insert(file.clone()) {
            environments.push(Environment::load(&base.join(file))?);
        }
    }
    let corpus = Corpus {
        environments,
        records,
    };
    validate_corpus(&corpus)?;
    Ok(corpus)
}

/// Checks that every record grounds into its environment's vocabulary.
pub fn validate_corpus(corpus: &Corpus) -> Result<(), DatagenError> {
    for (i, r) in corpus.records.iter().enumerate() {
        let bad = |message: String| DatagenError::BadRecord {
            line: i + 1,
            message,
        };
        let env = corpus
            .environment(&r.environment_id)
            .ok_or_else(|| bad(format!("unknown environment `{}`", r.environment_id)))?;
        let props: BTreeSet<String> = env.propositions().into_iter().collect();
        let spec = r.spec().map_err(|e| bad(e.to_string()))?;
        if let Some(a) = spec.atoms().into_iter().find(|a| !props.contains(a)) {
            return Err(bad(format!("`{a}` is not a proposition of {}", env.id())));
        }
    }
    Ok(())
}

/// Rewrites every record's `nl` through an external command: the text is
/// written to its stdin, the first stdout line replaces it.
pub fn apply_paraphrase_hook(
    records: &mut [TaskRecord],
    program: &str,
    args: &[String],
) -> Result<(), DatagenError> {
    for r in records.iter_mut() {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| DatagenError::Hook(e.to_string()))?;
        {
            let mut stdin = child.stdin.take().expect("piped");
            writeln!(stdin, "{}", r.nl).map_err(|e| DatagenError::Hook(e.to_string()))?;
        }
        let mut line = String::new();
        BufReader::new(child.stdout.take().expect("piped"))
            .read_line(&mut line)
            .map_err(|e| DatagenError::Hook(e.to_string()))?;
        let status = child
            .wait()
            .map_err(|e| DatagenError::Hook(e.to_string()))?;
        if !status.success() || line.trim().is_empty() {
            return Err(DatagenError::Hook(format!(
                "`{program}` produced no paraphrase"
            )));
        }
        r.nl = line.trim().to_string();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordStats {
    pub depth: usize,
    pub width: usize,
    pub states: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub records: usize,
    pub mean_depth: f64,
    pub mean_width: f64,
    pub mean_states: f64,
    pub mean_edges: f64,
    pub depth_histogram: BTreeMap<usize, usize>,
    pub width_histogram: BTreeMap<usize, usize>,
    /// Records whose NL text duplicates an earlier record's.
    pub nl_collisions: usize,
    pub per_record: Vec<RecordStats>,
}

/// Syntax-tree and automaton statistics of a corpus.
pub fn complexity_stats(
    corpus: &Corpus,
    state_cap: usize,
) -> Result<ComplexityReport, DatagenError> {
    let mut per_record = Vec::with_capacity(corpus.records.len());
    let mut seen_nl = BTreeMap::new();
    let mut collisions = 0;
    for (i, r) in corpus.records.iter().enumerate() {
        let lifted = r.lifted_spec()?;
        let env = corpus
            .environment(&r.environment_id)
            .ok_or_else(|| DatagenError::BadRecord {
                line: i + 1,
                message: format!("unknown environment `{}`", r.environment_id),
            })?;
        let a = compile_for(env, &r.spec()?, state_cap)?;
        per_record.push(RecordStats {
            depth: lifted.depth(),
            width: lifted.width(),
            states: a.num_states(),
            edges: a.num_edges(),
        });
        // same text for different specifications is a collision
        if let Some(prev) = seen_nl.insert(r.nl.clone(), r.ltl_prefix.clone()) {
            if prev != r.ltl_prefix {
                collisions += 1;
            }
        }
    }
    Ok(summarize(per_record, collisions))
}

fn summarize(per_record: Vec<RecordStats>, nl_collisions: usize) -> ComplexityReport {
    let n = per_record.len().max(1) as f64;
    let mean = |f: fn(&RecordStats) -> usize| per_record.iter().map(f).sum::<usize>() as f64 / n;
    let mut depth_histogram = BTreeMap::new();
    let mut width_histogram = BTreeMap::new();
    for s in &per_record {
        *depth_histogram.entry(s.depth).or_insert(0) += 1;
        *width_histogram.entry(s.width).or_insert(0) += 1;
    }
    ComplexityReport {
        records: per_record.len(),
        mean_depth: mean(|s| s.depth),
        mean_width: mean(|s| s.width),
        mean_states: mean(|s| s.states),
        mean_edges: mean(|s| s.edges),
        depth_histogram,
        width_histogram,
        nl_collisions,
        per_record,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate, parse_infix};

    fn f(s: &str) -> Formula {
        parse_infix(s).unwrap()
    }

    #[test]
    fn templates() {
        assert_eq!(
            instantiate(TemplateClass::Ordering, &["A", "B"]).unwrap(),
            f("!B U A")
        );
        assert_eq!(
            instantiate(TemplateClass::VisitAll, &["A", "B"]).unwrap(),
            f("F A & F B")
        );
        assert_eq!(
            instantiate(TemplateClass::ImmediateSuccessor, &["A", "B"]).unwrap(),
            f("G(A -> X B)")
        );
        assert_eq!(
            instantiate(TemplateClass::AvoidanceUntil, &["A", "B", "C"]).unwrap(),
            f("G(A -> (!B U C))")
        );
        assert_eq!(
            instantiate(TemplateClass::GlobalAvoid, &["A"]).unwrap(),
            f("G !A")
        );
        assert!(matches!(
            instantiate(TemplateClass::AvoidanceUntil, &["A"]),
            Err(DatagenError::UniverseTooSmall {
                needed: 3,
                available: 1
            })
        ));
    }

    #[test]
    fn generated_formulas_use_distinct_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g = generate_formula(
                TemplateClass::AvoidanceUntil,
                &["A", "B", "C", "D"],
                &mut rng,
            )
            .unwrap();
            assert_eq!(g.atoms().len(), 3);
        }
        assert!(generate_formula(TemplateClass::Ordering, &["A"], &mut rng).is_err());
    }

    #[test]
    fn phrase_table() {
        assert_eq!(structured_english(&f("F A")), "eventually visit A");
        assert_eq!(
            structured_english(&f("!B U A")),
            "do not visit B until you have visited A"
        );
        assert_eq!(
            structured_english(&f("G(A -> X B)")),
            "whenever you visit A, visit B immediately next"
        );
        assert_eq!(
            structured_english(&f("G(A -> (!B U C))")),
            "whenever you visit A, do not visit B until you have visited C"
        );
        assert_eq!(structured_english(&f("G !A")), "never visit A");
        assert_eq!(
            structured_english(&f("F A & (F B & F C)")),
            "eventually visit A, eventually visit B and eventually visit C"
        );
        assert_eq!(
            structured_english(&f("X(A | !B)")),
            "in the next step (visit A or (do not visit B))"
        );
    }

    #[test]
    fn domain_lexicons() {
        assert_eq!(
            structured_english_with(&f("!blue_room U red_room"), &RoomLexicon),
            "do not visit the blue room until you have visited the red room"
        );
        assert_eq!(
            structured_english_with(&f("F blk3_in_boxA"), &PlacementLexicon),
            "eventually put blk3 in boxA"
        );
    }

    #[test]
    fn tasks_are_satisfiable_and_deterministic() {
        let config = GeneratorConfig::default();
        for kind in [DomainKind::Navigation, DomainKind::Manipulation] {
            let env = random_environment(kind, 7);
            for n in 1..=5 {
                let r = make_task(&env, n, 100 + n as u64, &config).unwrap();
                assert_eq!(r, make_task(&env, n, 100 + n as u64, &config).unwrap());
                let spec = r.spec().unwrap();
                let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
                let best = optimal_plan(&env, &a, &SearchLimits::default()).unwrap();
                let (trace, _) = env.simulate(&best.plan).unwrap();
                assert!(evaluate(&spec, &trace, 0).unwrap());
                // goal first, then the constraints
                let lifted = r.lifted_spec().unwrap();
                let mut parts = 0;
                let mut cur = &lifted;
                while let Formula::And(_, rhs) = cur {
                    parts += 1;
                    cur = rhs;
                }
                assert_eq!(parts, n);
            }
        }
        assert!(make_task(
            &random_environment(DomainKind::Navigation, 1),
            0,
            0,
            &config
        )
        .is_err());
    }

    #[test]
    fn contradictory_orderings_are_unsatisfiable() {
        let env = random_environment(DomainKind::Navigation, 2);
        let spec =
            f("F red_room & F blue_room & (!blue_room U red_room) & (!red_room U blue_room)");
        let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
        assert!(a.is_dead(a.initial()));
    }

    #[test]
    fn corpus_round_trip() {
        let config = CorpusConfig {
            environments: 2,
            per_environment: 3,
            seed: 5,
            ..Default::default()
        };
        let corpus = generate_corpus(&config).unwrap();
        assert_eq!(corpus.records.len(), 6);
        let dir = std::env::temp_dir().join(format!("ltlplan-corpus-{}", std::process::id()));
        let path = write_corpus(&dir, &corpus).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, corpus);
        std::fs::remove_dir_all(&dir).unwrap();
        let stats = complexity_stats(&corpus, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(stats.records, 6);
        assert_eq!(stats.nl_collisions, 0);
    }

    #[test]
    fn single_atom_stats() {
        let a = f("A");
        assert_eq!((a.depth(), a.width()), (1, 1));
        let g = f("F(A & F B)");
        assert_eq!((g.depth(), g.width()), (4, 2));
    }
}
