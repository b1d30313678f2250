//! Batch evaluation of planners over a task corpus.
//!
//! Plans are judged by simulating them and checking the resulting trace
//! with [`crate::ltl::evaluate`], never with the automaton that guided
//! decoding.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{AutomatonError, DEFAULT_STATE_CAP};
use crate::datagen::{derive_seed, Corpus, TaskRecord};
use crate::decoding::{compile_for, run, DecodeConfig, DecodingError, Policy};
use crate::environment::{Environment, Plan};
use crate::ltl::evaluate;
use crate::oracle::{optimal_plan, OracleError, SearchLimits, DEFAULT_NODE_CAP};

/// Default per-task time limit.
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(300);

/// Builds a fresh policy for one task. Called on the worker thread that runs
/// the task, so the policy itself need not be `Send`.
pub type PolicyFactory<'a> = dyn Fn() -> Result<Box<dyn Policy>, DecodingError> + Sync + 'a;

pub enum Planner<'a> {
    Constrained(&'a PolicyFactory<'a>),
    Unconstrained(&'a PolicyFactory<'a>),
    Oracle,
}

impl Planner<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Planner::Constrained(_) => "constrained",
            Planner::Unconstrained(_) => "unconstrained",
            Planner::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub seed: u64,
    pub time_limit: Duration,
    pub state_cap: usize,
    pub node_cap: usize,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            time_limit: DEFAULT_TIME_LIMIT,
            state_cap: DEFAULT_STATE_CAP,
            node_cap: DEFAULT_NODE_CAP,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Timeout,
    DeadEnd,
    StepLimit,
    Unsatisfiable,
    Other,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Timeout => "timeout",
            FailureKind::DeadEnd => "dead-end",
            FailureKind::StepLimit => "step-limit",
            FailureKind::Unsatisfiable => "unsatisfiable",
            FailureKind::Other => "other",
        })
    }
}

impl From<&DecodingError> for FailureKind {
    fn from(e: &DecodingError) -> Self {
        match e {
            DecodingError::TimeLimit { .. } => FailureKind::Timeout,
            DecodingError::DeadEnd { .. } => FailureKind::DeadEnd,
            DecodingError::StepLimit { .. } => FailureKind::StepLimit,
            DecodingError::Unsatisfiable => FailureKind::Unsatisfiable,
            DecodingError::Automaton(AutomatonError::StateCapExceeded { .. }) => {
                FailureKind::Timeout
            }
            _ => FailureKind::Other,
        }
    }
}

impl From<&OracleError> for FailureKind {
    fn from(e: &OracleError) -> Self {
        match e {
            OracleError::TimeLimit | OracleError::NodeCapExceeded { .. } => FailureKind::Timeout,
            OracleError::Unsatisfiable => FailureKind::Unsatisfiable,
            OracleError::Automaton(AutomatonError::StateCapExceeded { .. }) => FailureKind::Timeout,
            _ => FailureKind::Other,
        }
    }
}

/// Result of planning one corpus record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub index: usize,
    pub environment_id: String,
    pub n_constraints: usize,
    pub plan: Option<Plan>,
    pub safe: bool,
    pub complete: bool,
    /// Simulated execution cost of the returned plan.
    pub cost: Option<f64>,
    pub planning_seconds: f64,
    pub failure: Option<FailureKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tasks: usize,
    pub safe: usize,
    pub complete: usize,
    /// Percent of tasks whose plan satisfies the full specification.
    pub sf: f64,
    /// Percent of tasks whose plan satisfies the goal alone.
    pub cp: f64,
    /// Mean execution cost over safe plans.
    pub et: Option<f64>,
    /// Mean planning wall time in seconds.
    pub pt: f64,
}

impl Metrics {
    fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a TaskOutcome>) -> Metrics {
        let (mut tasks, mut safe, mut complete) = (0, 0, 0);
        let (mut cost_sum, mut time_sum) = (0.0, 0.0);
        for o in outcomes {
            tasks += 1;
            time_sum += o.planning_seconds;
            if o.complete {
                complete += 1;
            }
            if o.safe {
                safe += 1;
                cost_sum += o.cost.unwrap_or(0.0);
            }
        }
        let pct = |n: usize| {
            if tasks == 0 {
                0.0
            } else {
                100.0 * n as f64 / tasks as f64
            }
        };
        Metrics {
            tasks,
            safe,
            complete,
            sf: pct(safe),
            cp: pct(complete),
            et: (safe > 0).then(|| cost_sum / safe as f64),
            pt: if tasks == 0 {
                0.0
            } else {
                time_sum / tasks as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub planner: String,
    pub seed: u64,
    pub time_limit_seconds: f64,
    pub overall: Metrics,
    /// Metrics keyed by constraint count.
    pub by_constraints: BTreeMap<usize, Metrics>,
    pub failures: BTreeMap<FailureKind, usize>,
    pub outcomes: Vec<TaskOutcome>,
}

impl EvaluationReport {
    pub fn from_outcomes(planner: &str, config: &EvalConfig, outcomes: Vec<TaskOutcome>) -> Self {
        let mut groups: BTreeMap<usize, Vec<&TaskOutcome>> = BTreeMap::new();
        let mut failures = BTreeMap::new();
        for o in &outcomes {
            groups.entry(o.n_constraints).or_default().push(o);
            if let Some(k) = o.failure {
                *failures.entry(k).or_insert(0) += 1;
            }
        }
        let by_constraints = groups
            .into_iter()
            .map(|(n, os)| (n, Metrics::from_outcomes(os)))
            .collect();
        EvaluationReport {
            planner: planner.to_string(),
            seed: config.seed,
            time_limit_seconds: config.time_limit.as_secs_f64(),
            overall: Metrics::from_outcomes(&outcomes),
            by_constraints,
            failures,
            outcomes,
        }
    }

    /// Zeroes every wall-clock measurement, leaving a report that depends
    /// only on the inputs and seeds.
    pub fn without_timing(mut self) -> Self {
        self.overall.pt = 0.0;
        for m in self.by_constraints.values_mut() {
            m.pt = 0.0;
        }
        for o in &mut self.outcomes {
            o.planning_seconds = 0.0;
        }
        self
    }

    /// Plain-text summary table. PT is omitted when `timing` is false.
    pub fn table(&self, timing: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "planner: {}  tasks: {}",
            self.planner, self.overall.tasks
        );
        let _ = write!(
            out,
            "{:<12}{:>7}{:>8}{:>8}{:>12}",
            "constraints", "tasks", "SF", "CP", "ET"
        );
        if timing {
            let _ = write!(out, "{:>10}", "PT");
        }
        out.push('\n');
        let row = |out: &mut String, label: &str, m: &Metrics| {
            let et = m.et.map_or_else(|| "-".to_string(), |e| format!("{e:.2}"));
            let _ = write!(
                out,
                "{label:<12}{:>7}{:>8.1}{:>8.1}{et:>12}",
                m.tasks, m.sf, m.cp
            );
            if timing {
                let _ = write!(out, "{:>10.3}", m.pt);
            }
            out.push('\n');
        };
        for (n, m) in &self.by_constraints {
            row(&mut out, &n.to_string(), m);
        }
        row(&mut out, "all", &self.overall);
        if !self.failures.is_empty() {
            let parts: Vec<String> = self
                .failures
                .iter()
                .map(|(k, n)| format!("{k}={n}"))
                .collect();
            let _ = writeln!(out, "failures: {}", parts.join(" "));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvaluationError {
    #[error("record {index} refers to unknown environment `{id}`")]
    UnknownEnvironment { index: usize, id: String },
    #[error("time limit must be positive")]
    ZeroTimeLimit,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Judges a plan: (safe, complete, cost). Errors during simulation or
/// evaluation count as neither safe nor complete.
pub fn judge(env: &Environment, record: &TaskRecord, plan: &Plan) -> (bool, bool, Option<f64>) {
    let Ok((trace, cost)) = env.simulate(plan) else {
        return (false, false, None);
    };
    let holds = |f: Result<crate::ltl::Formula, _>| {
        f.ok()
            .and_then(|f| evaluate(&f, &trace, 0).ok())
            .unwrap_or(false)
    };
    (holds(record.spec()), holds(record.goal()), Some(cost))
}

fn plan_task(
    env: &Environment,
    record: &TaskRecord,
    planner: &Planner<'_>,
    config: &EvalConfig,
    seed: u64,
) -> Result<Plan, (FailureKind, String)> {
    let start = Instant::now();
    let deadline = start + config.time_limit;
    let spec = record
        .spec()
        .map_err(|e| (FailureKind::Other, e.to_string()))?;
    let automaton = compile_for(env, &spec, config.state_cap).map_err(|e| {
        let e = DecodingError::from(e);
        (FailureKind::from(&e), e.to_string())
    })?;
    if Instant::now() >= deadline {
        return Err((
            FailureKind::Timeout,
            "time limit exceeded during compilation".into(),
        ));
    }
    let decode = |factory: &PolicyFactory<'_>, constrained: bool| -> Result<Plan, DecodingError> {
        let mut policy = factory()?;
        let cfg = DecodeConfig {
            seed,
            max_steps: None,
            constrained,
            deadline: Some(deadline),
        };
        Ok(run(env, &record.nl, &automaton, policy.as_mut(), &cfg)?.plan)
    };
    let result = match planner {
        Planner::Constrained(f) => decode(f, true),
        Planner::Unconstrained(f) => decode(f, false),
        Planner::Oracle => {
            let limits = SearchLimits {
                node_cap: config.node_cap,
                deadline: Some(deadline),
            };
            return optimal_plan(env, &automaton, &limits)
                .map(|o| o.plan)
                .map_err(|e| (FailureKind::from(&e), e.to_string()));
        }
    };
    result.map_err(|e| (FailureKind::from(&e), e.to_string()))
}

/// Runs `planner` on one record.
pub fn evaluate_task(
    env: &Environment,
    index: usize,
    record: &TaskRecord,
    planner: &Planner<'_>,
    config: &EvalConfig,
) -> TaskOutcome {
    let seed = derive_seed(config.seed, index as u64, record.seed);
    let start = Instant::now();
    let result = plan_task(env, record, planner, config, seed);
    let planning_seconds = start.elapsed().as_secs_f64();
    let mut outcome = TaskOutcome {
        index,
        environment_id: record.environment_id.clone(),
        n_constraints: record.n_constraints,
        plan: None,
        safe: false,
        complete: false,
        cost: None,
        planning_seconds,
        failure: None,
        error: None,
    };
    match result {
        Ok(plan) => {
            let (safe, complete, cost) = judge(env, record, &plan);
            outcome.safe = safe;
            outcome.complete = complete;
            outcome.cost = cost;
            outcome.plan = Some(plan);
        }
        Err((kind, message)) => {
            outcome.failure = Some(kind);
            outcome.error = Some(message);
        }
    }
    outcome
}

/// Evaluates `planner` over every record of `corpus` in parallel. Per-task
/// errors are recorded in the report; only malformed input aborts.
pub fn evaluate_corpus(
    corpus: &Corpus,
    planner: &Planner<'_>,
    config: &EvalConfig,
) -> Result<EvaluationReport, EvaluationError> {
    if config.time_limit.is_zero() {
        return Err(EvaluationError::ZeroTimeLimit);
    }
    let mut envs = Vec::with_capacity(corpus.records.len());
    for (index, r) in corpus.records.iter().enumerate() {
        let env = corpus.environment(&r.environment_id).ok_or_else(|| {
            EvaluationError::UnknownEnvironment {
                index,
                id: r.environment_id.clone(),
            }
        })?;
        envs.push(env);
    }
    let work = || -> Vec<TaskOutcome> {
        corpus
            .records
            .par_iter()
            .enumerate()
            .map(|(i, r)| evaluate_task(envs[i], i, r, planner, config))
            .collect()
    };
    let outcomes = if config.threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| EvaluationError::Pool(e.to_string()))?
            .install(work)
    };
    Ok(EvaluationReport::from_outcomes(
        planner.name(),
        config,
        outcomes,
    ))
}
