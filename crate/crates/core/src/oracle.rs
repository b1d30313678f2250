//! Safe reference planning over the environment x automaton product:
//! exhaustive enumeration and cost-optimal uniform-cost search.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::automaton::{AutomatonError, StateId, TraceAutomaton};
use crate::environment::{move_event, Action, DomainKind, EnvError, EnvState, Environment, Plan};
use crate::ltl::Formula;

pub const DEFAULT_PLAN_CAP: usize = 100_000;
pub const DEFAULT_NODE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("specification is unsatisfiable in this environment")]
    Unsatisfiable,
    #[error("search exceeded {cap} product nodes")]
    NodeCapExceeded { cap: usize },
    #[error("time limit exceeded during search")]
    TimeLimit,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Environment(#[from] EnvError),
}

/// Default enumeration depth: twice the number of entities.
pub fn default_max_len(env: &Environment) -> usize {
    2 * env.entities().len()
}

/// A search node of the product graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductNode {
    pub env_state: EnvState,
    pub q: StateId,
    pub cost: f64,
}

struct Successor {
    action: usize,
    node: ProductNode,
}

struct Product<'a> {
    env: &'a Environment,
    automaton: &'a TraceAutomaton,
    vocabulary: Vec<Action>,
    names: Vec<String>,
    letters: Vec<usize>,
}

impl<'a> Product<'a> {
    fn new(env: &'a Environment, automaton: &'a TraceAutomaton) -> Result<Self, OracleError> {
        let vocabulary = env.vocabulary();
        let names: Vec<String> = vocabulary.iter().map(Action::to_string).collect();
        let mut letters = Vec::with_capacity(vocabulary.len());
        for a in &vocabulary {
            let event = env.event(a)?;
            let l = automaton
                .alphabet()
                .event(&event)
                .ok_or(AutomatonError::UnknownAtom(event))?;
            letters.push(l);
        }
        Ok(Product {
            env,
            automaton,
            vocabulary,
            names,
            letters,
        })
    }

    fn root(&self) -> ProductNode {
        ProductNode {
            env_state: self.env.initial_state(),
            q: self.automaton.initial(),
            cost: 0.0,
        }
    }

    /// Successors in vocabulary order; dead automaton states are dropped
    /// when `prune` is set.
    fn successors(&self, n: &ProductNode, prune: bool, out: &mut Vec<Successor>) {
        out.clear();
        for (i, a) in self.vocabulary.iter().enumerate() {
            let Ok(t) = self.env.apply(&n.env_state, a) else {
                continue;
            };
            let q = self.automaton.step(n.q, self.letters[i]);
            if prune && self.automaton.is_dead(q) {
                continue;
            }
            out.push(Successor {
                action: i,
                node: ProductNode {
                    env_state: t.next,
                    q,
                    cost: n.cost + t.cost,
                },
            });
        }
    }

    fn plan(&self, path: &[usize]) -> Plan {
        Plan::from_steps(path.iter().map(|&i| self.names[i].clone()))
            .expect("no DONE in vocabulary")
    }
}

/// Result of [`enumerate_accepting_plans`].
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub plans: Vec<(Plan, f64)>,
    /// Set when the plan cap stopped the enumeration early.
    pub truncated: bool,
    pub max_len: usize,
    pub plan_cap: usize,
}

/// Visits every plan of at most `max_len` steps whose run ends in an
/// accepting state, depth-first in vocabulary order (a plan before its
/// extensions). `visit` returns false to stop. Returns false if stopped.
pub fn for_each_accepting_plan(
    env: &Environment,
    automaton: &TraceAutomaton,
    max_len: usize,
    prune: bool,
    visit: &mut dyn FnMut(&[String], f64) -> bool,
) -> Result<bool, OracleError> {
    let product = Product::new(env, automaton)?;
    let root = product.root();
    if prune && automaton.is_dead(root.q) {
        return Ok(true);
    }
    let mut names: Vec<String> = Vec::new();
    let mut buffers: Vec<Vec<Successor>> = (0..max_len).map(|_| Vec::new()).collect();
    // `buffers` holds one scratch vector per remaining level
    fn dfs(
        p: &Product<'_>,
        n: &ProductNode,
        prune: bool,
        names: &mut Vec<String>,
        buffers: &mut [Vec<Successor>],
        visit: &mut dyn FnMut(&[String], f64) -> bool,
    ) -> bool {
        if p.automaton.is_accepting(n.q) && !visit(names, n.cost) {
            return false;
        }
        let [mine, rest @ ..] = buffers else {
            return true;
        };
        p.successors(n, prune, mine);
        for s in mine.iter() {
            names.push(p.names[s.action].clone());
            let go_on = dfs(p, &s.node, prune, names, rest, visit);
            names.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    Ok(dfs(&product, &root, prune, &mut names, &mut buffers, visit))
}

/// Collects accepting plans of at most `max_len` steps, up to `plan_cap`.
pub fn enumerate_accepting_plans(
    env: &Environment,
    automaton: &TraceAutomaton,
    max_len: usize,
    plan_cap: usize,
) -> Result<Enumeration, OracleError> {
    let mut plans = Vec::new();
    let mut truncated = false;
    for_each_accepting_plan(env, automaton, max_len, true, &mut |steps, cost| {
        if plans.len() == plan_cap {
            truncated = true;
            return false;
        }
        plans.push((
            Plan::from_steps(steps.iter().cloned()).expect("valid steps"),
            cost,
        ));
        true
    })?;
    Ok(Enumeration {
        plans,
        truncated,
        max_len,
        plan_cap,
    })
}

/// Least-cost accepting plan among plans of at most `max_len` steps, by
/// exhaustive enumeration. The cross-check for [`optimal_plan`].
pub fn brute_force_min_cost(
    env: &Environment,
    automaton: &TraceAutomaton,
    max_len: usize,
    prune: bool,
) -> Result<Option<f64>, OracleError> {
    let mut best: Option<f64> = None;
    for_each_accepting_plan(env, automaton, max_len, prune, &mut |_, cost| {
        if best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
        true
    })?;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPlan {
    pub plan: Plan,
    pub cost: f64,
    /// Product nodes settled by the search.
    pub expanded: usize,
}

/// Search limits for [`optimal_plan`].
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub node_cap: usize,
    pub deadline: Option<Instant>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            node_cap: DEFAULT_NODE_CAP,
            deadline: None,
        }
    }
}

struct Entry {
    cost: f64,
    path: Vec<usize>,
    node: ProductNode,
}

impl Entry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Whether any plan satisfies the automaton in `env`, ignoring cost.
///
/// Navigation actions are always applicable, so a live initial state
/// suffices. For manipulation, blocks whose events drive the automaton
/// identically are interchangeable, so the search only tracks how many
/// blocks of each such class have been used.
pub fn feasible(env: &Environment, automaton: &TraceAutomaton) -> Result<bool, OracleError> {
    let q0 = automaton.initial();
    if automaton.is_dead(q0) {
        return Ok(false);
    }
    if env.kind() == DomainKind::Navigation {
        return Ok(true);
    }
    let n = automaton.num_states() as StateId;
    let column = |l: usize| -> Vec<StateId> { (0..n).map(|q| automaton.step(q, l)).collect() };
    let mut class_of_column: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut class_letter: Vec<usize> = Vec::new();
    let boxes: Vec<String> = env.boxes().map(|b| b.name.clone()).collect();
    let mut block_groups: HashMap<Vec<usize>, usize> = HashMap::new();
    for b in env.blocks() {
        let mut signature = Vec::with_capacity(boxes.len());
        for x in &boxes {
            let event = move_event(&b.name, x);
            let l = automaton
                .alphabet()
                .event(&event)
                .ok_or(AutomatonError::UnknownAtom(event))?;
            let next = class_of_column.len();
            let c = *class_of_column.entry(column(l)).or_insert(next);
            if c == class_letter.len() {
                class_letter.push(l);
            }
            signature.push(c);
        }
        *block_groups.entry(signature).or_insert(0) += 1;
    }
    let groups: Vec<(Vec<usize>, usize)> = block_groups.into_iter().collect();
    let mut seen: HashSet<(Vec<usize>, StateId)> = HashSet::new();
    let start = (vec![0usize; groups.len()], q0);
    let mut stack = vec![start.clone()];
    seen.insert(start);
    while let Some((used, q)) = stack.pop() {
        if automaton.is_accepting(q) {
            return Ok(true);
        }
        for (g, (signature, cap)) in groups.iter().enumerate() {
            if used[g] == *cap {
                continue;
            }
            for &c in signature {
                let r = automaton.step(q, class_letter[c]);
                if automaton.is_dead(r) {
                    continue;
                }
                let mut u = used.clone();
                u[g] += 1;
                if seen.insert((u.clone(), r)) {
                    stack.push((u, r));
                }
            }
        }
    }
    Ok(false)
}

/// Uniform-cost search for the cheapest accepting plan. Ties are broken by
/// fewer steps, then by the lexicographically least sequence of vocabulary
/// indices.
pub fn optimal_plan(
    env: &Environment,
    automaton: &TraceAutomaton,
    limits: &SearchLimits,
) -> Result<OptimalPlan, OracleError> {
    let product = Product::new(env, automaton)?;
    let root = product.root();
    if !feasible(env, automaton)? {
        return Err(OracleError::Unsatisfiable);
    }
    let mut settled: HashSet<(EnvState, StateId)> = HashSet::new();
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        cost: 0.0,
        path: Vec::new(),
        node: root,
    });
    let mut succ = Vec::new();
    while let Some(e) = heap.pop() {
        if !settled.insert((e.node.env_state.clone(), e.node.q)) {
            continue;
        }
        if automaton.is_accepting(e.node.q) {
            return Ok(OptimalPlan {
                plan: product.plan(&e.path),
                cost: e.cost,
                expanded: settled.len(),
            });
        }
        if settled.len() > limits.node_cap {
            return Err(OracleError::NodeCapExceeded {
                cap: limits.node_cap,
            });
        }
        if settled.len().is_multiple_of(1024) {
            if let Some(d) = limits.deadline {
                if Instant::now() >= d {
                    return Err(OracleError::TimeLimit);
                }
            }
        }
        product.successors(&e.node, true, &mut succ);
        for s in succ.drain(..) {
            // a step that leaves the automaton state unchanged only relocates
            // the agent (and may use up a block); by the triangle inequality
            // dropping it never makes a plan costlier or longer
            if s.node.q == e.node.q {
                continue;
            }
            if settled.contains(&(s.node.env_state.clone(), s.node.q)) {
                continue;
            }
            let mut path = e.path.clone();
            path.push(s.action);
            heap.push(Entry {
                cost: s.node.cost,
                path,
                node: s.node,
            });
        }
    }
    Err(OracleError::Unsatisfiable)
}

/// One oracle training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub environment_id: String,
    pub env_file: Option<String>,
    pub nl: String,
    pub ltl_prefix: String,
    pub plan: Plan,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTask {
    pub index: usize,
    pub reason: String,
}

/// Input task for [`export_training_pairs`].
pub struct PairTask<'a> {
    pub env: &'a Environment,
    pub env_file: Option<String>,
    pub nl: String,
    /// Grounded specification.
    pub spec: Formula,
}

/// Solves every task optimally; unsolvable tasks are skipped and reported.
pub fn export_training_pairs(
    tasks: &[PairTask<'_>],
    state_cap: usize,
    limits: &SearchLimits,
) -> (Vec<TrainingPair>, Vec<SkippedTask>) {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (index, t) in tasks.iter().enumerate() {
        let solved = crate::decoding::compile_for(t.env, &t.spec, state_cap)
            .map_err(OracleError::from)
            .and_then(|a| optimal_plan(t.env, &a, limits));
        match solved {
            Ok(best) => pairs.push(TrainingPair {
                environment_id: t.env.id().to_string(),
                env_file: t.env_file.clone(),
                nl: t.nl.clone(),
                ltl_prefix: t.spec.to_prefix(),
                plan: best.plan,
                cost: best.cost,
            }),
            Err(e) => skipped.push(SkippedTask {
                index,
                reason: e.to_string(),
            }),
        }
    }
    (pairs, skipped)
}
