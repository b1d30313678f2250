//! Constrained decoding: sample actions from a policy, mask every action
//! whose progression lands in a dead automaton state, renormalize, resample.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::{compile, Alphabet, AlphabetMode, AutomatonError, StateId, TraceAutomaton};
use crate::environment::{Action, EnvError, EnvState, Environment, Location, Plan, DONE};
use crate::ltl::Formula;

/// Tolerance on the sum of a distribution's probabilities.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodingError {
    #[error("invalid action distribution: {0}")]
    InvalidDistribution(String),
    #[error("dead end at step {step}: every candidate action was masked")]
    DeadEnd { step: usize },
    #[error("step limit of {max_steps} reached without satisfying the specification")]
    StepLimit { max_steps: usize },
    #[error("time limit exceeded after {steps} steps")]
    TimeLimit { steps: usize },
    #[error("specification is unsatisfiable: the initial automaton state is dead")]
    Unsatisfiable,
    #[error("policy error: {0}")]
    Policy(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Environment(#[from] EnvError),
}

/// A probability distribution over candidate action strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    entries: Vec<(String, f64)>,
}

impl ActionDistribution {
    /// Validates an explicit distribution.
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self, DecodingError> {
        if entries.is_empty() {
            return Err(DecodingError::InvalidDistribution("empty support".into()));
        }
        let mut seen = BTreeSet::new();
        for (a, p) in &entries {
            if !seen.insert(a.as_str()) {
                return Err(DecodingError::InvalidDistribution(format!(
                    "duplicate action `{a}`"
                )));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(DecodingError::InvalidDistribution(format!(
                    "probability {p} of `{a}` is outside [0, 1]"
                )));
            }
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DecodingError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(ActionDistribution { entries })
    }

    /// Normalizes non-negative weights. Zero-weight entries are dropped.
    pub fn from_weights(weights: Vec<(String, f64)>) -> Result<Self, DecodingError> {
        if let Some((a, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(DecodingError::InvalidDistribution(format!(
                "bad weight {w} for `{a}`"
            )));
        }
        let kept: Vec<(String, f64)> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(DecodingError::InvalidDistribution(
                "no positive weight".into(),
            ));
        }
        Self::new(kept.into_iter().map(|(a, w)| (a, w / total)).collect())
            .map_err(|_| DecodingError::InvalidDistribution("weights do not normalize".into()))
    }

    pub fn uniform<S: Into<String>>(
        actions: impl IntoIterator<Item = S>,
    ) -> Result<Self, DecodingError> {
        Self::from_weights(actions.into_iter().map(|a| (a.into(), 1.0)).collect())
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, action: &str) -> f64 {
        self.entries
            .iter()
            .find(|(a, _)| a == action)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Removes `invalid` actions and rescales the rest; order is preserved.
    pub fn mask_and_renormalize(&self, invalid: &BTreeSet<String>) -> Result<Self, DecodingError> {
        if invalid.is_empty() {
            return Ok(self.clone());
        }
        let kept: Vec<(String, f64)> = self
            .entries
            .iter()
            .filter(|(a, _)| !invalid.contains(a))
            .cloned()
            .collect();
        let total: f64 = kept.iter().map(|(_, p)| p).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(DecodingError::DeadEnd { step: 0 });
        }
        Ok(ActionDistribution {
            entries: kept.into_iter().map(|(a, p)| (a, p / total)).collect(),
        })
    }

    /// Draws an index by inverse-CDF sampling.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, (_, p)) in self.entries.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding slack: last entry with positive mass
        self.entries
            .iter()
            .rposition(|(_, p)| *p > 0.0)
            .unwrap_or(0)
    }
}

/// What a policy sees when asked for the next action.
pub struct PolicyQuery<'a> {
    pub env: &'a Environment,
    pub env_text: &'a str,
    pub task: &'a str,
    pub history: &'a [String],
    pub state: &'a EnvState,
    /// Applicable actions followed by DONE.
    pub candidates: &'a [String],
}

/// Any stochastic source of next actions.
pub trait Policy {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError> {
        (**self).distribution(query)
    }
}

/// Equal mass on every candidate.
#[derive(Debug, Clone, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError> {
        ActionDistribution::uniform(query.candidates.iter().cloned())
    }
}

/// Favors cheap actions that touch entities not yet visited.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    /// Weight of DONE relative to the best action.
    pub done_weight: f64,
    /// How strongly cost differences are amplified.
    pub sharpness: f64,
    /// Multiplier for actions whose target already appears in the history.
    pub revisit_penalty: f64,
}

impl Default for GreedyPolicy {
    fn default() -> Self {
        GreedyPolicy {
            done_weight: 0.5,
            sharpness: 6.0,
            revisit_penalty: 0.05,
        }
    }
}

fn action_target(a: &str) -> Option<&str> {
    let mut words = a.split_whitespace();
    match words.next()? {
        "Goto" => words.next(),
        "Move" => words.next(),
        _ => None,
    }
}

impl Policy for GreedyPolicy {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError> {
        let mut costs = Vec::new();
        for a in query.candidates.iter().filter(|a| *a != DONE) {
            let t = query.env.apply_str(query.state, a)?;
            costs.push((a.clone(), t.cost));
        }
        let visited: BTreeSet<&str> = query
            .history
            .iter()
            .filter_map(|a| action_target(a))
            .collect();
        let here = match query.state.location {
            Location::At(i) => Some(query.env.entities()[i].name.as_str()),
            Location::Start => None,
        };
        let lo = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let hi = costs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-9);
        let mut weights: Vec<(String, f64)> = costs
            .into_iter()
            .map(|(a, c)| {
                let mut w = (-self.sharpness * (c - lo) / span).exp();
                let target = action_target(&a);
                if target.is_some_and(|t| visited.contains(t) || Some(t) == here) {
                    w *= self.revisit_penalty;
                }
                (a, w)
            })
            .collect();
        if query.candidates.iter().any(|a| a == DONE) {
            weights.push((DONE.to_string(), self.done_weight));
        }
        ActionDistribution::from_weights(weights)
    }
}

/// One `{action, weight}` pair, as used by scripted tables and the
/// subprocess protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAction {
    pub action: String,
    pub weight: f64,
}

/// Replays a fixed per-step table of weights. Entries that are not
/// candidates are dropped; if nothing remains the step falls back to uniform.
/// Past the end of the table only DONE is proposed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScriptedPolicy {
    pub steps: Vec<Vec<WeightedAction>>,
}

impl Policy for ScriptedPolicy {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError> {
        let Some(row) = self.steps.get(query.history.len()) else {
            return ActionDistribution::uniform([DONE]);
        };
        let weights: Vec<(String, f64)> = row
            .iter()
            .filter(|w| query.candidates.contains(&w.action))
            .map(|w| (w.action.clone(), w.weight))
            .collect();
        ActionDistribution::from_weights(weights)
            .or_else(|_| ActionDistribution::uniform(query.candidates.iter().cloned()))
    }
}

/// Request line written to a policy subprocess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRequest {
    pub env: String,
    pub task: String,
    pub history: Vec<String>,
    pub candidates: Vec<String>,
}

/// Response line read back from a policy subprocess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResponse {
    pub actions: Vec<WeightedAction>,
}

/// Talks to an external process over line-delimited JSON. See
/// `docs/PROTOCOL.md`.
pub struct SubprocessPolicy {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl SubprocessPolicy {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, DecodingError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| DecodingError::Policy(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessPolicy {
            child,
            stdin,
            stdout,
        })
    }
}

impl Drop for SubprocessPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Policy for SubprocessPolicy {
    fn distribution(
        &mut self,
        query: &PolicyQuery<'_>,
    ) -> Result<ActionDistribution, DecodingError> {
        let request = PolicyRequest {
            env: query.env_text.to_string(),
            task: query.task.to_string(),
            history: query.history.to_vec(),
            candidates: query.candidates.to_vec(),
        };
        let io = |e: std::io::Error| DecodingError::Policy(e.to_string());
        let line = serde_json::to_string(&request).expect("request serializes");
        writeln!(self.stdin, "{line}").map_err(io)?;
        self.stdin.flush().map_err(io)?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply).map_err(io)? == 0 {
            return Err(DecodingError::Policy(
                "policy process closed its output".into(),
            ));
        }
        let response: PolicyResponse = serde_json::from_str(reply.trim())
            .map_err(|e| DecodingError::Policy(format!("malformed response: {e}")))?;
        if let Some(bad) = response
            .actions
            .iter()
            .find(|w| !query.candidates.contains(&w.action))
        {
            return Err(DecodingError::Policy(format!(
                "response names non-candidate action `{}`",
                bad.action
            )));
        }
        ActionDistribution::from_weights(
            response
                .actions
                .into_iter()
                .map(|w| (w.action, w.weight))
                .collect(),
        )
    }
}

/// Answers protocol requests with uniform weights; the server half of the
/// protocol, for testing external-policy wiring.
pub fn serve_uniform(input: impl BufRead, mut output: impl Write) -> std::io::Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: PolicyRequest = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let response = PolicyResponse {
            actions: request
                .candidates
                .into_iter()
                .map(|action| WeightedAction {
                    action,
                    weight: 1.0,
                })
                .collect(),
        };
        writeln!(
            output,
            "{}",
            serde_json::to_string(&response).expect("response serializes")
        )?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// One masked candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedAction {
    pub action: String,
    /// Probability just before this action was masked.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub chosen: String,
    pub masked: Vec<MaskedAction>,
}

/// Options for a decoding run.
#[derive(Debug, Clone)]
pub struct DecodeConfig {
    pub seed: u64,
    /// Defaults to four times the number of environment entities.
    pub max_steps: Option<usize>,
    /// When false the policy's samples are committed unchecked.
    pub constrained: bool,
    pub deadline: Option<Instant>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            seed: 0,
            max_steps: None,
            constrained: true,
            deadline: None,
        }
    }
}

pub fn default_max_steps(env: &Environment) -> usize {
    4 * env.entities().len()
}

/// The planning alphabet of an environment: its event propositions, one per
/// step.
pub fn planning_alphabet(env: &Environment) -> Result<Alphabet, AutomatonError> {
    Alphabet::new(env.propositions(), AlphabetMode::OneHot)
}

/// Compiles `spec` over the planning alphabet of `env`.
pub fn compile_for(
    env: &Environment,
    spec: &Formula,
    state_cap: usize,
) -> Result<TraceAutomaton, AutomatonError> {
    compile(spec, &planning_alphabet(env)?, state_cap)
}

/// Mutable state of one plan being decoded.
pub struct DecodingSession<'a> {
    env: &'a Environment,
    automaton: &'a TraceAutomaton,
    env_text: String,
    task: String,
    history: Vec<String>,
    env_state: EnvState,
    q: StateId,
    cost: f64,
    rng: ChaCha8Rng,
    max_steps: usize,
    constrained: bool,
    deadline: Option<Instant>,
    log: Vec<StepRecord>,
    finished: bool,
}

impl<'a> DecodingSession<'a> {
    /// Starts a session. `automaton` must be compiled over
    /// [`planning_alphabet`] of `env`.
    pub fn new(
        env: &'a Environment,
        automaton: &'a TraceAutomaton,
        task: impl Into<String>,
        config: &DecodeConfig,
    ) -> Result<Self, DecodingError> {
        if automaton.mode() != AlphabetMode::OneHot || automaton.universe() != env.propositions() {
            return Err(DecodingError::Automaton(AutomatonError::AlphabetMismatch));
        }
        if config.constrained && automaton.is_dead(automaton.initial()) {
            return Err(DecodingError::Unsatisfiable);
        }
        Ok(DecodingSession {
            env,
            automaton,
            env_text: env.describe(),
            task: task.into(),
            history: Vec::new(),
            env_state: env.initial_state(),
            q: automaton.initial(),
            cost: 0.0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            max_steps: config.max_steps.unwrap_or_else(|| default_max_steps(env)),
            constrained: config.constrained,
            deadline: config.deadline,
            log: Vec::new(),
            finished: false,
        })
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    pub fn automaton_state(&self) -> StateId {
        self.q
    }

    pub fn env_state(&self) -> &EnvState {
        &self.env_state
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Candidate actions at this step: the applicable ones, then DONE.
    pub fn candidates(&self) -> Vec<String> {
        let mut c: Vec<String> = self
            .env
            .applicable(&self.env_state)
            .iter()
            .map(Action::to_string)
            .collect();
        c.push(DONE.to_string());
        c
    }

    /// Automaton state after `action`, or `None` when the action would make
    /// the plan unsafe.
    fn validate(&self, action: &str) -> Result<Option<StateId>, DecodingError> {
        if action == DONE {
            return Ok(self.automaton.is_accepting(self.q).then_some(self.q));
        }
        let t = self.env.apply_str(&self.env_state, action)?;
        let next = self
            .automaton
            .step_event(self.q, &t.event)
            .ok_or_else(|| AutomatonError::UnknownAtom(t.event.clone()))?;
        Ok((!self.automaton.is_dead(next)).then_some(next))
    }

    /// Queries the policy once and commits one action.
    pub fn step(&mut self, policy: &mut dyn Policy) -> Result<String, DecodingError> {
        let step = self.history.len();
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                return Err(DecodingError::TimeLimit { steps: step });
            }
        }
        let at_limit = step >= self.max_steps;
        let candidates = if at_limit {
            vec![DONE.to_string()]
        } else {
            self.candidates()
        };
        let query = PolicyQuery {
            env: self.env,
            env_text: &self.env_text,
            task: &self.task,
            history: &self.history,
            state: &self.env_state,
            candidates: &candidates,
        };
        let mut dist = if at_limit {
            ActionDistribution::uniform([DONE])?
        } else {
            policy.distribution(&query)?
        };
        if let Some((bad, _)) = dist.entries().iter().find(|(a, _)| !candidates.contains(a)) {
            return Err(DecodingError::Policy(format!("`{bad}` is not a candidate")));
        }
        let mut masked = Vec::new();
        let chosen = loop {
            let i = dist.sample_index(&mut self.rng);
            let (action, p) = dist.entries()[i].clone();
            if !self.constrained {
                break action;
            }
            if self.validate(&action)?.is_some() {
                break action;
            }
            masked.push(MaskedAction {
                action: action.clone(),
                probability: p,
            });
            dist = match dist.mask_and_renormalize(&BTreeSet::from([action])) {
                Ok(d) => d,
                Err(_) if at_limit => {
                    return Err(DecodingError::StepLimit {
                        max_steps: self.max_steps,
                    })
                }
                Err(_) => return Err(DecodingError::DeadEnd { step }),
            };
        };
        self.commit(&chosen)?;
        self.log.push(StepRecord {
            step,
            chosen: chosen.clone(),
            masked,
        });
        Ok(chosen)
    }

    fn commit(&mut self, action: &str) -> Result<(), DecodingError> {
        if action == DONE {
            self.finished = true;
            return Ok(());
        }
        let t = self.env.apply_str(&self.env_state, action)?;
        let next = self
            .automaton
            .step_event(self.q, &t.event)
            .ok_or_else(|| AutomatonError::UnknownAtom(t.event.clone()))?;
        self.env_state = t.next;
        self.q = next;
        self.cost += t.cost;
        self.history.push(action.to_string());
        Ok(())
    }

    /// Steps until DONE is committed.
    pub fn run_to_end(&mut self, policy: &mut dyn Policy) -> Result<Plan, DecodingError> {
        while !self.finished {
            self.step(policy)?;
        }
        Ok(Plan::from_steps(self.history.clone())?)
    }
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub plan: Plan,
    pub cost: f64,
    pub log: Vec<StepRecord>,
}

/// Decodes a complete plan for `spec`.
pub fn run(
    env: &Environment,
    task: &str,
    automaton: &TraceAutomaton,
    policy: &mut dyn Policy,
    config: &DecodeConfig,
) -> Result<DecodeOutcome, DecodingError> {
    let mut session = DecodingSession::new(env, automaton, task, config)?;
    let plan = session.run_to_end(policy)?;
    Ok(DecodeOutcome {
        plan,
        cost: session.cost,
        log: session.log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::DEFAULT_STATE_CAP;
    use crate::environment::{DomainKind, Entity, EntityRole, Speeds};
    use crate::ltl::{evaluate, parse_infix};

    fn dist(pairs: &[(&str, f64)]) -> ActionDistribution {
        ActionDistribution::new(pairs.iter().map(|(a, p)| (a.to_string(), *p)).collect()).unwrap()
    }

    fn line_env(names: &[&str]) -> Environment {
        let entities = names
            .iter()
            .enumerate()
            .map(|(i, n)| Entity {
                name: n.to_string(),
                role: EntityRole::Landmark,
                x: (i + 1) as f64,
                y: 0.0,
                z: 0.0,
            })
            .collect();
        let speeds = Speeds {
            travel: 1.0,
            action_overhead: 0.0,
            pick_place_overhead: 0.0,
        };
        Environment::new(
            "line",
            DomainKind::Navigation,
            entities,
            [0.0; 3],
            speeds,
            None,
        )
        .unwrap()
    }

    #[test]
    fn masked_mass_is_renormalized() {
        let d = dist(&[
            ("Goto A_landmark", 0.75),
            ("Goto B_landmark", 0.19),
            ("Goto D_landmark", 0.04),
            (DONE, 0.02),
        ]);
        let m = d
            .mask_and_renormalize(&BTreeSet::from([
                "Goto A_landmark".to_string(),
                DONE.to_string(),
            ]))
            .unwrap();
        assert_eq!(m.entries()[0].0, "Goto B_landmark");
        assert!((m.entries()[0].1 - 0.8261).abs() < 1e-4);
        assert!((m.entries()[1].1 - 0.1739).abs() < 1e-4);
    }

    #[test]
    fn masking_edge_cases() {
        let d = dist(&[("X", 0.5), ("Y", 0.5)]);
        assert_eq!(d.mask_and_renormalize(&BTreeSet::new()).unwrap(), d);
        let all = BTreeSet::from(["X".to_string(), "Y".to_string()]);
        assert!(matches!(
            d.mask_and_renormalize(&all),
            Err(DecodingError::DeadEnd { .. })
        ));
    }

    #[test]
    fn distribution_validation() {
        assert!(ActionDistribution::new(vec![]).is_err());
        assert!(ActionDistribution::new(vec![("a".into(), 0.5)]).is_err());
        assert!(ActionDistribution::new(vec![("a".into(), 0.5), ("a".into(), 0.5)]).is_err());
        assert!(ActionDistribution::from_weights(vec![("a".into(), -1.0)]).is_err());
        let d =
            ActionDistribution::from_weights(vec![("a".into(), 3.0), ("b".into(), 1.0)]).unwrap();
        assert_eq!(d.probability("a"), 0.75);
    }

    #[test]
    fn masking_example_matches_expected_weights() {
        // visiting A first is forbidden
        let env = line_env(&["A_landmark", "B_landmark", "D_landmark"]);
        let spec = parse_infix("!A_landmark U B_landmark").unwrap();
        let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
        let mut policy = ScriptedPolicy {
            steps: vec![vec![
                WeightedAction {
                    action: "Goto A_landmark".into(),
                    weight: 0.75,
                },
                WeightedAction {
                    action: "Goto B_landmark".into(),
                    weight: 0.19,
                },
                WeightedAction {
                    action: "Goto D_landmark".into(),
                    weight: 0.04,
                },
                WeightedAction {
                    action: DONE.into(),
                    weight: 0.02,
                },
            ]],
        };
        for seed in 0..50 {
            let config = DecodeConfig {
                seed,
                ..Default::default()
            };
            let mut s = DecodingSession::new(&env, &a, "task", &config).unwrap();
            let chosen = s.step(&mut policy).unwrap();
            assert!(chosen == "Goto B_landmark" || chosen == "Goto D_landmark");
            assert!(!a.is_dead(s.automaton_state()));
        }
    }

    #[test]
    fn done_is_masked_until_accepting() {
        let env = line_env(&["A"]);
        let spec = parse_infix("F A").unwrap();
        let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
        for seed in 0..20 {
            let config = DecodeConfig {
                seed,
                ..Default::default()
            };
            let mut s = DecodingSession::new(&env, &a, "", &config).unwrap();
            assert_eq!(s.step(&mut UniformPolicy).unwrap(), "Goto A");
            if let Some(m) = s.log()[0].masked.first() {
                assert_eq!(m.action, DONE);
                assert_eq!(m.probability, 0.5);
            }
        }
    }

    #[test]
    fn trivial_and_unsatisfiable_specs() {
        let env = line_env(&["A", "B"]);
        let t = compile_for(&env, &Formula::True, 10).unwrap();
        let out = run(&env, "", &t, &mut UniformPolicy, &DecodeConfig::default()).unwrap();
        assert!(out.log.iter().all(|r| r.masked.is_empty()));
        let f = compile_for(&env, &Formula::False, 10).unwrap();
        assert!(matches!(
            run(&env, "", &f, &mut UniformPolicy, &DecodeConfig::default()),
            Err(DecodingError::Unsatisfiable)
        ));
    }

    #[test]
    fn returned_plans_are_safe_and_reproducible() {
        let env = line_env(&["A", "B", "C", "D"]);
        let spec = parse_infix("F A & F C & G(A -> X B) & !C U D").unwrap();
        let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
        for seed in 0..100 {
            let config = DecodeConfig {
                seed,
                ..Default::default()
            };
            match run(&env, "", &a, &mut UniformPolicy, &config) {
                Ok(out) => {
                    let (trace, cost) = env.simulate(&out.plan).unwrap();
                    assert!(evaluate(&spec, &trace, 0).unwrap());
                    assert!((cost - out.cost).abs() < 1e-9);
                    let again = run(&env, "", &a, &mut UniformPolicy, &config).unwrap();
                    assert_eq!(again.plan, out.plan);
                }
                Err(DecodingError::StepLimit { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn step_limit() {
        let env = line_env(&["A", "B"]);
        let a = compile_for(&env, &parse_infix("F A").unwrap(), 10).unwrap();
        let mut never_a = ScriptedPolicy {
            steps: vec![
                vec![WeightedAction {
                    action: "Goto B".into(),
                    weight: 1.0
                }];
                10
            ],
        };
        let config = DecodeConfig {
            max_steps: Some(3),
            ..Default::default()
        };
        assert_eq!(
            run(&env, "", &a, &mut never_a, &config).unwrap_err(),
            DecodingError::StepLimit { max_steps: 3 }
        );
    }

    #[test]
    fn greedy_prefers_nearby_unvisited() {
        let env = line_env(&["A", "B", "C"]);
        let s = env.initial_state();
        let candidates: Vec<String> = vec![
            "Goto A".into(),
            "Goto B".into(),
            "Goto C".into(),
            DONE.into(),
        ];
        let q = PolicyQuery {
            env: &env,
            env_text: "",
            task: "",
            history: &[],
            state: &s,
            candidates: &candidates,
        };
        let d = GreedyPolicy::default().distribution(&q).unwrap();
        assert!(d.probability("Goto A") > d.probability("Goto B"));
        assert!(d.probability("Goto B") > d.probability("Goto C"));
    }

    #[test]
    fn uniform_server_round_trip() {
        let req = PolicyRequest {
            env: "e".into(),
            task: "t".into(),
            history: vec![],
            candidates: vec!["Goto A".into(), DONE.into()],
        };
        let input = serde_json::to_string(&req).unwrap() + "\n";
        let mut out = Vec::new();
        assert_eq!(serve_uniform(input.as_bytes(), &mut out).unwrap(), 1);
        let resp: PolicyResponse = serde_json::from_slice(&out).unwrap();
        assert_eq!(resp.actions.len(), 2);
    }
}
