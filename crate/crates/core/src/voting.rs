//! Equivalence voting: group candidate formulas by language equivalence and
//! pick a representative of the largest group.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::{
    Alphabet, AlphabetMode, AutomatonError, EquivalenceChecker, DEFAULT_STATE_CAP,
};
use crate::ltl::{parse_any, Formula};

/// Attempts allowed when looking for an inequivalent mutant.
pub const MUTATION_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VotingError {
    #[error("no parseable candidates")]
    NoCandidates,
    #[error("no inequivalent mutant of `{0}` found in {MUTATION_ATTEMPTS} attempts")]
    TrivialFormula(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// One equivalence class of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteGroup {
    /// Candidate indices, ascending.
    pub members: Vec<usize>,
    /// Member with the least prefix rendering.
    pub representative: Formula,
    /// Automaton state count of the representative; `None` when compilation
    /// hit the state cap (the group is then a quarantined singleton).
    pub states: Option<usize>,
}

impl VoteGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn quarantined(&self) -> bool {
        self.states.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub candidates: Vec<Formula>,
    /// Group id of every candidate.
    pub assignment: Vec<usize>,
    pub groups: Vec<VoteGroup>,
    /// Product-automaton equivalence checks performed.
    pub equivalence_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub partition: Partition,
    pub winner: usize,
    pub representative: Formula,
    /// Set when several groups shared the maximal size.
    pub tie: bool,
    /// Candidates dropped before grouping because they did not parse.
    pub dropped: usize,
}

impl VoteResult {
    pub fn group_sizes(&self) -> Vec<usize> {
        self.partition.groups.iter().map(VoteGroup::size).collect()
    }
}

/// Alphabet over the union of the candidates' atoms.
pub fn voting_alphabet(candidates: &[Formula]) -> Result<Alphabet, AutomatonError> {
    let atoms: BTreeSet<String> = candidates.iter().flat_map(Formula::atoms).collect();
    Alphabet::new(atoms, AlphabetMode::Full)
}

/// Partitions `candidates` into equivalence classes, comparing each new
/// formula only against existing group representatives.
pub fn group_by_equivalence(
    candidates: &[Formula],
    state_cap: usize,
) -> Result<Partition, VotingError> {
    if candidates.is_empty() {
        return Err(VotingError::NoCandidates);
    }
    let mut checker = EquivalenceChecker::new(voting_alphabet(candidates)?, state_cap);
    let mut assignment = vec![usize::MAX; candidates.len()];
    let mut seen: HashMap<&Formula, usize> = HashMap::new();
    // (first member, states)
    let mut heads: Vec<(usize, Option<usize>)> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, f) in candidates.iter().enumerate() {
        if let Some(&g) = seen.get(f) {
            assignment[i] = g;
            members[g].push(i);
            continue;
        }
        let group = match checker.automaton(f) {
            Err(AutomatonError::StateCapExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
            Ok(a) => {
                let states = a.num_states();
                let mut found = None;
                for (g, &(head, head_states)) in heads.iter().enumerate() {
                    if head_states.is_none() {
                        continue;
                    }
                    match checker.equivalent(f, &candidates[head]) {
                        Ok(true) => {
                            found = Some(g);
                            break;
                        }
                        Ok(false) => {}
                        Err(AutomatonError::StateCapExceeded { .. }) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
                Some(found.unwrap_or_else(|| {
                    heads.push((i, Some(states)));
                    members.push(Vec::new());
                    heads.len() - 1
                }))
            }
        };
        let g = group.unwrap_or_else(|| {
            heads.push((i, None));
            members.push(Vec::new());
            heads.len() - 1
        });
        seen.insert(f, g);
        assignment[i] = g;
        members[g].push(i);
    }
    let mut groups = Vec::with_capacity(heads.len());
    for (g, m) in members.into_iter().enumerate() {
        let representative = m
            .iter()
            .map(|&i| &candidates[i])
            .min_by_key(|f| f.to_prefix())
            .expect("groups are non-empty")
            .clone();
        let states = match heads[g].1 {
            None => None,
            Some(_) => Some(checker.automaton(&representative)?.num_states()),
        };
        groups.push(VoteGroup {
            members: m,
            representative,
            states,
        });
    }
    Ok(Partition {
        candidates: candidates.to_vec(),
        assignment,
        groups,
        equivalence_calls: checker.calls(),
    })
}

/// Majority vote. Ties go to the smaller automaton, then to the least
/// prefix rendering.
pub fn vote(candidates: &[Formula], state_cap: usize) -> Result<VoteResult, VotingError> {
    let partition = group_by_equivalence(candidates, state_cap)?;
    let best = partition
        .groups
        .iter()
        .map(VoteGroup::size)
        .max()
        .expect("non-empty");
    let tied: Vec<usize> = (0..partition.groups.len())
        .filter(|&g| partition.groups[g].size() == best)
        .collect();
    let winner = *tied
        .iter()
        .min_by_key(|&&g| {
            let grp = &partition.groups[g];
            (
                grp.states.unwrap_or(usize::MAX),
                grp.representative.to_prefix(),
            )
        })
        .expect("non-empty");
    Ok(VoteResult {
        representative: partition.groups[winner].representative.clone(),
        winner,
        tie: tied.len() > 1,
        dropped: 0,
        partition,
    })
}

/// Votes over raw text lines (infix or prefix); unparseable lines are
/// dropped and counted.
pub fn vote_texts<S: AsRef<str>>(lines: &[S], state_cap: usize) -> Result<VoteResult, VotingError> {
    let parsed: Vec<Formula> = lines
        .iter()
        .filter_map(|l| parse_any(l.as_ref()).ok())
        .collect();
    let dropped = lines.len() - parsed.len();
    let mut r = vote(&parsed, state_cap)?;
    r.dropped = dropped;
    Ok(r)
}

fn binary_nodes(f: &Formula, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if matches!(
        f,
        Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Until(..)
    ) {
        out.push(path.clone());
    }
    for (i, c) in f.children().into_iter().enumerate() {
        path.push(i);
        binary_nodes(c, path, out);
        path.pop();
    }
}

fn temporal_nodes(f: &Formula, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if matches!(
        f,
        Formula::Finally(_) | Formula::Globally(_) | Formula::Until(..)
    ) {
        out.push(path.clone());
    }
    for (i, c) in f.children().into_iter().enumerate() {
        path.push(i);
        temporal_nodes(c, path, out);
        path.pop();
    }
}

fn atom_nodes(f: &Formula, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if matches!(f, Formula::Atom(_)) {
        out.push(path.clone());
    }
    for (i, c) in f.children().into_iter().enumerate() {
        path.push(i);
        atom_nodes(c, path, out);
        path.pop();
    }
}

fn rewrite_at(f: &Formula, path: &[usize], edit: &mut dyn FnMut(&Formula) -> Formula) -> Formula {
    let Some((&first, rest)) = path.split_first() else {
        return edit(f);
    };
    let mut child = |c: &Formula, i: usize| -> Formula {
        if i == first {
            rewrite_at(c, rest, &mut *edit)
        } else {
            c.clone()
        }
    };
    match f {
        Formula::Not(c) => Formula::not(child(c, 0)),
        Formula::Next(c) => Formula::next(child(c, 0)),
        Formula::Globally(c) => Formula::globally(child(c, 0)),
        Formula::Finally(c) => Formula::finally(child(c, 0)),
        Formula::And(l, r) => {
            let l2 = child(l, 0);
            Formula::and(l2, child(r, 1))
        }
        Formula::Or(l, r) => {
            let l2 = child(l, 0);
            Formula::or(l2, child(r, 1))
        }
        Formula::Implies(l, r) => {
            let l2 = child(l, 0);
            Formula::implies(l2, child(r, 1))
        }
        Formula::Until(l, r) => {
            let l2 = child(l, 0);
            Formula::until(l2, child(r, 1))
        }
        leaf => leaf.clone(),
    }
}

fn swap_operands(f: &Formula) -> Formula {
    match f {
        Formula::And(l, r) => Formula::and((**r).clone(), (**l).clone()),
        Formula::Or(l, r) => Formula::or((**r).clone(), (**l).clone()),
        Formula::Implies(l, r) => Formula::implies((**r).clone(), (**l).clone()),
        Formula::Until(l, r) => Formula::until((**r).clone(), (**l).clone()),
        other => other.clone(),
    }
}

fn swap_temporal(f: &Formula) -> Formula {
    match f {
        Formula::Finally(c) => Formula::globally((**c).clone()),
        Formula::Globally(c) => Formula::finally((**c).clone()),
        other => swap_operands(other),
    }
}

/// One random syntactic edit of `f` (not checked for inequivalence).
pub fn random_edit<R: Rng + ?Sized>(
    f: &Formula,
    universe: &[String],
    rng: &mut R,
) -> Option<Formula> {
    let mut binaries = Vec::new();
    let mut temporals = Vec::new();
    let mut atoms = Vec::new();
    binary_nodes(f, &mut Vec::new(), &mut binaries);
    temporal_nodes(f, &mut Vec::new(), &mut temporals);
    atom_nodes(f, &mut Vec::new(), &mut atoms);
    let own: Vec<String> = f.atoms().into_iter().collect();
    let mut kinds = Vec::new();
    if !binaries.is_empty() {
        kinds.push(0);
    }
    if !temporals.is_empty() {
        kinds.push(1);
    }
    if !atoms.is_empty() && universe.len() >= 2 {
        kinds.push(2);
    }
    if own.len() >= 2 {
        kinds.push(3);
    }
    match *kinds.choose(rng)? {
        0 => {
            let p = binaries.choose(rng)?;
            Some(rewrite_at(f, p, &mut swap_operands))
        }
        1 => {
            let p = temporals.choose(rng)?;
            Some(rewrite_at(f, p, &mut swap_temporal))
        }
        2 => {
            let p = atoms.choose(rng)?;
            let mut rename = |node: &Formula| -> Formula {
                let Formula::Atom(current) = node else {
                    return node.clone();
                };
                let others: Vec<&String> = universe.iter().filter(|a| *a != current).collect();
                Formula::Atom(others.choose(rng).map_or(current.clone(), |s| (*s).clone()))
            };
            Some(rewrite_at(f, p, &mut rename))
        }
        _ => {
            let mut pair: Vec<&String> = own.choose_multiple(rng, 2).collect();
            pair.sort();
            let (a, b) = (pair[0].clone(), pair[1].clone());
            f.map_atoms(&mut |x: &str| -> Result<String, ()> {
                Ok(if x == a {
                    b.clone()
                } else if x == b {
                    a.clone()
                } else {
                    x.to_string()
                })
            })
            .ok()
        }
    }
}

/// Mutates `f` into an inequivalent formula, retrying up to
/// [`MUTATION_ATTEMPTS`] times. Renames draw from `universe` (plus the atoms
/// of `f`).
pub fn mutate_formula<R: Rng + ?Sized>(
    f: &Formula,
    universe: &[String],
    rng: &mut R,
    checker: &mut EquivalenceChecker,
) -> Result<Formula, VotingError> {
    let mut pool: BTreeSet<String> = universe.iter().cloned().collect();
    pool.extend(f.atoms());
    let pool: Vec<String> = pool.into_iter().collect();
    for _ in 0..MUTATION_ATTEMPTS {
        let Some(m) = random_edit(f, &pool, rng) else {
            break;
        };
        if m == *f {
            continue;
        }
        if !checker.equivalent(f, &m)? {
            return Ok(m);
        }
    }
    Err(VotingError::TrivialFormula(f.to_infix()))
}

/// A checker over `universe` in full mode, suitable for [`mutate_formula`].
pub fn mutation_checker(universe: &[String]) -> Result<EquivalenceChecker, VotingError> {
    Ok(EquivalenceChecker::new(
        Alphabet::new(universe, AlphabetMode::Full)?,
        DEFAULT_STATE_CAP,
    ))
}

/// Source of candidate formulas for a natural-language request.
pub trait Translator {
    /// `None` marks an output that failed to parse.
    fn translate(&mut self, nl: &str, sample: usize) -> Option<Formula>;
}

/// Returns the ground truth with probability `p`, otherwise a fresh
/// inequivalent mutation of it.
pub struct NoisyOracleTranslator<R> {
    truth: Formula,
    p: f64,
    universe: Vec<String>,
    rng: R,
    checker: EquivalenceChecker,
}

impl<R: Rng> NoisyOracleTranslator<R> {
    pub fn new(truth: Formula, p: f64, universe: Vec<String>, rng: R) -> Result<Self, VotingError> {
        let mut pool: BTreeSet<String> = universe.into_iter().collect();
        pool.extend(truth.atoms());
        let universe: Vec<String> = pool.into_iter().collect();
        let checker = mutation_checker(&universe)?;
        Ok(NoisyOracleTranslator {
            truth,
            p,
            universe,
            rng,
            checker,
        })
    }
}

impl<R: Rng> Translator for NoisyOracleTranslator<R> {
    fn translate(&mut self, _nl: &str, _sample: usize) -> Option<Formula> {
        if self.rng.gen_bool(self.p) {
            return Some(self.truth.clone());
        }
        mutate_formula(
            &self.truth,
            &self.universe,
            &mut self.rng,
            &mut self.checker,
        )
        .ok()
    }
}

/// Draws `samples` candidates and votes; drops are counted.
pub fn translate_and_vote(
    translator: &mut dyn Translator,
    nl: &str,
    samples: usize,
    state_cap: usize,
) -> Result<VoteResult, VotingError> {
    let outputs: Vec<Option<Formula>> = (0..samples).map(|i| translator.translate(nl, i)).collect();
    let parsed: Vec<Formula> = outputs.iter().flatten().cloned().collect();
    let dropped = samples - parsed.len();
    let mut r = vote(&parsed, state_cap)?;
    r.dropped = dropped;
    Ok(r)
}
