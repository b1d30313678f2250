use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::{compile, Alphabet, AutomatonError, StateId, TraceAutomaton};
use crate::ltl::Formula;

/// Shortest distinguishing word of two automata over the same alphabet, as
/// letter indices. Among shortest words the lexicographically least (by
/// letter index) is returned. `None` means the languages coincide.
pub(crate) fn product_witness(
    a: &TraceAutomaton,
    b: &TraceAutomaton,
) -> Result<Option<Vec<usize>>, AutomatonError> {
    if a.alphabet() != b.alphabet() {
        return Err(AutomatonError::AlphabetMismatch);
    }
    let k = a.alphabet().len();
    let start = (a.initial(), b.initial());
    type Pair = (StateId, StateId);
    let mut parent: HashMap<Pair, Option<(Pair, usize)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(pair) = queue.pop_front() {
        if a.is_accepting(pair.0) != b.is_accepting(pair.1) {
            let mut word = Vec::new();
            let mut cur = pair;
            while let Some(Some((prev, letter))) = parent.get(&cur) {
                word.push(*letter);
                cur = *prev;
            }
            word.reverse();
            return Ok(Some(word));
        }
        for letter in 0..k {
            let next = (a.step(pair.0, letter), b.step(pair.1, letter));
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((pair, letter)));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// Equivalence queries with a per-formula automaton cache.
#[derive(Debug)]
pub struct EquivalenceChecker {
    alphabet: Alphabet,
    state_cap: usize,
    cache: HashMap<Formula, Result<Arc<TraceAutomaton>, AutomatonError>>,
    calls: usize,
}

impl EquivalenceChecker {
    pub fn new(alphabet: Alphabet, state_cap: usize) -> Self {
        EquivalenceChecker {
            alphabet,
            state_cap,
            cache: HashMap::new(),
            calls: 0,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of equivalence queries answered so far.
    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn automaton(&mut self, f: &Formula) -> Result<Arc<TraceAutomaton>, AutomatonError> {
        if let Some(r) = self.cache.get(f) {
            return r.clone();
        }
        let r = compile(f, &self.alphabet, self.state_cap).map(Arc::new);
        self.cache.insert(f.clone(), r.clone());
        r
    }

    pub fn equivalent(&mut self, f: &Formula, g: &Formula) -> Result<bool, AutomatonError> {
        Ok(self.witness(f, g)?.is_none())
    }

    /// Shortest distinguishing trace, if any.
    pub fn witness(
        &mut self,
        f: &Formula,
        g: &Formula,
    ) -> Result<Option<Vec<BTreeSet<String>>>, AutomatonError> {
        self.calls += 1;
        if f == g {
            return Ok(None);
        }
        let a = self.automaton(f)?;
        let b = self.automaton(g)?;
        Ok(product_witness(&a, &b)?.map(|word| {
            word.into_iter()
                .map(|l| {
                    self.alphabet
                        .letter_atoms(l)
                        .into_iter()
                        .map(str::to_string)
                        .collect()
                })
                .collect()
        }))
    }
}

/// Whether `f` and `g` accept exactly the same finite traces over `alphabet`.
pub fn are_equivalent(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    state_cap: usize,
) -> Result<bool, AutomatonError> {
    EquivalenceChecker::new(alphabet.clone(), state_cap).equivalent(f, g)
}

/// Shortest (then lexicographically least) trace accepted by exactly one of
/// `f` and `g`.
pub fn distinguishing_trace(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    state_cap: usize,
) -> Result<Option<Vec<BTreeSet<String>>>, AutomatonError> {
    EquivalenceChecker::new(alphabet.clone(), state_cap).witness(f, g)
}
