//! Deterministic finite-trace automata built by formula progression.
//!
//! States are residual obligations in a canonical normal form; the
//! transition function is progression of the residual by one labeling; a
//! state accepts when its residual holds on the empty remainder. The dead set
//! holds every state that can no longer reach acceptance.

mod equiv;
mod export;
mod normal;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ltl::{is_valid_atom_name, Formula, Trace};
use normal::{Dnf, Normalizer};

pub use equiv::{are_equivalent, distinguishing_trace, EquivalenceChecker};

pub const DEFAULT_STATE_CAP: usize = 200_000;
/// Largest universe accepted in [`AlphabetMode::Full`].
pub const MAX_FULL_ATOMS: usize = 16;

pub type StateId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("state cap of {cap} exceeded ({explored} states discovered)")]
    StateCapExceeded { cap: usize, explored: usize },
    #[error("atom `{0}` is not in the automaton universe")]
    UnknownAtom(String),
    #[error("invalid or duplicate universe atom `{0}`")]
    BadUniverse(String),
    #[error("full alphabet over {0} atoms is too large (at most {MAX_FULL_ATOMS})")]
    AlphabetTooLarge(usize),
    #[error("labeling {0:?} is not a letter of the one-hot alphabet")]
    NotOneHot(Vec<String>),
    #[error("automata over different alphabets cannot be compared")]
    AlphabetMismatch,
}

/// Which labelings make up the alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphabetMode {
    /// Every subset of the universe.
    Full,
    /// Exactly the singleton labelings.
    OneHot,
}

impl fmt::Display for AlphabetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphabetMode::Full => "full",
            AlphabetMode::OneHot => "one-hot",
        })
    }
}

impl FromStr for AlphabetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(AlphabetMode::Full),
            "one-hot" | "onehot" => Ok(AlphabetMode::OneHot),
            other => Err(format!(
                "unknown alphabet mode `{other}` (expected full or one-hot)"
            )),
        }
    }
}

/// The alphabet of an automaton: an ordered universe plus a mode. Letters are
/// addressed by index; a letter's bitmask has bit `i` set when
/// `universe[i]` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    universe: Vec<String>,
    mode: AlphabetMode,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(
        universe: impl IntoIterator<Item = S>,
        mode: AlphabetMode,
    ) -> Result<Self, AutomatonError> {
        let universe: Vec<String> = universe
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .collect();
        let mut index = HashMap::new();
        for (i, a) in universe.iter().enumerate() {
            if !is_valid_atom_name(a) || index.insert(a.clone(), i).is_some() {
                return Err(AutomatonError::BadUniverse(a.clone()));
            }
        }
        match mode {
            AlphabetMode::Full if universe.len() > MAX_FULL_ATOMS => {
                return Err(AutomatonError::AlphabetTooLarge(universe.len()))
            }
            AlphabetMode::OneHot if universe.len() > 64 => {
                return Err(AutomatonError::AlphabetTooLarge(universe.len()))
            }
            _ => {}
        }
        Ok(Alphabet {
            universe,
            mode,
            index,
        })
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn mode(&self) -> AlphabetMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        match self.mode {
            AlphabetMode::Full => 1 << self.universe.len(),
            AlphabetMode::OneHot => self.universe.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mask(&self, letter: usize) -> u64 {
        match self.mode {
            AlphabetMode::Full => letter as u64,
            AlphabetMode::OneHot => 1u64 << letter,
        }
    }

    /// Sorted atom names of a letter.
    pub fn letter_atoms(&self, letter: usize) -> Vec<&str> {
        let m = self.mask(letter);
        let mut v: Vec<&str> = (0..self.universe.len())
            .filter(|i| m & (1 << i) != 0)
            .map(|i| self.universe[i].as_str())
            .collect();
        v.sort_unstable();
        v
    }

    /// Letter index of the single-proposition event `atom`.
    pub fn event(&self, atom: &str) -> Option<usize> {
        let i = *self.index.get(atom)?;
        Some(match self.mode {
            AlphabetMode::Full => 1 << i,
            AlphabetMode::OneHot => i,
        })
    }

    /// Letter index of an arbitrary labeling.
    pub fn letter_of<S: AsRef<str>>(&self, label: &BTreeSet<S>) -> Result<usize, AutomatonError> {
        let mut mask = 0u64;
        for a in label {
            let i = self
                .index
                .get(a.as_ref())
                .ok_or_else(|| AutomatonError::UnknownAtom(a.as_ref().to_string()))?;
            mask |= 1 << i;
        }
        match self.mode {
            AlphabetMode::Full => Ok(mask as usize),
            AlphabetMode::OneHot if mask.count_ones() == 1 => Ok(mask.trailing_zeros() as usize),
            AlphabetMode::OneHot => Err(AutomatonError::NotOneHot(
                label.iter().map(|a| a.as_ref().to_string()).collect(),
            )),
        }
    }

    fn check_atoms(&self, f: &Formula) -> Result<(), AutomatonError> {
        match f.atoms().into_iter().find(|a| !self.index.contains_key(a)) {
            Some(a) => Err(AutomatonError::UnknownAtom(a)),
            None => Ok(()),
        }
    }
}

/// A complete deterministic automaton over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceAutomaton {
    alphabet: Alphabet,
    residuals: Vec<Formula>,
    accepting: Vec<bool>,
    dead: Vec<bool>,
    /// `transitions[state * alphabet.len() + letter]`
    transitions: Vec<StateId>,
}

impl TraceAutomaton {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn universe(&self) -> &[String] {
        self.alphabet.universe()
    }

    pub fn mode(&self) -> AlphabetMode {
        self.alphabet.mode()
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn num_states(&self) -> usize {
        self.residuals.len()
    }

    /// Number of labeled transitions (one per state and letter).
    pub fn num_edges(&self) -> usize {
        self.transitions.len()
    }

    pub fn residual(&self, q: StateId) -> &Formula {
        &self.residuals[q as usize]
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q as usize]
    }

    pub fn is_dead(&self, q: StateId) -> bool {
        self.dead[q as usize]
    }

    pub fn step(&self, q: StateId, letter: usize) -> StateId {
        self.transitions[q as usize * self.alphabet.len() + letter]
    }

    /// Successor on the single-proposition event `atom`, if `atom` is in the
    /// universe.
    pub fn step_event(&self, q: StateId, atom: &str) -> Option<StateId> {
        self.alphabet.event(atom).map(|l| self.step(q, l))
    }

    /// State reached from the initial state by reading `letters`.
    pub fn run(&self, letters: impl IntoIterator<Item = usize>) -> StateId {
        letters
            .into_iter()
            .fold(self.initial(), |q, l| self.step(q, l))
    }

    /// Whether the automaton accepts `trace`.
    pub fn accepts(&self, trace: &Trace) -> Result<bool, AutomatonError> {
        let mut q = self.initial();
        for label in trace.labels() {
            q = self.step(q, self.alphabet.letter_of(label)?);
        }
        Ok(self.is_accepting(q))
    }

    pub fn dead_states(&self) -> BTreeSet<StateId> {
        (0..self.num_states() as StateId)
            .filter(|&q| self.dead[q as usize])
            .collect()
    }

    fn compute_dead(&mut self) {
        let n = self.num_states();
        let k = self.alphabet.len();
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for q in 0..n {
            for l in 0..k {
                let r = self.transitions[q * k + l] as usize;
                preds[r].push(q as StateId);
            }
        }
        let mut live = self.accepting.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&q| live[q]).collect();
        while let Some(q) = queue.pop_front() {
            for &p in &preds[q] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    queue.push_back(p as usize);
                }
            }
        }
        self.dead = live.into_iter().map(|l| !l).collect();
    }
}

/// Compiles `f` by breadth-first progression over every letter of the
/// alphabet. State 0 is the normal form of `f`.
pub fn compile(
    f: &Formula,
    alphabet: &Alphabet,
    state_cap: usize,
) -> Result<TraceAutomaton, AutomatonError> {
    alphabet.check_atoms(f)?;
    let cap = state_cap.max(1);
    let k = alphabet.len();
    let mut norm = Normalizer::new(alphabet.universe());
    let mut ids: HashMap<Dnf, StateId> = HashMap::new();
    let mut forms: Vec<Dnf> = Vec::new();
    let root = norm.normal_form(f);
    ids.insert(root.clone(), 0);
    forms.push(root);
    let mut transitions: Vec<StateId> = Vec::new();
    let mut q = 0;
    while q < forms.len() {
        let current = forms[q].clone();
        let relevant = norm.dnf_mask(&current);
        let mut by_projection: HashMap<u64, StateId> = HashMap::new();
        for letter in 0..k {
            let projected = alphabet.mask(letter) & relevant;
            let next = match by_projection.get(&projected) {
                Some(&s) => s,
                None => {
                    let succ = norm.progress(&current, projected);
                    let id = match ids.get(&succ) {
                        Some(&id) => id,
                        None => {
                            if forms.len() >= cap {
                                return Err(AutomatonError::StateCapExceeded {
                                    cap,
                                    explored: forms.len() + 1,
                                });
                            }
                            let id = forms.len() as StateId;
                            ids.insert(succ.clone(), id);
                            forms.push(succ);
                            id
                        }
                    };
                    by_projection.insert(projected, id);
                    id
                }
            };
            transitions.push(next);
        }
        q += 1;
    }
    let accepting = forms.iter().map(|d| norm.accepts_empty(d)).collect();
    let residuals = forms.iter().map(|d| norm.to_formula(d)).collect();
    let mut a = TraceAutomaton {
        alphabet: alphabet.clone(),
        residuals,
        accepting,
        dead: Vec::new(),
        transitions,
    };
    a.compute_dead();
    Ok(a)
}

/// One progression step of `f` by `label`, in canonical form.
pub fn progress<S: AsRef<str>>(f: &Formula, label: &BTreeSet<S>) -> Formula {
    let mut universe: BTreeSet<String> = f.atoms();
    universe.extend(label.iter().map(|s| s.as_ref().to_string()));
    let universe: Vec<String> = universe.into_iter().collect();
    let mask = universe
        .iter()
        .enumerate()
        .filter(|(_, a)| label.iter().any(|l| l.as_ref() == a.as_str()))
        .fold(0u64, |m, (i, _)| m | 1 << i);
    let mut norm = Normalizer::new(&universe);
    let d = norm.normal_form(f);
    let next = norm.progress(&d, mask);
    norm.to_formula(&next)
}

/// Canonical normal form of `f` (the residual an automaton for `f` starts
/// in).
pub fn canonical(f: &Formula) -> Formula {
    let universe: Vec<String> = f.atoms().into_iter().collect();
    let mut norm = Normalizer::new(&universe);
    let d = norm.normal_form(f);
    norm.to_formula(&d)
}

/// Whether `f` holds on the empty trace.
pub fn end_accepting(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::Globally(_) => true,
        Formula::False
        | Formula::Atom(_)
        | Formula::Next(_)
        | Formula::Finally(_)
        | Formula::Until(..) => false,
        Formula::Not(c) => !end_accepting(c),
        Formula::And(l, r) => end_accepting(l) && end_accepting(r),
        Formula::Or(l, r) => end_accepting(l) || end_accepting(r),
        Formula::Implies(l, r) => !end_accepting(l) || end_accepting(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate, parse_infix};

    fn p(s: &str) -> Formula {
        parse_infix(s).unwrap()
    }

    fn label(atoms: &[&str]) -> BTreeSet<String> {
        atoms.iter().map(|s| s.to_string()).collect()
    }

    fn full(universe: &[&str]) -> Alphabet {
        Alphabet::new(universe.iter().copied(), AlphabetMode::Full).unwrap()
    }

    #[test]
    fn progress_examples() {
        assert_eq!(progress(&Formula::True, &label(&["A"])), Formula::True);
        assert_eq!(progress(&p("F B"), &label(&["A"])), p("F B"));
        assert_eq!(
            progress(&p("F(A & F B)"), &label(&["A"])),
            p("F B | F(A & F B)")
        );
        // strong next leaves a liveness obligation behind
        assert_eq!(progress(&p("X B"), &label(&["A"])), p("B & F true"));
    }

    #[test]
    fn end_accepting_examples() {
        assert!(end_accepting(&Formula::True));
        assert!(end_accepting(&p("G(A -> X B)")));
        assert!(!end_accepting(&p("F B")));
        let empty = Trace::new(["A", "B"], vec![]).unwrap();
        for s in ["G(A -> X B)", "F B", "!X A", "A U B", "!G A"] {
            assert_eq!(
                end_accepting(&p(s)),
                evaluate(&p(s), &empty, 0).unwrap(),
                "{s}"
            );
        }
    }

    #[test]
    fn compile_false() {
        let a = compile(&Formula::False, &full(&["A"]), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(a.num_states(), 1);
        assert!(!a.is_accepting(0));
        assert_eq!(a.dead_states(), BTreeSet::from([0]));
    }

    #[test]
    fn compile_eventually_a() {
        let a = compile(&p("F A"), &full(&["A"]), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.residual(0), &p("F A"));
        assert!(!a.is_accepting(0));
        let on_a = a.step(0, 1);
        assert_eq!(a.residual(on_a), &Formula::True);
        assert!(a.is_accepting(on_a));
        assert_eq!(a.step(0, 0), 0);
        assert_eq!(a.step(on_a, 0), on_a);
        assert_eq!(a.step(on_a, 1), on_a);
        assert!(a.dead_states().is_empty());
    }

    #[test]
    fn contradiction_after_one_step_is_dead() {
        let a = compile(&p("X A & X !A"), &full(&["A"]), DEFAULT_STATE_CAP).unwrap();
        // unsatisfiable, so the initial state is already dead
        assert!(a.is_dead(0));
        assert_ne!(a.residual(0), &Formula::False);
        for l in 0..2 {
            let q = a.step(0, l);
            assert!(a.is_dead(q));
            assert_eq!(a.residual(q), &Formula::False);
        }
    }

    #[test]
    fn one_hot_alphabet() {
        let alpha = Alphabet::new(["A", "B", "C"], AlphabetMode::OneHot).unwrap();
        assert_eq!(alpha.len(), 3);
        assert_eq!(alpha.event("B"), Some(1));
        assert!(matches!(
            alpha.letter_of(&label(&["A", "B"])),
            Err(AutomatonError::NotOneHot(_))
        ));
        let a = compile(&p("!B U A"), &alpha, DEFAULT_STATE_CAP).unwrap();
        let q = a.step_event(0, "B").unwrap();
        assert!(a.is_dead(q));
        let q = a.step_event(0, "A").unwrap();
        assert!(a.is_accepting(q));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compile(&p("F Z"), &full(&["A"]), 10),
            Err(AutomatonError::UnknownAtom(_))
        ));
        assert!(matches!(
            compile(&p("F A & F B & F C"), &full(&["A", "B", "C"]), 2),
            Err(AutomatonError::StateCapExceeded { cap: 2, .. })
        ));
        assert!(Alphabet::new(["A", "A"], AlphabetMode::Full).is_err());
        let many: Vec<String> = (0..17).map(|i| format!("p{i}")).collect();
        assert!(matches!(
            Alphabet::new(&many, AlphabetMode::Full),
            Err(AutomatonError::AlphabetTooLarge(17))
        ));
        assert!(Alphabet::new(&many, AlphabetMode::OneHot).is_ok());
    }

    #[test]
    fn deterministic_compilation() {
        let f = p("G(A -> X B) & F C & (!C U A)");
        let alpha = full(&["A", "B", "C"]);
        let a = compile(&f, &alpha, DEFAULT_STATE_CAP).unwrap();
        let b = compile(&f, &alpha, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(a, b);
    }
}
