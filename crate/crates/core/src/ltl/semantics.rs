use std::collections::BTreeSet;

use super::{Formula, LtlError};

/// A finite sequence of labelings over a declared atom universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    universe: BTreeSet<String>,
    labels: Vec<BTreeSet<String>>,
}

impl Trace {
    /// Builds a trace, rejecting labels that mention atoms outside `universe`.
    pub fn new<U, S>(universe: U, labels: Vec<BTreeSet<String>>) -> Result<Self, LtlError>
    where
        U: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let universe: BTreeSet<String> = universe.into_iter().map(Into::into).collect();
        for label in &labels {
            if let Some(bad) = label.iter().find(|a| !universe.contains(*a)) {
                return Err(LtlError::UnknownAtom(bad.clone()));
            }
        }
        Ok(Trace { universe, labels })
    }

    /// Convenience constructor from string slices.
    pub fn from_slices(universe: &[&str], labels: &[&[&str]]) -> Result<Self, LtlError> {
        let labels = labels
            .iter()
            .map(|l| l.iter().map(|a| a.to_string()).collect())
            .collect();
        Trace::new(universe.iter().copied(), labels)
    }

    pub fn universe(&self) -> &BTreeSet<String> {
        &self.universe
    }

    pub fn labels(&self) -> &[BTreeSet<String>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The suffix starting at `from`.
    pub fn suffix(&self, from: usize) -> Trace {
        Trace {
            universe: self.universe.clone(),
            labels: self.labels[from.min(self.labels.len())..].to_vec(),
        }
    }
}

/// Finite-trace satisfaction of `f` by `trace` at `position`.
///
/// Next is strong: `X φ` requires a following position. An exhausted suffix
/// satisfies `G φ` and `true`, and falsifies atoms, `X`, `F` and `U`.
pub fn evaluate(f: &Formula, trace: &Trace, position: usize) -> Result<bool, LtlError> {
    if position > trace.len() {
        return Err(LtlError::PositionOutOfRange {
            position,
            len: trace.len(),
        });
    }
    if let Some(bad) = f.atoms().into_iter().find(|a| !trace.universe.contains(a)) {
        return Err(LtlError::UnknownAtom(bad));
    }
    Ok(holds(f, &trace.labels, position))
}

fn holds(f: &Formula, labels: &[BTreeSet<String>], i: usize) -> bool {
    let n = labels.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => i < n && labels[i].contains(a),
        Formula::Not(c) => !holds(c, labels, i),
        Formula::And(l, r) => holds(l, labels, i) && holds(r, labels, i),
        Formula::Or(l, r) => holds(l, labels, i) || holds(r, labels, i),
        Formula::Implies(l, r) => !holds(l, labels, i) || holds(r, labels, i),
        Formula::Next(c) => i + 1 < n && holds(c, labels, i + 1),
        Formula::Globally(c) => (i..n).all(|j| holds(c, labels, j)),
        Formula::Finally(c) => (i..n).any(|j| holds(c, labels, j)),
        Formula::Until(l, r) => {
            for j in i..n {
                if holds(r, labels, j) {
                    return true;
                }
                if !holds(l, labels, j) {
                    return false;
                }
            }
            false
        }
    }
}
