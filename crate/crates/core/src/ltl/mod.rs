//! Linear temporal logic over finite traces.
//!
//! [`Formula`] is the abstract syntax tree shared by every other module. Two
//! concrete syntaxes are supported: a conventional infix grammar and a
//! whitespace-separated prefix (Polish) notation. [`evaluate`] implements the
//! finite-trace semantics directly and serves as the reference against which
//! the automaton construction is checked.

mod grounding;
mod parse;
mod random;
mod render;
mod semantics;

use std::collections::BTreeSet;
use std::fmt;

pub use grounding::GroundingMap;
pub use parse::{parse_any, parse_infix, parse_prefix};
pub use random::random_formula;
pub use semantics::{evaluate, Trace};

/// Errors raised while reading, checking or rewriting formulas.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("atom `{0}` is not in the declared universe")]
    UnknownAtom(String),
    #[error("invalid atom name `{0}`")]
    InvalidAtomName(String),
    #[error("no grounding entry for `{0}`")]
    MissingMapping(String),
    #[error("grounding map is not injective: `{0}` is the image of several placeholders")]
    NonInjective(String),
    #[error("position {position} is past the end of a trace of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
}

/// A formula of finite-trace LTL.
///
/// The derived ordering compares the operator tag first (in declaration
/// order) and then the children left to right. It is the canonical order used
/// when sorting residual formulas and tie-breaking votes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Globally(Box<Formula>),
    Finally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

/// Returns true when `name` is a legal atom identifier.
///
/// Operator keywords (`X`, `G`, `F`, `U`, `true`, `false`) are reserved.
pub fn is_valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !(first.is_ascii_alphabetic() || first == '_') {
        return false;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return false;
    }
    !matches!(name, "X" | "G" | "F" | "U" | "true" | "false")
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    /// Checked atom constructor.
    pub fn try_atom(name: impl Into<String>) -> Result<Self, LtlError> {
        let name = name.into();
        if is_valid_atom_name(&name) {
            Ok(Formula::Atom(name))
        } else {
            Err(LtlError::InvalidAtomName(name))
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn finally(f: Formula) -> Self {
        Formula::Finally(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Self {
        Formula::Until(Box::new(l), Box::new(r))
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => vec![],
            Formula::Not(c) | Formula::Next(c) | Formula::Globally(c) | Formula::Finally(c) => {
                vec![c]
            }
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Until(l, r) => vec![l, r],
        }
    }

    /// The set of atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Formula::Atom(a) = self {
            out.insert(a.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Number of levels in the syntax tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Largest number of nodes found on any single level of the syntax tree.
    pub fn width(&self) -> usize {
        let mut level: Vec<&Formula> = vec![self];
        let mut widest = 0;
        while !level.is_empty() {
            widest = widest.max(level.len());
            level = level.iter().flat_map(|f| f.children()).collect();
        }
        widest
    }

    /// Applies `rename` to every atom, keeping the tree shape.
    pub fn map_atoms<E>(
        &self,
        rename: &mut impl FnMut(&str) -> Result<String, E>,
    ) -> Result<Formula, E> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(rename(a)?),
            Formula::Not(c) => Formula::not(c.map_atoms(rename)?),
            Formula::Next(c) => Formula::next(c.map_atoms(rename)?),
            Formula::Globally(c) => Formula::globally(c.map_atoms(rename)?),
            Formula::Finally(c) => Formula::finally(c.map_atoms(rename)?),
            Formula::And(l, r) => Formula::and(l.map_atoms(rename)?, r.map_atoms(rename)?),
            Formula::Or(l, r) => Formula::or(l.map_atoms(rename)?, r.map_atoms(rename)?),
            Formula::Implies(l, r) => Formula::implies(l.map_atoms(rename)?, r.map_atoms(rename)?),
            Formula::Until(l, r) => Formula::until(l.map_atoms(rename)?, r.map_atoms(rename)?),
        })
    }

    /// Rendering in the infix grammar, with the minimum parentheses needed
    /// to reparse to the same tree.
    pub fn to_infix(&self) -> String {
        render::infix(self)
    }

    /// Rendering in prefix notation.
    pub fn to_prefix(&self) -> String {
        render::prefix(self)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

/// Serialized as its prefix rendering; either syntax is accepted on input.
impl serde::Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_prefix())
    }
}

impl<'de> serde::Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_any(&text).map_err(serde::de::Error::custom)
    }
}

/// Right-nested conjunction of `fs` in input order. Returns `None` for an
/// empty list.
pub fn conjoin(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    let mut items: Vec<Formula> = fs.into_iter().collect();
    let mut acc = items.pop()?;
    while let Some(f) = items.pop() {
        acc = Formula::and(f, acc);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_names() {
        assert!(is_valid_atom_name("red_room"));
        assert!(is_valid_atom_name("_a1"));
        assert!(!is_valid_atom_name(""));
        assert!(!is_valid_atom_name("1a"));
        assert!(!is_valid_atom_name("X"));
        assert!(!is_valid_atom_name("true"));
        assert!(!is_valid_atom_name("a-b"));
    }

    #[test]
    fn depth_and_width() {
        let a = Formula::atom("A");
        assert_eq!((a.depth(), a.width()), (1, 1));
        let f = parse_infix("F(A & F(B))").unwrap();
        assert_eq!((f.depth(), f.width()), (4, 2));
    }

    #[test]
    fn conjoin_is_right_nested() {
        let fa = Formula::finally(Formula::atom("A"));
        let gnb = Formula::globally(Formula::not(Formula::atom("B")));
        assert_eq!(conjoin(vec![fa.clone()]), Some(fa.clone()));
        assert_eq!(
            conjoin(vec![fa.clone(), gnb.clone()]),
            Some(Formula::and(fa.clone(), gnb.clone()))
        );
        let c = Formula::atom("C");
        assert_eq!(
            conjoin(vec![fa.clone(), gnb.clone(), c.clone()]),
            Some(Formula::and(fa, Formula::and(gnb, c)))
        );
        assert_eq!(conjoin(Vec::new()), None);
    }

    #[test]
    fn serde_uses_prefix() {
        let f = parse_infix("F(A & F B)").unwrap();
        assert_eq!(serde_json::to_string(&f).unwrap(), "\"F & A F B\"");
        let back: Formula = serde_json::from_str("\"F(A & F B)\"").unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn ordering_is_tag_first() {
        let fb = Formula::finally(Formula::atom("B"));
        let fab = parse_infix("F(A & F B)").unwrap();
        assert!(fb < fab);
        assert!(Formula::True < Formula::atom("A"));
    }
}
