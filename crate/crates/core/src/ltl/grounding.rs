use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_valid_atom_name, Formula, LtlError};

/// A bijection from placeholder atoms (`A`, `B`, ...) to concrete entity
/// propositions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<String, String>",
    into = "BTreeMap<String, String>"
)]
pub struct GroundingMap {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
}

impl GroundingMap {
    pub fn new<I, K, V>(pairs: I) -> Result<Self, LtlError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut forward = BTreeMap::new();
        let mut backward = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            for name in [&k, &v] {
                if !is_valid_atom_name(name) {
                    return Err(LtlError::InvalidAtomName(name.clone()));
                }
            }
            if backward.insert(v.clone(), k.clone()).is_some() {
                return Err(LtlError::NonInjective(v));
            }
            if let Some(old) = forward.insert(k, v) {
                // a repeated key with a new value also breaks the bijection
                return Err(LtlError::NonInjective(old));
            }
        }
        Ok(GroundingMap { forward, backward })
    }

    pub fn identity<S: AsRef<str>>(atoms: impl IntoIterator<Item = S>) -> Result<Self, LtlError> {
        GroundingMap::new(
            atoms
                .into_iter()
                .map(|a| (a.as_ref().to_string(), a.as_ref().to_string())),
        )
    }

    pub fn get(&self, placeholder: &str) -> Option<&str> {
        self.forward.get(placeholder).map(String::as_str)
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.forward.keys().map(String::as_str)
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.forward.values().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Replaces every placeholder atom by its image.
    pub fn ground(&self, f: &Formula) -> Result<Formula, LtlError> {
        f.map_atoms(&mut |a| {
            self.forward
                .get(a)
                .cloned()
                .ok_or_else(|| LtlError::MissingMapping(a.to_string()))
        })
    }

    /// Inverse of [`GroundingMap::ground`].
    pub fn lift(&self, f: &Formula) -> Result<Formula, LtlError> {
        f.map_atoms(&mut |a| {
            self.backward
                .get(a)
                .cloned()
                .ok_or_else(|| LtlError::MissingMapping(a.to_string()))
        })
    }

    /// Image of a set of placeholders.
    pub fn ground_atoms(&self, atoms: &BTreeSet<String>) -> Result<BTreeSet<String>, LtlError> {
        atoms
            .iter()
            .map(|a| {
                self.forward
                    .get(a)
                    .cloned()
                    .ok_or_else(|| LtlError::MissingMapping(a.clone()))
            })
            .collect()
    }
}

impl TryFrom<BTreeMap<String, String>> for GroundingMap {
    type Error = LtlError;

    fn try_from(m: BTreeMap<String, String>) -> Result<Self, Self::Error> {
        GroundingMap::new(m)
    }
}

impl From<GroundingMap> for BTreeMap<String, String> {
    fn from(g: GroundingMap) -> Self {
        g.forward
    }
}
