#![allow(dead_code)]

use std::collections::BTreeSet;

use ltlplan::ltl::Trace;

/// Every labeling over `atoms` (all subsets), in bitmask order.
pub fn all_labels(atoms: &[&str]) -> Vec<BTreeSet<String>> {
    (0..1usize << atoms.len())
        .map(|m| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, a)| a.to_string())
                .collect()
        })
        .collect()
}

/// Calls `visit` on every trace of length `0..=max_len` whose letters come
/// from `letters`. Stops early when `visit` returns false.
pub fn for_each_trace(
    atoms: &[&str],
    letters: &[BTreeSet<String>],
    max_len: usize,
    visit: &mut impl FnMut(&Trace) -> bool,
) -> bool {
    fn rec(
        atoms: &[&str],
        letters: &[BTreeSet<String>],
        prefix: &mut Vec<BTreeSet<String>>,
        max_len: usize,
        visit: &mut impl FnMut(&Trace) -> bool,
    ) -> bool {
        let t = Trace::new(atoms.iter().copied(), prefix.clone()).unwrap();
        if !visit(&t) {
            return false;
        }
        if prefix.len() == max_len {
            return true;
        }
        for l in letters {
            prefix.push(l.clone());
            let go_on = rec(atoms, letters, prefix, max_len, visit);
            prefix.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(atoms, letters, &mut Vec::new(), max_len, visit)
}
