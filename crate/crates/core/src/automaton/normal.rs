//! Residual formulas in disjunctive normal form over temporal leaves.
//!
//! A residual is a Boolean combination of *leaves*: temporal subformulas
//! (`X`, `G`, `F`, `U` nodes) of the compiled formula, atoms that surfaced
//! from under a `X`, and the liveness obligation `F true`. Residuals are kept
//! as sets of cubes (conjunctions of signed leaves) with complementary cubes
//! dropped and subsumed cubes removed. The set of such normal forms over a
//! finite leaf set is finite, which bounds the number of automaton states.

use std::collections::HashMap;

use crate::ltl::Formula;

/// Signed leaf: `leaf << 1 | negated`.
pub(crate) type Lit = u32;
/// Sorted, duplicate-free conjunction of literals. Empty means `true`.
pub(crate) type Cube = Vec<Lit>;
/// Sorted, subsumption-free disjunction of cubes. Empty means `false`.
pub(crate) type Dnf = Vec<Cube>;

pub(crate) fn dnf_true() -> Dnf {
    vec![Vec::new()]
}

pub(crate) fn dnf_false() -> Dnf {
    Vec::new()
}

fn lit(leaf: u32, negated: bool) -> Lit {
    (leaf << 1) | negated as u32
}

fn leaf_of(l: Lit) -> u32 {
    l >> 1
}

fn is_negated(l: Lit) -> bool {
    l & 1 == 1
}

fn has_complement(cube: &[Lit]) -> bool {
    cube.windows(2).any(|w| w[0] >> 1 == w[1] >> 1)
}

fn is_subset(small: &[Lit], big: &[Lit]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

fn normalize(mut cubes: Vec<Cube>) -> Dnf {
    for c in &mut cubes {
        c.sort_unstable();
        c.dedup();
    }
    cubes.retain(|c| !has_complement(c));
    cubes.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cubes.dedup();
    let mut kept: Vec<Cube> = Vec::with_capacity(cubes.len());
    for c in cubes {
        if !kept.iter().any(|k| is_subset(k, &c)) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

pub(crate) fn or(a: &Dnf, b: &Dnf) -> Dnf {
    if a.iter().any(|c| c.is_empty()) || b.is_empty() {
        return a.clone();
    }
    if b.iter().any(|c| c.is_empty()) || a.is_empty() {
        return b.clone();
    }
    normalize(a.iter().chain(b.iter()).cloned().collect())
}

pub(crate) fn and(a: &Dnf, b: &Dnf) -> Dnf {
    if a.is_empty() || b.is_empty() {
        return dnf_false();
    }
    if a.len() == 1 && a[0].is_empty() {
        return b.clone();
    }
    if b.len() == 1 && b[0].is_empty() {
        return a.clone();
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut c = Vec::with_capacity(x.len() + y.len());
            c.extend_from_slice(x);
            c.extend_from_slice(y);
            out.push(c);
        }
    }
    normalize(out)
}

pub(crate) fn negate(d: &Dnf) -> Dnf {
    let mut acc = dnf_true();
    for cube in d {
        let clause: Dnf = normalize(cube.iter().map(|&l| vec![l ^ 1]).collect());
        acc = and(&acc, &clause);
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// Interns leaves and memoizes their progression.
pub(crate) struct Normalizer {
    atom_index: HashMap<String, usize>,
    leaves: Vec<Formula>,
    leaf_ids: HashMap<Formula, u32>,
    leaf_masks: Vec<u64>,
    progress_memo: HashMap<(u32, u64), Dnf>,
    live_leaf: u32,
}

impl Normalizer {
    /// `universe` must contain every atom the normalizer will see; the
    /// caller validates this.
    pub(crate) fn new(universe: &[String]) -> Self {
        let atom_index = universe
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut n = Normalizer {
            atom_index,
            leaves: Vec::new(),
            leaf_ids: HashMap::new(),
            leaf_masks: Vec::new(),
            progress_memo: HashMap::new(),
            live_leaf: 0,
        };
        n.live_leaf = n.intern(&Formula::finally(Formula::True));
        n
    }

    fn mask_of(&self, f: &Formula) -> u64 {
        match f {
            Formula::Atom(a) => self.atom_index.get(a).map_or(0, |&i| 1u64 << i),
            _ => f.children().iter().fold(0, |m, c| m | self.mask_of(c)),
        }
    }

    fn intern(&mut self, f: &Formula) -> u32 {
        if let Some(&id) = self.leaf_ids.get(f) {
            return id;
        }
        let id = self.leaves.len() as u32;
        self.leaf_masks.push(self.mask_of(f));
        self.leaves.push(f.clone());
        self.leaf_ids.insert(f.clone(), id);
        id
    }

    fn leaf_lit(&mut self, f: &Formula) -> Dnf {
        vec![vec![lit(self.intern(f), false)]]
    }

    /// Atom mask a residual depends on.
    pub(crate) fn dnf_mask(&self, d: &Dnf) -> u64 {
        d.iter()
            .flatten()
            .fold(0, |m, &l| m | self.leaf_masks[leaf_of(l) as usize])
    }

    /// Normal form of `f` without consuming any label.
    pub(crate) fn normal_form(&mut self, f: &Formula) -> Dnf {
        match f {
            Formula::True => dnf_true(),
            Formula::False => dnf_false(),
            Formula::Atom(_)
            | Formula::Next(_)
            | Formula::Globally(_)
            | Formula::Finally(_)
            | Formula::Until(..) => self.leaf_lit(f),
            Formula::Not(c) => negate(&self.normal_form(c)),
            Formula::And(l, r) => {
                let (l, r) = (self.normal_form(l), self.normal_form(r));
                and(&l, &r)
            }
            Formula::Or(l, r) => {
                let (l, r) = (self.normal_form(l), self.normal_form(r));
                or(&l, &r)
            }
            Formula::Implies(l, r) => {
                let (l, r) = (self.normal_form(l), self.normal_form(r));
                or(&negate(&l), &r)
            }
        }
    }

    fn progress_formula(&mut self, f: &Formula, label: u64) -> Dnf {
        match f {
            Formula::True => dnf_true(),
            Formula::False => dnf_false(),
            Formula::Not(c) => negate(&self.progress_formula(c, label)),
            Formula::And(l, r) => {
                let l = self.progress_formula(l, label);
                if l.is_empty() {
                    return l;
                }
                let r = self.progress_formula(r, label);
                and(&l, &r)
            }
            Formula::Or(l, r) => {
                let l = self.progress_formula(l, label);
                let r = self.progress_formula(r, label);
                or(&l, &r)
            }
            Formula::Implies(l, r) => {
                let l = negate(&self.progress_formula(l, label));
                let r = self.progress_formula(r, label);
                or(&l, &r)
            }
            _ => {
                let id = self.intern(f);
                self.progress_leaf(id, label)
            }
        }
    }

    fn progress_leaf(&mut self, id: u32, label: u64) -> Dnf {
        let key = (id, label & self.leaf_masks[id as usize]);
        if let Some(d) = self.progress_memo.get(&key) {
            return d.clone();
        }
        let leaf = self.leaves[id as usize].clone();
        let own = vec![vec![lit(id, false)]];
        let out = match &leaf {
            Formula::Atom(a) => {
                let bit = self.atom_index.get(a).map_or(0, |&i| 1u64 << i);
                if label & bit != 0 {
                    dnf_true()
                } else {
                    dnf_false()
                }
            }
            // strong next: the argument must hold at a position that exists
            Formula::Next(c) => {
                let body = self.normal_form(c);
                let live = vec![vec![lit(self.live_leaf, false)]];
                and(&body, &live)
            }
            Formula::Finally(c) => or(&self.progress_formula(c, label), &own),
            Formula::Globally(c) => and(&self.progress_formula(c, label), &own),
            Formula::Until(l, r) => {
                let now = self.progress_formula(r, label);
                let hold = self.progress_formula(l, label);
                or(&now, &and(&hold, &own))
            }
            _ => unreachable!("non-temporal leaf {leaf:?}"),
        };
        self.progress_memo.insert(key, out.clone());
        out
    }

    /// Residual after reading one labeling.
    pub(crate) fn progress(&mut self, d: &Dnf, label: u64) -> Dnf {
        let mut out = dnf_false();
        for cube in d {
            let mut acc = dnf_true();
            for &l in cube {
                let p = self.progress_leaf(leaf_of(l), label);
                let p = if is_negated(l) { negate(&p) } else { p };
                acc = and(&acc, &p);
                if acc.is_empty() {
                    break;
                }
            }
            out = or(&out, &acc);
            if out.len() == 1 && out[0].is_empty() {
                break;
            }
        }
        out
    }

    /// Whether the residual is satisfied by the empty trace.
    pub(crate) fn accepts_empty(&self, d: &Dnf) -> bool {
        d.iter().any(|cube| {
            cube.iter().all(|&l| {
                let holds = matches!(self.leaves[leaf_of(l) as usize], Formula::Globally(_));
                holds != is_negated(l)
            })
        })
    }

    /// Canonical formula for a residual: cubes and literals sorted by the
    /// formula ordering and folded into right-nested binary nodes.
    pub(crate) fn to_formula(&self, d: &Dnf) -> Formula {
        let mut cubes: Vec<Formula> = d
            .iter()
            .map(|cube| {
                let mut lits: Vec<Formula> = cube
                    .iter()
                    .map(|&l| {
                        let leaf = self.leaves[leaf_of(l) as usize].clone();
                        if is_negated(l) {
                            Formula::not(leaf)
                        } else {
                            leaf
                        }
                    })
                    .collect();
                lits.sort();
                fold_right(lits, Formula::and).unwrap_or(Formula::True)
            })
            .collect();
        cubes.sort();
        fold_right(cubes, Formula::or).unwrap_or(Formula::False)
    }
}

fn fold_right(mut items: Vec<Formula>, join: fn(Formula, Formula) -> Formula) -> Option<Formula> {
    let mut acc = items.pop()?;
    while let Some(f) = items.pop() {
        acc = join(f, acc);
    }
    Some(acc)
}
