use rand::Rng;

use super::Formula;

/// Samples a formula of depth at most `max_depth` over `atoms`.
///
/// Operators are drawn uniformly; leaves are atoms (with an occasional
/// constant). Used by benchmarks, mutation tests and property suites.
pub fn random_formula<R: Rng + ?Sized, S: AsRef<str>>(
    rng: &mut R,
    atoms: &[S],
    max_depth: usize,
) -> Formula {
    assert!(!atoms.is_empty(), "random_formula needs at least one atom");
    if max_depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.gen_range(0..atoms.len())].as_ref()),
        };
    }
    let d = max_depth - 1;
    match rng.gen_range(0..8) {
        0 => Formula::not(random_formula(rng, atoms, d)),
        1 => Formula::and(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        2 => Formula::or(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        3 => Formula::implies(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        4 => Formula::next(random_formula(rng, atoms, d)),
        5 => Formula::globally(random_formula(rng, atoms, d)),
        6 => Formula::finally(random_formula(rng, atoms, d)),
        _ => Formula::until(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
    }
}
