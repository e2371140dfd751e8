//! Random formulas and traces for testing and benchmarking.

use rand::Rng;

use super::{Formula, LassoTrace, Letter};

/// A random formula over `atoms` with at most `max_nodes` nodes, drawing
/// every operator with equal weight.
pub fn formula<R: Rng + ?Sized>(rng: &mut R, atoms: &[&str], max_nodes: usize) -> Formula {
    assert!(max_nodes >= 1 && !atoms.is_empty());
    let budget = rng.random_range(1..=max_nodes);
    build(rng, atoms, budget)
}

fn build<R: Rng + ?Sized>(rng: &mut R, atoms: &[&str], budget: usize) -> Formula {
    if budget == 1 {
        return match rng.random_range(0..atoms.len() + 2) {
            i if i < atoms.len() => Formula::atom(atoms[i]),
            i if i == atoms.len() => Formula::True,
            _ => Formula::False,
        };
    }
    // Unary operators need at least 2 nodes, binary at least 3.
    let choice = if budget == 2 { rng.random_range(0..4) } else { rng.random_range(0..11) };
    let unary: [fn(Formula) -> Formula; 4] = [Formula::not, Formula::next, Formula::finally, Formula::globally];
    let binary: [fn(Formula, Formula) -> Formula; 7] = [
        Formula::and,
        Formula::or,
        Formula::implies,
        Formula::iff,
        Formula::until,
        Formula::weak_until,
        Formula::release,
    ];
    if choice < 4 {
        unary[choice](build(rng, atoms, budget - 1))
    } else {
        let left = rng.random_range(1..budget - 1);
        let l = build(rng, atoms, left);
        let r = build(rng, atoms, budget - 1 - left);
        binary[choice - 4](l, r)
    }
}

/// A random lasso trace with prefix length in `0..=max_prefix` and loop
/// length in `1..=max_loop`.
pub fn lasso<R: Rng + ?Sized>(rng: &mut R, alphabet: &[&str], max_prefix: usize, max_loop: usize) -> LassoTrace {
    assert!(max_loop >= 1 && alphabet.len() <= 64);
    let span = 1u64.checked_shl(alphabet.len() as u32).unwrap_or(0);
    let p = rng.random_range(0..=max_prefix);
    let q = rng.random_range(1..=max_loop);
    let mut letter = || Letter(if span == 0 { rng.random() } else { rng.random_range(0..span) });
    let prefix: Vec<Letter> = (0..p).map(|_| letter()).collect();
    let cycle: Vec<Letter> = (0..q).map(|_| letter()).collect();
    LassoTrace::from_letters(alphabet.iter().map(|s| s.to_string()).collect(), prefix, cycle)
        .expect("letters drawn from alphabet")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn respects_limits() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let f = formula(&mut rng, &["a", "b", "c"], 8);
            assert!(f.size() <= 8);
            assert!(f.atoms().iter().all(|a| ["a", "b", "c"].contains(&a.as_str())));
            let t = lasso(&mut rng, &["a", "b", "c"], 3, 3);
            assert!(t.prefix().len() <= 3 && (1..=3).contains(&t.cycle().len()));
        }
    }
}
