use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;

use super::{BitSet, Chromosome};
use crate::error::{Error, Result};

/// Orders evaluated individuals: higher fitness wins, then fewer features.
/// Unevaluated individuals compare as worst.
pub fn compare_fitness(a: &Chromosome, b: &Chromosome) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    fa.total_cmp(&fb).then_with(|| b.size().cmp(&a.size()))
}

/// Draws `tour_size` entrants uniformly with replacement and returns the
/// population index of the winner. Entrants tied on fitness and size are
/// resolved uniformly at random.
pub fn tournament_select<R: Rng>(
    population: &[Chromosome],
    tour_size: usize,
    rng: &mut R,
) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::Precondition("tournament on an empty population".into()));
    }
    if tour_size == 0 {
        return Err(Error::param("tour_size", "must be at least 1"));
    }
    if population.iter().any(|c| c.fitness.is_none()) {
        return Err(Error::Precondition(
            "tournament over an unevaluated individual".into(),
        ));
    }
    let entrants: Vec<usize> = (0..tour_size)
        .map(|_| rng.gen_range(0..population.len()))
        .collect();
    let mut winners = vec![entrants[0]];
    for &e in &entrants[1..] {
        match compare_fitness(&population[e], &population[winners[0]]) {
            Ordering::Greater => winners = vec![e],
            Ordering::Equal => winners.push(e),
            Ordering::Less => {}
        }
    }
    Ok(if winners.len() == 1 {
        winners[0]
    } else {
        winners[rng.gen_range(0..winners.len())]
    })
}

/// Deselects random features above `size_limit`; activates one random
/// feature if the set is empty.
pub fn repair_size_limit<R: Rng>(bits: &mut BitSet, size_limit: usize, rng: &mut R) {
    repair_within(bits, size_limit, None, rng);
}

/// Like [`repair_size_limit`], but an empty set is refilled from `pool` when
/// the pool is non-empty.
pub fn repair_within<R: Rng>(
    bits: &mut BitSet,
    size_limit: usize,
    pool: Option<&BitSet>,
    rng: &mut R,
) {
    let count = bits.count_ones();
    if count > size_limit {
        let ones = bits.to_indices();
        for k in sample(rng, ones.len(), count - size_limit) {
            bits.set(ones[k], false);
        }
    } else if count == 0 && !bits.is_empty() {
        let candidates: Vec<usize> = pool.map(BitSet::to_indices).unwrap_or_default();
        let pick = if candidates.is_empty() {
            rng.gen_range(0..bits.len())
        } else {
            candidates[rng.gen_range(0..candidates.len())]
        };
        bits.set(pick, true);
    }
}

fn swap_uniform<R: Rng>(a: &BitSet, b: &BitSet, rng: &mut R) -> (BitSet, BitSet) {
    assert_eq!(a.len(), b.len(), "crossover parents differ in length");
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    // Each bit position swaps independently with probability 1/2.
    for chunk in 0..a.len().div_ceil(64) {
        let mask: u64 = rng.gen();
        let start = chunk * 64;
        for off in 0..64.min(a.len() - start) {
            if mask >> off & 1 == 1 {
                let i = start + off;
                let (x, y) = (a.get(i), b.get(i));
                if x != y {
                    c1.set(i, y);
                    c2.set(i, x);
                }
            }
        }
    }
    (c1, c2)
}

pub fn uniform_crossover<R: Rng>(
    a: &Chromosome,
    b: &Chromosome,
    size_limit: usize,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    let (mut c1, mut c2) = swap_uniform(&a.selected, &b.selected, rng);
    repair_size_limit(&mut c1, size_limit, rng);
    repair_size_limit(&mut c2, size_limit, rng);
    (Chromosome::new(c1), Chromosome::new(c2))
}

/// Crossover restricted to tree-used features.
///
/// Each parent is reduced to its `used` set, the reduced parents are
/// crossed uniformly, and children are repaired inside the union of the
/// parental used sets.
pub fn tree_aware_crossover<R: Rng>(
    a: &Chromosome,
    b: &Chromosome,
    size_limit: usize,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let (Some(ua), Some(ub)) = (&a.used, &b.used) else {
        return Err(Error::Precondition(
            "tree-aware crossover needs evaluated parents with used-feature sets".into(),
        ));
    };
    let ra = a.selected.intersection(ua);
    let rb = b.selected.intersection(ub);
    let pool = ra.union(&rb);
    let (mut c1, mut c2) = swap_uniform(&ra, &rb, rng);
    repair_within(&mut c1, size_limit, Some(&pool), rng);
    repair_within(&mut c2, size_limit, Some(&pool), rng);
    Ok((Chromosome::new(c1), Chromosome::new(c2)))
}

/// Flips each bit independently with probability `per_bit_rate`, then
/// repairs. Small rates skip ahead geometrically between flips.
pub fn bitflip_mutation<R: Rng>(
    c: &Chromosome,
    per_bit_rate: f64,
    size_limit: usize,
    rng: &mut R,
) -> Chromosome {
    let mut bits = c.selected.clone();
    let n = bits.len();
    if per_bit_rate >= 1.0 {
        (0..n).for_each(|i| bits.flip(i));
    } else if per_bit_rate >= 0.25 {
        for i in 0..n {
            if rng.gen::<f64>() < per_bit_rate {
                bits.flip(i);
            }
        }
    } else if per_bit_rate > 0.0 {
        let log_keep = (1.0 - per_bit_rate).ln();
        let mut i = 0usize;
        loop {
            let u: f64 = rng.gen();
            let skip = ((1.0 - u).ln() / log_keep).floor();
            if !skip.is_finite() || skip >= (n - i) as f64 {
                break;
            }
            i += skip as usize;
            bits.flip(i);
            i += 1;
        }
    }
    if per_bit_rate > 0.0 {
        repair_size_limit(&mut bits, size_limit, rng);
        Chromosome::new(bits)
    } else {
        c.clone()
    }
}
