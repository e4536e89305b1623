//! Brute-force ground truth and checks of the analytical claims behind the
//! indexes.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Neighbor;
use crate::types::{euclidean_distance, Dataset, Query, RankRange};

/// Exact answer, ascending by `(distance, rank)`.
pub type ExactResult = Vec<Neighbor>;

fn sorted_distances(
    dataset: &Dataset,
    q: &[f32],
    ranks: impl Iterator<Item = u32>,
) -> Result<Vec<Neighbor>> {
    let mut all = Vec::new();
    for rank in ranks {
        all.push(Neighbor {
            rank,
            distance: euclidean_distance(q, dataset.vector(rank))?,
        });
    }
    all.sort_by(Neighbor::cmp_key);
    Ok(all)
}

/// Exact top-`min(k, |range|)` in-range neighbors by linear scan.
pub fn exact_rfknn(dataset: &Dataset, query: &Query) -> Result<ExactResult> {
    query.validate(dataset)?;
    let mut all = sorted_distances(dataset, &query.vector, query.range.ranks())?;
    all.truncate(query.k);
    Ok(all)
}

/// `|returned ∩ exact| / min(k, |exact|)`, counting only the first `k`
/// returned ranks.
pub fn recall(returned: &[u32], exact: &[u32], k: usize) -> f64 {
    let denom = k.min(exact.len());
    if denom == 0 {
        return 1.0;
    }
    let truth = &exact[..denom];
    let hit = returned
        .iter()
        .take(k)
        .filter(|r| truth.contains(r))
        .count();
    hit as f64 / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Containment {
    /// Smallest `h` whose global `h`-NN set holds `k` in-range points.
    pub h: usize,
    /// Whether the exact in-range `k`-NN lie inside that `h`-NN set.
    pub holds: bool,
}

/// Grows the global exact `h`-NN set until it contains `k` in-range points
/// and tests that the exact range-filtered `k`-NN all sit inside it.
pub fn check_containment(
    dataset: &Dataset,
    q: &[f32],
    range: RankRange,
    k: usize,
) -> Result<Containment> {
    dataset.check_range(range)?;
    dataset.check_query_vector(q)?;
    if range.len() < k || k == 0 {
        return Err(Error::TooFewInRange {
            available: range.len(),
            k,
        });
    }
    let global = sorted_distances(dataset, q, dataset.full_range().ranks())?;
    let mut in_range = 0;
    let mut h = 0;
    for nb in &global {
        h += 1;
        if range.contains(nb.rank) {
            in_range += 1;
            if in_range == k {
                break;
            }
        }
    }
    let prefix: Vec<u32> = global[..h].iter().map(|n| n.rank).collect();
    let exact = exact_rfknn(dataset, &Query::new(q.to_vec(), range, k))?;
    let holds = exact.iter().all(|n| prefix.contains(&n.rank));
    Ok(Containment { h, holds })
}

/// `k (N + 1) / (K + 1)`: expected position of the `k`-th marked element
/// in a uniform random order of `N` elements, `K` of them marked.
pub fn expected_draws_closed_form(n: usize, marked: usize, k: usize) -> f64 {
    k as f64 * (n as f64 + 1.0) / (marked as f64 + 1.0)
}

/// Monte-Carlo estimate of the position of the `k`-th in-range element when
/// `marked` of `n` elements are in range and the order is uniformly random.
/// Each trial draws without replacement until the `k`-th success.
pub fn simulate_expected_draws(
    n: usize,
    marked: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(1 <= k && k <= marked && marked <= n) {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 1 <= k <= K <= N, got N={n}, K={marked}, k={k}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total: u64 = 0;
    for _ in 0..trials {
        let mut remaining = n;
        let mut remaining_marked = marked;
        let mut successes = 0;
        let mut draws: u64 = 0;
        while successes < k {
            draws += 1;
            if rng.random_range(0..remaining) < remaining_marked {
                successes += 1;
                remaining_marked -= 1;
            }
            remaining -= 1;
        }
        total += draws;
    }
    Ok(total as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line_dataset(n: usize) -> Dataset {
        // point at rank i sits at x = (i * 37) mod n, so rank and geometry differ
        let rows: Vec<Vec<f32>> = (1..=n).map(|i| vec![((i * 37) % n) as f32, 0.0]).collect();
        Dataset::from_rows(&rows, "line").unwrap()
    }

    #[test]
    fn exact_cases() {
        let ds = line_dataset(50);
        let q = vec![10.2f32, 0.0];
        let full = exact_rfknn(&ds, &Query::new(q.clone(), ds.full_range(), 1)).unwrap();
        let x = |rank: u32| ds.vector(rank)[0];
        assert_eq!(x(full[0].rank), 10.0);
        let single = exact_rfknn(&ds, &Query::new(q.clone(), RankRange::new(7, 7), 5)).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].rank, 7);
    }

    #[test]
    fn recall_cases() {
        let exact: Vec<u32> = (1..=10).collect();
        assert_eq!(recall(&exact, &exact, 10), 1.0);
        assert_eq!(recall(&[20, 21], &exact, 10), 0.0);
        let mut nine: Vec<u32> = (1..=9).collect();
        nine.push(99);
        assert!((recall(&nine, &exact, 10) - 0.9).abs() < 1e-12);
        // fewer in-range points than k
        assert_eq!(recall(&[3], &[3], 10), 1.0);
    }

    #[test]
    fn containment_cases() {
        let ds = line_dataset(40);
        let q = vec![3.3f32, 0.0];
        let c = check_containment(&ds, &q, ds.full_range(), 4).unwrap();
        assert_eq!(c, Containment { h: 4, holds: true });
        let c = check_containment(&ds, &q, RankRange::new(10, 20), 1).unwrap();
        assert!(c.holds);
        assert!(matches!(
            check_containment(&ds, &q, RankRange::new(1, 2), 3),
            Err(Error::TooFewInRange { .. })
        ));
    }

    #[test]
    fn simulation_degenerate_cases() {
        assert_eq!(simulate_expected_draws(20, 20, 7, 1000, 1).unwrap(), 7.0);
        assert!(simulate_expected_draws(5, 6, 1, 10, 1).is_err());
        assert!(simulate_expected_draws(5, 3, 0, 10, 1).is_err());
        let closed = expected_draws_closed_form(10, 5, 5);
        assert!((closed - 5.0 * 11.0 / 6.0).abs() < 1e-12);
        let sim = simulate_expected_draws(10, 5, 5, 100_000, 3).unwrap();
        assert!((sim - closed).abs() / closed < 0.03);
    }

    #[test]
    fn simulation_matches_formula_small() {
        let closed = expected_draws_closed_form(10, 5, 2);
        assert!((closed - 3.6667).abs() < 1e-4);
        let sim = simulate_expected_draws(10, 5, 2, 100_000, 42).unwrap();
        assert!(
            (sim - closed).abs() / closed < 0.03,
            "sim {sim} vs {closed}"
        );
    }
}
