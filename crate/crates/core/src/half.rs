//! Half-bounded elastic index: graph snapshots over a geometric ladder of
//! prefixes (or suffixes) of the rank order.
//!
//! With base `B` the stored ranges have lengths `ceil(N / B^i)` for
//! `i = 0..=floor(log_B N)`. All of them fall out of a single incremental
//! build: points are inserted in rank order and the live graph is cloned
//! whenever the prefix length hits a ladder length.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{GraphIndex, GraphParams, Neighbor, SearchStats};
use crate::index::{RangeFilteredIndex, RangedIndex};
use crate::types::{Dataset, Query, RankRange, SearchParams};

/// Which end of the rank order the ladder is pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Ranges `[1, r]`.
    Left,
    /// Ranges `[l, N]`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfIndexParams {
    pub base: usize,
    pub anchor: Anchor,
}

impl Default for HalfIndexParams {
    fn default() -> Self {
        Self {
            base: 2,
            anchor: Anchor::Left,
        }
    }
}

impl HalfIndexParams {
    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(Error::InvalidParameter(
                "ladder base must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Ladder lengths `ceil(n / base^i)`, longest first.
pub fn ladder_lengths(n: usize, base: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut power: usize = 1;
    while power <= n {
        let len = n.div_ceil(power);
        if out.last() != Some(&len) {
            out.push(len);
        }
        match power.checked_mul(base) {
            Some(p) => power = p,
            None => break,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfIndex {
    params: HalfIndexParams,
    graph_params: GraphParams,
    n: usize,
    /// Longest range first.
    snapshots: Vec<RangedIndex>,
}

impl HalfIndex {
    pub fn build(
        dataset: &Dataset,
        params: HalfIndexParams,
        graph_params: GraphParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = dataset.len();
        let mut wanted = ladder_lengths(n, params.base);
        wanted.reverse();
        let mut snapshots = Vec::with_capacity(wanted.len());
        let mut live = GraphIndex::new(graph_params)?;
        let mut next = wanted.iter().copied().peekable();
        for inserted in 1..=n {
            let rank = match params.anchor {
                Anchor::Left => inserted as u32,
                Anchor::Right => (n + 1 - inserted) as u32,
            };
            live.insert(dataset, rank)?;
            if next.peek() == Some(&inserted) {
                next.next();
                let range = anchored_range(params.anchor, n, inserted);
                let graph = if inserted == n {
                    core::mem::replace(&mut live, GraphIndex::new(graph_params)?)
                } else {
                    live.clone()
                };
                snapshots.push(RangedIndex { range, graph });
            }
        }
        snapshots.reverse();
        Ok(Self {
            params,
            graph_params,
            n,
            snapshots,
        })
    }

    /// Reassembles a stored index; every snapshot must match the ladder and
    /// hold exactly the ranks of its range.
    pub fn from_parts(
        params: HalfIndexParams,
        graph_params: GraphParams,
        n: usize,
        snapshots: Vec<RangedIndex>,
    ) -> Result<Self> {
        params.validate()?;
        let expected: Vec<RankRange> = ladder_lengths(n, params.base)
            .into_iter()
            .map(|len| anchored_range(params.anchor, n, len))
            .collect();
        let got: Vec<RankRange> = snapshots.iter().map(|s| s.range).collect();
        if expected != got {
            return Err(Error::InvalidGraph(
                "snapshot ranges do not match the ladder".into(),
            ));
        }
        for s in &snapshots {
            s.check_members()?;
        }
        Ok(Self {
            params,
            graph_params,
            n,
            snapshots,
        })
    }

    pub fn params(&self) -> &HalfIndexParams {
        &self.params
    }

    pub fn graph_params(&self) -> &GraphParams {
        &self.graph_params
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn snapshots(&self) -> &[RangedIndex] {
        &self.snapshots
    }

    pub fn ranges(&self) -> Vec<RankRange> {
        self.snapshots.iter().map(|s| s.range).collect()
    }

    pub fn total_stored_nodes(&self) -> usize {
        self.snapshots.iter().map(|s| s.graph.len()).sum()
    }

    /// Points inserted during build; one per dataset point.
    pub fn build_insert_count(&self) -> usize {
        self.n
    }

    /// The full-range graph.
    pub fn root(&self) -> Option<&GraphIndex> {
        self.snapshots.first().map(|s| &s.graph)
    }

    fn check_anchored(&self, range: RankRange) -> Result<usize> {
        match self.params.anchor {
            Anchor::Left if range.l == 1 => Ok(range.len()),
            Anchor::Right if range.r as usize == self.n => Ok(range.len()),
            _ => Err(Error::NotAnchored {
                l: range.l,
                r: range.r,
            }),
        }
    }

    /// Snapshot with the shortest stored range covering `range`.
    pub fn select(&self, range: RankRange) -> Result<&RangedIndex> {
        if range.r as usize > self.n || range.l == 0 {
            return Err(Error::InvalidRange {
                l: range.l,
                r: range.r,
                n: self.n,
            });
        }
        let len = self.check_anchored(range)?;
        self.snapshots
            .iter()
            .rev()
            .find(|s| s.range.len() >= len)
            .ok_or(Error::InvalidRange {
                l: range.l,
                r: range.r,
                n: self.n,
            })
    }

    /// Post-filtered search on the selected snapshot. Exactly one graph is
    /// consulted.
    pub fn query(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        let chosen = self.select(query.range)?;
        chosen.graph.search_rf_post(dataset, query, params)
    }
}

fn anchored_range(anchor: Anchor, n: usize, len: usize) -> RankRange {
    match anchor {
        Anchor::Left => RankRange::new(1, len as u32),
        Anchor::Right => RankRange::new((n + 1 - len) as u32, n as u32),
    }
}

impl RangeFilteredIndex for HalfIndex {
    fn label(&self) -> &str {
        "hbi-half"
    }

    fn search(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        self.query(dataset, query, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * dim)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        Dataset::from_flat(data, dim, "t").unwrap()
    }

    fn small_graph() -> GraphParams {
        GraphParams::new(8, 32, 3)
    }

    #[test]
    fn ladder_examples() {
        assert_eq!(ladder_lengths(8, 2), vec![8, 4, 2, 1]);
        assert_eq!(ladder_lengths(16, 4), vec![16, 4, 1]);
        assert_eq!(ladder_lengths(1, 3), vec![1]);
        assert_eq!(
            ladder_lengths(1000, 2),
            vec![1000, 500, 250, 125, 63, 32, 16, 8, 4, 2]
        );
    }

    #[test]
    fn build_examples() {
        let ds = dataset(8, 3, 1);
        let idx = HalfIndex::build(&ds, HalfIndexParams::default(), small_graph()).unwrap();
        assert_eq!(
            idx.ranges(),
            vec![
                RankRange::new(1, 8),
                RankRange::new(1, 4),
                RankRange::new(1, 2),
                RankRange::new(1, 1)
            ]
        );
        assert_eq!(idx.total_stored_nodes(), 15);
        for s in idx.snapshots() {
            s.check_members().unwrap();
            s.graph.check_invariants().unwrap();
        }

        let ds = dataset(16, 3, 2);
        let p = HalfIndexParams {
            base: 4,
            anchor: Anchor::Left,
        };
        let idx = HalfIndex::build(&ds, p, small_graph()).unwrap();
        assert_eq!(
            idx.ranges(),
            vec![
                RankRange::new(1, 16),
                RankRange::new(1, 4),
                RankRange::new(1, 1)
            ]
        );

        let ds = dataset(1, 3, 2);
        let idx = HalfIndex::build(&ds, p, small_graph()).unwrap();
        assert_eq!(idx.ranges(), vec![RankRange::new(1, 1)]);
    }

    #[test]
    fn selection_on_power_of_two() {
        let ds = dataset(1024, 2, 5);
        let idx =
            HalfIndex::build(&ds, HalfIndexParams::default(), GraphParams::new(4, 8, 1)).unwrap();
        let pick = |r| idx.select(RankRange::new(1, r)).unwrap().range;
        assert_eq!(pick(300), RankRange::new(1, 512));
        assert_eq!(pick(512), RankRange::new(1, 512));
        assert_eq!(pick(1), RankRange::new(1, 1));
        assert_eq!(pick(1024), RankRange::new(1, 1024));
        assert!(matches!(
            idx.select(RankRange::new(2, 5)),
            Err(Error::NotAnchored { .. })
        ));
    }

    #[test]
    fn right_anchor_serves_suffixes() {
        let ds = dataset(100, 4, 9);
        let p = HalfIndexParams {
            base: 2,
            anchor: Anchor::Right,
        };
        let idx = HalfIndex::build(&ds, p, small_graph()).unwrap();
        assert_eq!(idx.ranges()[0], RankRange::new(1, 100));
        assert_eq!(idx.ranges()[1], RankRange::new(51, 100));
        for s in idx.snapshots() {
            s.check_members().unwrap();
        }
        let q = Query::new(vec![0.0; 4], RankRange::new(70, 100), 5);
        let (res, stats) = idx.query(&ds, &q, &SearchParams::exhaustive()).unwrap();
        assert_eq!(stats.graphs_consulted, 1);
        assert!(res.iter().all(|n| n.rank >= 70));
        assert_eq!(idx.select(q.range).unwrap().range, RankRange::new(51, 100));
        let left = Query::new(vec![0.0; 4], RankRange::new(1, 50), 5);
        assert!(idx.query(&ds, &left, &SearchParams::exhaustive()).is_err());
    }

    #[test]
    fn exact_half_range_sees_no_out_of_range_points() {
        let ds = dataset(256, 4, 12);
        let idx = HalfIndex::build(&ds, HalfIndexParams::default(), small_graph()).unwrap();
        let q = Query::new(vec![0.2; 4], RankRange::new(1, 128), 10);
        let chosen = idx.select(q.range).unwrap();
        assert_eq!(chosen.range, q.range);
        let (res, stats) = idx.query(&ds, &q, &SearchParams::with_beam(32)).unwrap();
        let (plain, _) = chosen
            .graph
            .search(&ds, &q.vector, 32, crate::FilterMode::None)
            .unwrap();
        assert_eq!(res, plain[..10].to_vec());
        assert_eq!(stats.graphs_consulted, 1);
    }

    proptest! {
        #[test]
        fn elastic_floor_and_storage(n in 1usize..5000, base in 2usize..9, r_frac in 0.0f64..1.0) {
            let lengths = ladder_lengths(n, base);
            prop_assert_eq!(lengths[0], n);
            prop_assert!(lengths.windows(2).all(|w| w[0] > w[1]));
            let total: usize = lengths.iter().sum();
            let steps = lengths.len() - 1;
            prop_assert!(total as f64 <= (n * base) as f64 / (base - 1) as f64 + steps as f64);
            let r = 1 + ((n - 1) as f64 * r_frac) as usize;
            let stored = *lengths.iter().rev().find(|&&l| l >= r).unwrap();
            let factor = r as f64 / stored as f64;
            prop_assert!(factor >= 1.0 / base as f64 - 1.0 / stored as f64);
        }
    }
}
