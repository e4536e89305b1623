//! General elastic index: a fanout-`f` segment tree of graph snapshots.
//!
//! Each indexed node's graph is produced by cloning the graph of its
//! leftmost child and inserting the remaining ranks of the node; only the
//! leftmost leaf-level graphs are built from scratch. Ranges with
//! `r - l < leaf_threshold` store no graph and are answered by linear scan.
//!
//! A query descends from the root. A node whose range covers the query
//! fragment with elastic factor at least `c` answers it with one
//! post-filtered search; otherwise the fragment is split at child
//! boundaries. With `c = 1/f` at most two graphs are ever searched.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{GraphIndex, GraphParams, Neighbor, SearchStats};
use crate::index::{check_members, RangeFilteredIndex};
use crate::types::{Dataset, ElasticPolicy, Query, RankRange, SearchParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub fanout: usize,
    /// Ranges with `r - l < leaf_threshold` are not indexed.
    pub leaf_threshold: usize,
    pub elastic: ElasticPolicy,
}

impl TreeParams {
    /// Fanout `f`, leaf threshold `leaf` and the default threshold `c = 1/f`.
    pub fn new(fanout: usize, leaf_threshold: usize) -> Self {
        Self {
            fanout,
            leaf_threshold,
            elastic: ElasticPolicy::for_fanout(fanout.max(1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanout < 2 {
            return Err(Error::InvalidParameter("fanout must be at least 2".into()));
        }
        if self.leaf_threshold < 1 {
            return Err(Error::InvalidParameter(
                "leaf threshold must be at least 1".into(),
            ));
        }
        let c = self.elastic.c;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter(
                "elastic threshold must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn is_indexed(&self, range: &RankRange) -> bool {
        (range.r - range.l) as usize >= self.leaf_threshold
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::new(2, 256)
    }
}

/// Splits `range` into `min(fanout, |range|)` contiguous parts whose sizes
/// differ by at most one, larger parts first.
pub fn split_range(range: RankRange, fanout: usize) -> Vec<RankRange> {
    let len = range.len();
    let parts = fanout.min(len);
    let small = len / parts;
    let extra = len % parts;
    let mut out = Vec::with_capacity(parts);
    let mut l = range.l;
    for i in 0..parts {
        let size = small + usize::from(i < extra);
        let r = l + size as u32 - 1;
        out.push(RankRange { l, r });
        l = r + 1;
    }
    out
}

/// One unit of work in a query plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStep {
    /// Post-filtered search of `fragment` on the graph stored for `node`.
    Graph {
        node: RankRange,
        fragment: RankRange,
    },
    /// Exact scan of `fragment` inside the unindexed `node`.
    Scan {
        node: RankRange,
        fragment: RankRange,
    },
}

impl PlanStep {
    pub fn fragment(&self) -> RankRange {
        match *self {
            PlanStep::Graph { fragment, .. } | PlanStep::Scan { fragment, .. } => fragment,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeIndex {
    params: TreeParams,
    graph_params: GraphParams,
    n: usize,
    nodes: BTreeMap<RankRange, GraphIndex>,
    build_insert_count: u64,
}

impl TreeIndex {
    pub fn build(dataset: &Dataset, params: TreeParams, graph_params: GraphParams) -> Result<Self> {
        params.validate()?;
        graph_params.validate()?;
        let mut index = Self {
            params,
            graph_params,
            n: dataset.len(),
            nodes: BTreeMap::new(),
            build_insert_count: 0,
        };
        index.build_node(dataset, dataset.full_range())?;
        Ok(index)
    }

    fn build_node(&mut self, dataset: &Dataset, range: RankRange) -> Result<bool> {
        if !self.params.is_indexed(&range) {
            return Ok(false);
        }
        let children = split_range(range, self.params.fanout);
        let mut first_stored = false;
        for (i, child) in children.iter().enumerate() {
            let stored = self.build_node(dataset, *child)?;
            if i == 0 {
                first_stored = stored;
            }
        }
        let first = children[0];
        let mut graph = if first_stored {
            self.nodes[&first].clone()
        } else {
            let mut fresh = GraphIndex::new(self.graph_params)?;
            for rank in first.ranks() {
                fresh.insert(dataset, rank)?;
            }
            self.build_insert_count += first.len() as u64;
            fresh
        };
        for rank in first.r + 1..=range.r {
            graph.insert(dataset, rank)?;
        }
        self.build_insert_count += u64::from(range.r - first.r);
        self.nodes.insert(range, graph);
        Ok(true)
    }

    /// Reassembles a stored index, checking that the stored ranges are
    /// exactly the indexed tree nodes and that each graph matches its range.
    pub fn from_parts(
        params: TreeParams,
        graph_params: GraphParams,
        n: usize,
        nodes: BTreeMap<RankRange, GraphIndex>,
        build_insert_count: u64,
    ) -> Result<Self> {
        params.validate()?;
        graph_params.validate()?;
        if n == 0 {
            return Err(Error::InvalidDataset("tree over zero points".into()));
        }
        let index = Self {
            params,
            graph_params,
            n,
            nodes,
            build_insert_count,
        };
        let mut expected = Vec::new();
        index.collect_indexed(RankRange::new(1, n as u32), &mut expected);
        expected.sort();
        let got: Vec<RankRange> = index.nodes.keys().copied().collect();
        if expected != got {
            return Err(Error::InvalidGraph(
                "stored ranges do not match the tree shape".into(),
            ));
        }
        for (range, graph) in &index.nodes {
            check_members(range, graph)?;
        }
        Ok(index)
    }

    fn collect_indexed(&self, range: RankRange, out: &mut Vec<RankRange>) {
        if !self.params.is_indexed(&range) {
            return;
        }
        out.push(range);
        for child in split_range(range, self.params.fanout) {
            self.collect_indexed(child, out);
        }
    }

    pub fn params(&self) -> &TreeParams {
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

    pub fn nodes(&self) -> &BTreeMap<RankRange, GraphIndex> {
        &self.nodes
    }

    pub fn graph(&self, range: &RankRange) -> Option<&GraphIndex> {
        self.nodes.get(range)
    }

    pub fn root(&self) -> Option<&GraphIndex> {
        self.nodes.get(&RankRange::new(1, self.n as u32))
    }

    pub fn build_insert_count(&self) -> u64 {
        self.build_insert_count
    }

    /// Sum of member counts over stored graphs.
    pub fn count_stored_nodes(&self) -> usize {
        self.nodes.values().map(GraphIndex::len).sum()
    }

    /// Number of tree depths holding at least one stored graph.
    pub fn indexed_level_count(&self) -> usize {
        let mut depth_counts = Vec::new();
        self.count_depths(RankRange::new(1, self.n as u32), 0, &mut depth_counts);
        depth_counts.len()
    }

    fn count_depths(&self, range: RankRange, depth: usize, out: &mut Vec<usize>) {
        if !self.nodes.contains_key(&range) {
            return;
        }
        if out.len() <= depth {
            out.push(0);
        }
        out[depth] += 1;
        for child in split_range(range, self.params.fanout) {
            self.count_depths(child, depth + 1, out);
        }
    }

    /// Decomposes `range` into graph searches and linear scans. The
    /// fragments partition `range`.
    pub fn plan(&self, range: RankRange) -> Result<Vec<PlanStep>> {
        if range.l == 0 || range.l > range.r || range.r as usize > self.n {
            return Err(Error::InvalidRange {
                l: range.l,
                r: range.r,
                n: self.n,
            });
        }
        let mut steps = Vec::new();
        self.plan_node(RankRange::new(1, self.n as u32), range, &mut steps);
        Ok(steps)
    }

    fn plan_node(&self, node: RankRange, fragment: RankRange, out: &mut Vec<PlanStep>) {
        if !self.params.is_indexed(&node) {
            out.push(PlanStep::Scan { node, fragment });
            return;
        }
        if self.params.elastic.admits(&fragment, &node) {
            out.push(PlanStep::Graph { node, fragment });
            return;
        }
        for child in split_range(node, self.params.fanout) {
            if let Some(sub) = child.intersect(&fragment) {
                self.plan_node(child, sub, out);
            }
        }
    }

    pub fn query(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        query.validate(dataset)?;
        params.validate(query.k)?;
        let plan = self.plan(query.range)?;
        let mut stats = SearchStats::default();
        let mut merged: Vec<Neighbor> = Vec::new();
        for step in plan {
            match step {
                PlanStep::Graph { node, fragment } => {
                    let graph = self.nodes.get(&node).ok_or_else(|| {
                        Error::InvalidGraph(alloc::format!("no graph stored for {node}"))
                    })?;
                    let sub = Query {
                        vector: query.vector.clone(),
                        range: fragment,
                        k: query.k,
                    };
                    let (hits, s) = graph.search_rf_post(dataset, &sub, params)?;
                    stats.accumulate(&s);
                    merged.extend(hits);
                }
                PlanStep::Scan { fragment, .. } => {
                    stats.dist_computations += fragment.len() as u64;
                    merged.extend(scan(dataset, &query.vector, fragment, query.k));
                }
            }
        }
        merged.sort_by(Neighbor::cmp_key);
        let before = merged.len();
        merged.dedup_by_key(|n| n.rank);
        debug_assert_eq!(before, merged.len(), "plan fragments overlap");
        merged.truncate(query.k);
        Ok((merged, stats))
    }
}

fn scan(dataset: &Dataset, q: &[f32], fragment: RankRange, k: usize) -> Vec<Neighbor> {
    let mut hits: Vec<Neighbor> = fragment
        .ranks()
        .map(|rank| Neighbor {
            rank,
            distance: dataset.distance_to(q, rank),
        })
        .collect();
    hits.sort_by(Neighbor::cmp_key);
    hits.truncate(k);
    hits
}

impl RangeFilteredIndex for TreeIndex {
    fn label(&self) -> &str {
        "hbi-tree"
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

    fn cheap() -> GraphParams {
        GraphParams::new(4, 8, 1)
    }

    #[test]
    fn split_examples() {
        let r = RankRange::new(1, 8);
        assert_eq!(
            split_range(r, 2),
            vec![RankRange::new(1, 4), RankRange::new(5, 8)]
        );
        assert_eq!(
            split_range(RankRange::new(1, 7), 2),
            vec![RankRange::new(1, 4), RankRange::new(5, 7)]
        );
        assert_eq!(
            split_range(RankRange::new(3, 12), 4),
            vec![
                RankRange::new(3, 5),
                RankRange::new(6, 8),
                RankRange::new(9, 10),
                RankRange::new(11, 12)
            ]
        );
        assert_eq!(split_range(RankRange::new(5, 6), 4).len(), 2);
    }

    #[test]
    fn small_tree_matches_hand_trace() {
        // [1,8] and its halves are indexed; quarters have r - l = 1 < 2.
        // Inserts: [1,4] = 2 fresh + 2, [5,8] = 2 fresh + 2, [1,8] = 4.
        let ds = dataset(8, 3, 4);
        let idx = TreeIndex::build(&ds, TreeParams::new(2, 2), cheap()).unwrap();
        let keys: Vec<RankRange> = idx.nodes().keys().copied().collect();
        assert_eq!(
            keys,
            vec![
                RankRange::new(1, 4),
                RankRange::new(1, 8),
                RankRange::new(5, 8)
            ]
        );
        assert_eq!(idx.count_stored_nodes(), 16);
        assert_eq!(idx.build_insert_count(), 12);
        assert_eq!(idx.indexed_level_count(), 2);
    }

    #[test]
    fn leaf_threshold_above_n_stores_nothing() {
        let ds = dataset(50, 3, 4);
        let idx = TreeIndex::build(&ds, TreeParams::new(2, 64), cheap()).unwrap();
        assert!(idx.nodes().is_empty());
        assert_eq!(idx.count_stored_nodes(), 0);
        let q = Query::new(vec![0.0; 3], RankRange::new(10, 40), 5);
        let (res, stats) = idx.query(&ds, &q, &SearchParams::with_beam(5)).unwrap();
        assert_eq!(stats.graphs_consulted, 0);
        assert_eq!(res.len(), 5);
    }

    #[test]
    fn higher_fanout_stores_fewer_nodes() {
        let ds = dataset(1024, 2, 6);
        let two = TreeIndex::build(&ds, TreeParams::new(2, 16), cheap()).unwrap();
        let four = TreeIndex::build(&ds, TreeParams::new(4, 16), cheap()).unwrap();
        assert!(four.count_stored_nodes() < two.count_stored_nodes());
    }

    #[test]
    fn plan_cases() {
        let ds = dataset(64, 2, 1);
        let idx = TreeIndex::build(&ds, TreeParams::new(2, 8), cheap()).unwrap();
        let full = idx.plan(RankRange::new(1, 64)).unwrap();
        assert_eq!(
            full,
            vec![PlanStep::Graph {
                node: RankRange::new(1, 64),
                fragment: RankRange::new(1, 64)
            }]
        );
        // straddles the root midpoint with length 20 < 32
        let straddle = idx.plan(RankRange::new(23, 42)).unwrap();
        assert_eq!(
            straddle,
            vec![
                PlanStep::Graph {
                    node: RankRange::new(17, 32),
                    fragment: RankRange::new(23, 32)
                },
                PlanStep::Graph {
                    node: RankRange::new(33, 48),
                    fragment: RankRange::new(33, 42)
                },
            ]
        );
        // [1,8] is unindexed (r - l = 7 < 8)
        let tiny = idx.plan(RankRange::new(2, 6)).unwrap();
        assert_eq!(
            tiny,
            vec![PlanStep::Scan {
                node: RankRange::new(1, 8),
                fragment: RankRange::new(2, 6)
            }]
        );
    }

    #[test]
    fn from_parts_checks_shape() {
        let ds = dataset(40, 2, 3);
        let idx = TreeIndex::build(&ds, TreeParams::new(2, 8), cheap()).unwrap();
        let mut nodes = idx.nodes().clone();
        let rebuilt = TreeIndex::from_parts(
            *idx.params(),
            *idx.graph_params(),
            40,
            nodes.clone(),
            idx.build_insert_count(),
        )
        .unwrap();
        assert_eq!(rebuilt, idx);
        let first = *nodes.keys().next().unwrap();
        nodes.remove(&first);
        assert!(TreeIndex::from_parts(*idx.params(), *idx.graph_params(), 40, nodes, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn plan_partitions_and_respects_bounds(
            n in 2u32..700,
            fanout in 2usize..17,
            leaf in 1usize..40,
            seed in any::<u64>(),
        ) {
            let idx = TreeIndex {
                params: TreeParams::new(fanout, leaf),
                graph_params: cheap(),
                n: n as usize,
                nodes: BTreeMap::new(),
                build_insert_count: 0,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let a = rng.random_range(1..=n);
                let b = rng.random_range(1..=n);
                let range = RankRange::new(a.min(b), a.max(b));
                let plan = idx.plan(range).unwrap();
                let mut covered: Vec<u32> =
                    plan.iter().flat_map(|s| s.fragment().ranks()).collect();
                covered.sort_unstable();
                let expected: Vec<u32> = range.ranks().collect();
                prop_assert_eq!(covered, expected);
                let graphs = plan.iter().filter(|s| matches!(s, PlanStep::Graph { .. })).count();
                prop_assert!(graphs <= 2, "{} graphs for {} (f={}, leaf={})", graphs, range, fanout, leaf);
                for step in &plan {
                    if let PlanStep::Graph { node, fragment } = step {
                        prop_assert!(node.covers(fragment));
                        prop_assert!(fragment.len() as f64 / node.len() as f64 >= 1.0 / fanout as f64);
                        prop_assert!(idx.params.is_indexed(node));
                    }
                }
            }
        }
    }
}
