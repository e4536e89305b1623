//! Hierarchical proximity graph with edge occlusion and filtered beam search.
//!
//! Nodes are identified by their dataset rank. Internally every node also has
//! a dense local id (its insertion order) which adjacency lists refer to.
//! Layer 0 allows `2 * max_degree` out-edges, upper layers `max_degree`.

use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{squared_l2, Dataset, Query, RankRange, SearchParams};

const MAX_LEVEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Out-degree cap `M` on upper layers; layer 0 uses `2 * M`.
    pub max_degree: usize,
    pub ef_construction: usize,
    /// Mean scale of the geometric layer distribution, `1 / ln(M)` by default.
    pub level_scale: f64,
    pub seed: u64,
}

impl GraphParams {
    pub fn new(max_degree: usize, ef_construction: usize, seed: u64) -> Self {
        Self {
            max_degree,
            ef_construction,
            level_scale: 1.0 / libm::log(max_degree.max(2) as f64),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_degree < 2 {
            return Err(Error::InvalidParameter(
                "max degree must be at least 2".into(),
            ));
        }
        if self.ef_construction < self.max_degree {
            return Err(Error::InvalidParameter(
                "ef_construction must be at least the max degree".into(),
            ));
        }
        if !(self.level_scale.is_finite() && self.level_scale >= 0.0) {
            return Err(Error::InvalidParameter(
                "level scale must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn cap(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.max_degree
        } else {
            self.max_degree
        }
    }

    /// Layer of the node at `rank`. A pure function of `(seed, rank)`, so a
    /// point lands on the same layer in every snapshot that contains it.
    pub fn level_for(&self, rank: u32) -> usize {
        let mix = self.seed ^ u64::from(rank).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(mix);
        let u: f64 = rng.random();
        let level = -libm::log(1.0 - u) * self.level_scale;
        (level as usize).min(MAX_LEVEL)
    }
}

impl Default for GraphParams {
    fn default() -> Self {
        Self::new(16, 200, 0x5EED)
    }
}

/// Range filter applied during base-layer search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    None,
    /// Out-of-range nodes are never evaluated or traversed.
    Pre(RankRange),
    /// Out-of-range nodes are traversed but never returned.
    Post(RankRange),
}

impl FilterMode {
    fn range(&self) -> Option<&RankRange> {
        match self {
            FilterMode::None => None,
            FilterMode::Pre(r) | FilterMode::Post(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub dist_computations: u64,
    /// Nodes whose adjacency was expanded, across all layers.
    pub hops: u64,
    pub graphs_consulted: u64,
    pub beam_restarts: u64,
}

impl SearchStats {
    pub fn accumulate(&mut self, other: &SearchStats) {
        self.dist_computations += other.dist_computations;
        self.hops += other.hops;
        self.graphs_consulted += other.graphs_consulted;
        self.beam_restarts += other.beam_restarts;
    }
}

/// A search hit: dataset rank and distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub rank: u32,
    pub distance: f64,
}

impl Neighbor {
    /// Ascending by distance, ties by smaller rank.
    pub fn cmp_key(&self, other: &Neighbor) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.rank.cmp(&other.rank))
    }
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    dist: f64,
    rank: u32,
    local: u32,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.rank.cmp(&other.rank))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    rank: u32,
    /// `links[layer]` holds local ids; `links.len() - 1` is the node's level.
    links: Vec<Vec<u32>>,
}

impl Node {
    fn level(&self) -> usize {
        self.links.len() - 1
    }
}

/// Selects a diverse neighbor set: scanning candidates by ascending distance
/// to the base point, a candidate is kept only if it is strictly closer to
/// the base than to every neighbor kept so far. Stops once `cap` are kept.
///
/// Candidates are stably sorted by distance first, so among equal distances
/// the earlier candidate wins.
pub fn occlude_neighbors<T: Copy>(
    candidates: &[(T, f64)],
    cap: usize,
    mut pair_distance: impl FnMut(T, T) -> f64,
) -> Vec<T> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut kept: Vec<T> = Vec::with_capacity(cap.min(sorted.len()));
    for &(cand, to_base) in &sorted {
        if kept.len() >= cap {
            break;
        }
        if kept.iter().all(|&s| to_base < pair_distance(cand, s)) {
            kept.push(cand);
        }
    }
    kept
}

struct LayerSearch {
    found: Vec<Scored>,
    visited: usize,
}

/// Navigable proximity graph over a subset of dataset ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphIndex {
    params: GraphParams,
    nodes: Vec<Node>,
    by_rank: BTreeMap<u32, u32>,
    entry: Option<u32>,
}

impl GraphIndex {
    pub fn new(params: GraphParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            nodes: Vec::new(),
            by_rank: BTreeMap::new(),
            entry: None,
        })
    }

    /// Reassembles a graph from stored parts: `nodes[i] = (rank, links)`
    /// where links are per-layer lists of local ids, and `entry` is a local
    /// id. Every structural invariant is checked.
    pub fn from_parts(
        params: GraphParams,
        nodes: Vec<(u32, Vec<Vec<u32>>)>,
        entry: Option<u32>,
    ) -> Result<Self> {
        params.validate()?;
        let mut by_rank = BTreeMap::new();
        let mut built = Vec::with_capacity(nodes.len());
        for (local, (rank, links)) in nodes.into_iter().enumerate() {
            if by_rank.insert(rank, local as u32).is_some() {
                return Err(Error::DuplicateMember(rank));
            }
            built.push(Node { rank, links });
        }
        let graph = Self {
            params,
            nodes: built,
            by_rank,
            entry,
        };
        graph.check_invariants()?;
        Ok(graph)
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, rank: u32) -> bool {
        self.by_rank.contains_key(&rank)
    }

    /// Member ranks in insertion order.
    pub fn ranks(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().map(|n| n.rank)
    }

    /// `(rank, per-layer local-id adjacency)` in insertion order.
    pub fn node_links(&self) -> impl Iterator<Item = (u32, &[Vec<u32>])> + '_ {
        self.nodes.iter().map(|n| (n.rank, n.links.as_slice()))
    }

    /// Local id of the entry point.
    pub fn entry_local(&self) -> Option<u32> {
        self.entry
    }

    pub fn entry_rank(&self) -> Option<u32> {
        self.entry.map(|e| self.nodes[e as usize].rank)
    }

    pub fn max_level(&self) -> Option<usize> {
        self.entry.map(|e| self.nodes[e as usize].level())
    }

    /// Out-neighbors of `rank` on `layer`, as ranks.
    pub fn neighbors(&self, rank: u32, layer: usize) -> Option<Vec<u32>> {
        let local = *self.by_rank.get(&rank)?;
        let node = &self.nodes[local as usize];
        node.links
            .get(layer)
            .map(|l| l.iter().map(|&v| self.nodes[v as usize].rank).collect())
    }

    /// Checks degree caps, edge closure, absence of self-loops and the entry
    /// point rule.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.nodes.len() as u32;
        for (local, node) in self.nodes.iter().enumerate() {
            if node.links.is_empty() || node.links.len() > MAX_LEVEL + 1 {
                return Err(Error::InvalidGraph(alloc::format!(
                    "rank {} has {} layers",
                    node.rank,
                    node.links.len()
                )));
            }
            for (layer, links) in node.links.iter().enumerate() {
                if links.len() > self.params.cap(layer) {
                    return Err(Error::InvalidGraph(alloc::format!(
                        "rank {} exceeds degree cap on layer {layer}",
                        node.rank
                    )));
                }
                for &v in links {
                    if v >= n {
                        return Err(Error::InvalidGraph(alloc::format!(
                            "rank {} links to unknown node {v}",
                            node.rank
                        )));
                    }
                    if v as usize == local {
                        return Err(Error::InvalidGraph(alloc::format!(
                            "self-loop at rank {}",
                            node.rank
                        )));
                    }
                    if self.nodes[v as usize].level() < layer {
                        return Err(Error::InvalidGraph(alloc::format!(
                            "edge from rank {} on layer {layer} to a node below it",
                            node.rank
                        )));
                    }
                }
            }
        }
        match self.entry {
            None if !self.nodes.is_empty() => Err(Error::InvalidGraph(
                "nonempty graph without entry point".into(),
            )),
            Some(_) if self.nodes.is_empty() => {
                Err(Error::InvalidGraph("empty graph with entry point".into()))
            }
            Some(e) if e >= n => Err(Error::InvalidGraph("entry point out of bounds".into())),
            Some(e) => {
                let top = self.nodes.iter().map(Node::level).max().unwrap_or(0);
                if self.nodes[e as usize].level() != top {
                    return Err(Error::InvalidGraph(
                        "entry point is not on the top layer".into(),
                    ));
                }
                Ok(())
            }
            None => Ok(()),
        }
    }

    /// Number of members reachable from the entry point over layer 0.
    pub fn reachable_from_entry(&self) -> usize {
        let Some(entry) = self.entry else { return 0 };
        let mut seen = alloc::vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([entry]);
        seen[entry as usize] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.nodes[u as usize].links[0] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from_entry() == self.nodes.len()
    }

    /// Inserts the point at `rank`.
    pub fn insert(&mut self, dataset: &Dataset, rank: u32) -> Result<()> {
        if rank == 0 || rank as usize > dataset.len() {
            return Err(Error::UnknownRank(rank));
        }
        if self.by_rank.contains_key(&rank) {
            return Err(Error::DuplicateMember(rank));
        }
        let level = self.params.level_for(rank);
        let local = self.nodes.len() as u32;
        self.nodes.push(Node {
            rank,
            links: alloc::vec![Vec::new(); level + 1],
        });
        self.by_rank.insert(rank, local);

        let Some(entry) = self.entry else {
            self.entry = Some(local);
            return Ok(());
        };

        let q = dataset.vector(rank);
        let top = self.nodes[entry as usize].level();
        let mut scratch = SearchStats::default();
        let mut entries = alloc::vec![self.score(dataset, q, entry, &mut scratch)];
        for layer in (level + 1..=top).rev() {
            entries = self
                .search_layer(
                    dataset,
                    q,
                    &entries,
                    1,
                    layer,
                    FilterMode::None,
                    &mut scratch,
                )
                .found;
        }
        for layer in (0..=level.min(top)).rev() {
            let found = self
                .search_layer(
                    dataset,
                    q,
                    &entries,
                    self.params.ef_construction,
                    layer,
                    FilterMode::None,
                    &mut scratch,
                )
                .found;
            let candidates: Vec<(u32, f64)> = found
                .iter()
                .filter(|s| s.local != local)
                .map(|s| (s.local, s.dist))
                .collect();
            let chosen = occlude_neighbors(&candidates, self.params.cap(layer), |a, b| {
                self.local_distance(dataset, a, b)
            });
            for &nb in &chosen {
                self.add_reverse_edge(dataset, nb, local, layer);
            }
            self.nodes[local as usize].links[layer] = chosen;
            entries = found;
        }
        if level > top {
            self.entry = Some(local);
        }
        Ok(())
    }

    fn add_reverse_edge(&mut self, dataset: &Dataset, from: u32, to: u32, layer: usize) {
        let cap = self.params.cap(layer);
        let links = &mut self.nodes[from as usize].links[layer];
        if links.contains(&to) {
            return;
        }
        links.push(to);
        if links.len() <= cap {
            return;
        }
        let current = links.clone();
        let base = dataset.vector(self.nodes[from as usize].rank);
        let mut candidates: Vec<(u32, f64)> = current
            .iter()
            .map(|&v| {
                (
                    v,
                    libm::sqrt(squared_l2(
                        base,
                        dataset.vector(self.nodes[v as usize].rank),
                    )),
                )
            })
            .collect();
        candidates.sort_by(|a, b| {
            a.1.total_cmp(&b.1).then(
                self.nodes[a.0 as usize]
                    .rank
                    .cmp(&self.nodes[b.0 as usize].rank),
            )
        });
        let kept = occlude_neighbors(&candidates, cap, |a, b| self.local_distance(dataset, a, b));
        self.nodes[from as usize].links[layer] = kept;
    }

    #[inline]
    fn local_distance(&self, dataset: &Dataset, a: u32, b: u32) -> f64 {
        libm::sqrt(squared_l2(
            dataset.vector(self.nodes[a as usize].rank),
            dataset.vector(self.nodes[b as usize].rank),
        ))
    }

    #[inline]
    fn score(&self, dataset: &Dataset, q: &[f32], local: u32, stats: &mut SearchStats) -> Scored {
        stats.dist_computations += 1;
        let rank = self.nodes[local as usize].rank;
        Scored {
            dist: dataset.distance_to(q, rank),
            rank,
            local,
        }
    }

    /// Best-first search on one layer with a candidate min-heap and a result
    /// max-heap bounded at `m`. The search stops once the closest pending
    /// candidate is farther than the worst of `m` results; while fewer than
    /// `m` admissible results are held it keeps expanding.
    #[allow(clippy::too_many_arguments)]
    fn search_layer(
        &self,
        dataset: &Dataset,
        q: &[f32],
        entries: &[Scored],
        m: usize,
        layer: usize,
        filter: FilterMode,
        stats: &mut SearchStats,
    ) -> LayerSearch {
        let admits = |rank: u32| filter.range().is_none_or(|r| r.contains(rank));
        let mut visited = alloc::vec![false; self.nodes.len()];
        let mut visited_count = 0;
        let mut candidates: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        let mut results: BinaryHeap<Scored> = BinaryHeap::new();

        for &e in entries {
            if visited[e.local as usize] {
                continue;
            }
            visited[e.local as usize] = true;
            visited_count += 1;
            candidates.push(Reverse(e));
            if admits(e.rank) {
                results.push(e);
                if results.len() > m {
                    results.pop();
                }
            }
        }

        while let Some(Reverse(u)) = candidates.pop() {
            if results.len() >= m {
                if let Some(worst) = results.peek() {
                    if u.dist > worst.dist {
                        break;
                    }
                }
            }
            stats.hops += 1;
            let Some(links) = self.nodes[u.local as usize].links.get(layer) else {
                continue;
            };
            for &v in links {
                if visited[v as usize] {
                    continue;
                }
                visited[v as usize] = true;
                visited_count += 1;
                let rank = self.nodes[v as usize].rank;
                let in_range = admits(rank);
                if matches!(filter, FilterMode::Pre(_)) && !in_range {
                    continue;
                }
                let cand = self.score(dataset, q, v, stats);
                // A candidate that cannot enter a full result heap would never
                // be expanded before the stop condition fires.
                let useful = results.len() < m || results.peek().is_some_and(|w| cand < *w);
                if !useful {
                    continue;
                }
                candidates.push(Reverse(cand));
                if in_range {
                    results.push(cand);
                    if results.len() > m {
                        results.pop();
                    }
                }
            }
        }
        LayerSearch {
            found: results.into_sorted_vec(),
            visited: visited_count,
        }
    }

    fn search_inner(
        &self,
        dataset: &Dataset,
        q: &[f32],
        m: usize,
        filter: FilterMode,
        stats: &mut SearchStats,
    ) -> LayerSearch {
        let Some(entry) = self.entry else {
            return LayerSearch {
                found: Vec::new(),
                visited: 0,
            };
        };
        let mut entries = alloc::vec![self.score(dataset, q, entry, stats)];
        let top = self.nodes[entry as usize].level();
        for layer in (1..=top).rev() {
            entries = self
                .search_layer(dataset, q, &entries, 1, layer, FilterMode::None, stats)
                .found;
        }
        self.search_layer(dataset, q, &entries, m.max(1), 0, filter, stats)
    }

    /// Filtered beam search: greedy descent through the upper layers, then a
    /// beam of width `m` on layer 0 under `filter`. Results ascend by
    /// distance.
    pub fn search(
        &self,
        dataset: &Dataset,
        q: &[f32],
        m: usize,
        filter: FilterMode,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        dataset.check_query_vector(q)?;
        if m == 0 {
            return Err(Error::InvalidParameter("beam must be at least 1".into()));
        }
        let mut stats = SearchStats::default();
        let found = self.search_inner(dataset, q, m, filter, &mut stats).found;
        if !self.is_empty() {
            stats.graphs_consulted = 1;
        }
        Ok((to_neighbors(&found), stats))
    }

    /// Post-filtered search for the `k` nearest in-range points. When fewer
    /// than `k` in-range points come back and the search left part of the
    /// graph unvisited, it restarts with the beam multiplied by
    /// `expansion_factor`, up to `beam_cap`.
    pub fn search_rf_post(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        query.validate(dataset)?;
        params.validate(query.k)?;
        let mut stats = SearchStats::default();
        let n = self.nodes.len();
        if n == 0 {
            return Ok((Vec::new(), stats));
        }
        stats.graphs_consulted = 1;
        let cap = params.beam_cap.unwrap_or(n).clamp(1, n);
        let mut beam = params.beam.min(cap);
        let filter = FilterMode::Post(query.range);
        let found = loop {
            let run = self.search_inner(dataset, &query.vector, beam, filter, &mut stats);
            if run.found.len() >= query.k || beam >= cap || run.visited >= n {
                break run.found;
            }
            beam = beam.saturating_mul(params.expansion_factor).min(cap);
            stats.beam_restarts += 1;
        };
        let mut out = to_neighbors(&found);
        out.truncate(query.k);
        Ok((out, stats))
    }
}

fn to_neighbors(found: &[Scored]) -> Vec<Neighbor> {
    found
        .iter()
        .map(|s| Neighbor {
            rank: s.rank,
            distance: s.dist,
        })
        .collect()
}
