//! Common query surface over the index families.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{GraphIndex, Neighbor, SearchStats};
use crate::types::{Dataset, Query, RankRange, SearchParams};

/// A graph paired with the rank range whose points it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct RangedIndex {
    pub range: RankRange,
    pub graph: GraphIndex,
}

impl RangedIndex {
    /// Members are exactly the ranks of `range`.
    pub fn check_members(&self) -> Result<()> {
        check_members(&self.range, &self.graph)
    }
}

pub(crate) fn check_members(range: &RankRange, graph: &GraphIndex) -> Result<()> {
    if graph.len() != range.len() || !graph.ranks().all(|r| range.contains(r)) {
        return Err(Error::InvalidGraph(alloc::format!(
            "graph for {range} holds {} members, not exactly the range",
            graph.len()
        )));
    }
    Ok(())
}

/// Anything that answers range-filtered k-NN queries.
pub trait RangeFilteredIndex {
    fn label(&self) -> &str;

    fn search(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)>;
}

/// Post-filtering over a single graph, typically the one built on `[1, N]`.
#[derive(Debug, Clone, Copy)]
pub struct PostFilterGraph<'a> {
    pub graph: &'a GraphIndex,
}

impl RangeFilteredIndex for PostFilterGraph<'_> {
    fn label(&self) -> &str {
        "post-root"
    }

    fn search(
        &self,
        dataset: &Dataset,
        query: &Query,
        params: &SearchParams,
    ) -> Result<(Vec<Neighbor>, SearchStats)> {
        self.graph.search_rf_post(dataset, query, params)
    }
}
