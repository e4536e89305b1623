//! Elastic graph indexes for range-filtered approximate k-nearest-neighbor
//! search.
//!
//! Points carry a numeric attribute that is re-ranked to `1..=N`; a query
//! asks for the `k` nearest points whose rank lies inside `[l, r]`. Two index
//! families are provided:
//!
//! * [`HalfIndex`]: a geometric ladder of graph snapshots over prefixes (or
//!   suffixes) of the rank order, answering half-bounded queries with exactly
//!   one graph search.
//! * [`TreeIndex`]: a segment tree of graph snapshots answering arbitrary
//!   ranges with at most two graph searches.
//!
//! Both post-filter a proximity graph ([`GraphIndex`]) built over a tight
//! superset of the query range. The [`oracle`] module holds the brute-force
//! ground truth used to check them.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod graph;
pub mod half;
pub mod index;
pub mod oracle;
pub mod tree;
pub mod types;

pub use error::{Error, Result};
pub use graph::{FilterMode, GraphIndex, GraphParams, Neighbor, SearchStats};
pub use half::{Anchor, HalfIndex, HalfIndexParams};
pub use index::{PostFilterGraph, RangeFilteredIndex, RangedIndex};
pub use tree::{PlanStep, TreeIndex, TreeParams};
pub use types::{
    elastic_factor, euclidean_distance, rerank_attributes, Dataset, ElasticPolicy, Query,
    RankRange, SearchParams,
};
