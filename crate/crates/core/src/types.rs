//! Value types shared by every index: datasets, rank ranges, queries and
//! search parameters.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// `N` vectors of dimension `d`, stored in attribute-rank order: the row at
/// rank `i` (1-based) is the point whose attribute is the `i`-th smallest.
#[derive(Clone, PartialEq)]
pub struct Dataset {
    data: Vec<f32>,
    n: usize,
    dim: usize,
    pub source_label: String,
}

impl fmt::Debug for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dataset")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("source_label", &self.source_label)
            .finish()
    }
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer already in rank order.
    pub fn from_flat(data: Vec<f32>, dim: usize, source_label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidDataset(
                "dataset must hold at least one point".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidDataset(alloc::format!(
                "buffer of {} floats is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset(alloc::format!(
                "non-finite component in row {}",
                i / dim + 1
            )));
        }
        let n = data.len() / dim;
        if n > u32::MAX as usize - 1 {
            return Err(Error::InvalidDataset("too many points".into()));
        }
        Ok(Self {
            data,
            n,
            dim,
            source_label: source_label.into(),
        })
    }

    /// Builds a dataset from rows in rank order.
    pub fn from_rows(rows: &[Vec<f32>], source_label: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidDataset(alloc::format!(
                    "row {} has {} components, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim, source_label)
    }

    /// Reorders `rows` (in raw order) so that row `i` of the result holds the
    /// point with attribute rank `i`.
    pub fn from_attributed_rows(
        rows: &[Vec<f32>],
        attributes: &[f64],
        source_label: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != attributes.len() {
            return Err(Error::InvalidDataset(alloc::format!(
                "{} rows but {} attributes",
                rows.len(),
                attributes.len()
            )));
        }
        let ranks = rerank_attributes(attributes)?;
        let mut ordered: Vec<Vec<f32>> = alloc::vec![Vec::new(); rows.len()];
        for (row, rank) in rows.iter().zip(&ranks) {
            ordered[(*rank - 1) as usize] = row.clone();
        }
        Self::from_rows(&ordered, source_label)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Full rank range `[1, N]`.
    pub fn full_range(&self) -> RankRange {
        RankRange {
            l: 1,
            r: self.n as u32,
        }
    }

    /// Vector at 1-based `rank`. Panics when out of bounds.
    #[inline]
    pub fn vector(&self, rank: u32) -> &[f32] {
        let start = (rank as usize - 1) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn check_query_vector(&self, q: &[f32]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.len(),
            });
        }
        Ok(())
    }

    pub fn check_range(&self, range: RankRange) -> Result<()> {
        if range.l < 1 || range.l > range.r || range.r as usize > self.n {
            return Err(Error::InvalidRange {
                l: range.l,
                r: range.r,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Distance from `q` to the point at `rank`, without dimension checks.
    #[inline]
    pub(crate) fn distance_to(&self, q: &[f32], rank: u32) -> f64 {
        libm::sqrt(squared_l2(q, self.vector(rank)))
    }
}

#[inline]
pub(crate) fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Euclidean distance accumulated in `f64`.
pub fn euclidean_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(libm::sqrt(squared_l2(a, b)))
}

/// Inclusive range of 1-based attribute ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankRange {
    pub l: u32,
    pub r: u32,
}

impl RankRange {
    /// Panics if `l == 0` or `l > r`; use [`RankRange::try_new`] for input.
    pub fn new(l: u32, r: u32) -> Self {
        assert!(l >= 1 && l <= r, "invalid rank range [{l}, {r}]");
        Self { l, r }
    }

    pub fn try_new(l: u32, r: u32, n: usize) -> Result<Self> {
        if l < 1 || l > r || r as usize > n {
            return Err(Error::InvalidRange { l, r, n });
        }
        Ok(Self { l, r })
    }

    pub fn len(&self) -> usize {
        (self.r - self.l) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, rank: u32) -> bool {
        self.l <= rank && rank <= self.r
    }

    /// `true` when `other` lies entirely inside `self`.
    pub fn covers(&self, other: &RankRange) -> bool {
        self.l <= other.l && other.r <= self.r
    }

    pub fn intersect(&self, other: &RankRange) -> Option<RankRange> {
        let l = self.l.max(other.l);
        let r = self.r.min(other.r);
        (l <= r).then_some(RankRange { l, r })
    }

    pub fn ranks(&self) -> core::ops::RangeInclusive<u32> {
        self.l..=self.r
    }
}

impl fmt::Display for RankRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.l, self.r)
    }
}

/// Range-filtered k-NN query.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub vector: Vec<f32>,
    pub range: RankRange,
    pub k: usize,
}

impl Query {
    pub fn new(vector: Vec<f32>, range: RankRange, k: usize) -> Self {
        Self { vector, range, k }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        dataset.check_query_vector(&self.vector)?;
        dataset.check_range(self.range)?;
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Beam configuration for post-filtered graph search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Initial beam width `m`; values above the graph size are clamped.
    pub beam: usize,
    /// Largest beam reached by restarts. `None` means the graph size.
    pub beam_cap: Option<usize>,
    /// Beam multiplier applied on each restart; at least 2.
    pub expansion_factor: usize,
}

impl SearchParams {
    pub fn with_beam(beam: usize) -> Self {
        Self {
            beam,
            beam_cap: None,
            expansion_factor: 2,
        }
    }

    /// Beam as wide as the searched graph: every reachable node is evaluated.
    pub fn exhaustive() -> Self {
        Self::with_beam(usize::MAX)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.beam < k {
            return Err(Error::InvalidParameter(alloc::format!(
                "beam {} is smaller than k = {k}",
                self.beam
            )));
        }
        if let Some(cap) = self.beam_cap {
            if cap < self.beam {
                return Err(Error::InvalidParameter(alloc::format!(
                    "beam cap {cap} is smaller than beam {}",
                    self.beam
                )));
            }
        }
        if self.expansion_factor < 2 {
            return Err(Error::InvalidParameter(
                "expansion factor must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        Self::with_beam(64)
    }
}

/// Threshold `c` on the elastic factor a stored graph must reach before it
/// may serve a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticPolicy {
    pub c: f64,
}

impl ElasticPolicy {
    pub fn for_fanout(fanout: usize) -> Self {
        Self {
            c: 1.0 / fanout as f64,
        }
    }

    pub fn admits(&self, query: &RankRange, stored: &RankRange) -> bool {
        stored.covers(query) && query.len() as f64 / stored.len() as f64 >= self.c
    }
}

/// Maps raw attribute values to 1-based ranks under ascending order. Equal
/// values keep their original relative order.
pub fn rerank_attributes(raw: &[f64]) -> Result<Vec<u32>> {
    if raw.is_empty() {
        return Err(Error::InvalidDataset("no attributes".into()));
    }
    if let Some(i) = raw.iter().position(|x| x.is_nan()) {
        return Err(Error::NonComparable(i));
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let mut ranks = alloc::vec![0u32; raw.len()];
    for (rank0, &orig) in order.iter().enumerate() {
        ranks[orig] = rank0 as u32 + 1;
    }
    Ok(ranks)
}

/// Best ratio `|query| / |stored|` over stored ranges that contain `query`.
pub fn elastic_factor(ranges: &[RankRange], query: RankRange) -> Option<f64> {
    ranges
        .iter()
        .filter(|stored| stored.covers(&query))
        .map(|stored| query.len() as f64 / stored.len() as f64)
        .max_by(f64::total_cmp)
}
