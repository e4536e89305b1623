//! Query workloads: random range placements paired with query vectors.

use std::fmt;
use std::str::FromStr;

use hbi_core::{Query, RankRange};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeMode {
    /// `l, r` are two independent uniform draws from `[1, N]`, sorted.
    Mix,
    /// Length `round(fraction * N)` at a uniform random position.
    FixedLength(f64),
    /// `l = 1`, `r` uniform in `[1, N]`.
    HalfBounded,
}

impl fmt::Display for RangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeMode::Mix => f.write_str("mix"),
            RangeMode::FixedLength(p) => write!(f, "fixed:{p}"),
            RangeMode::HalfBounded => f.write_str("half"),
        }
    }
}

impl FromStr for RangeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mix" => Ok(RangeMode::Mix),
            "half" => Ok(RangeMode::HalfBounded),
            _ => {
                let frac = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::Usage(format!("unknown range mode `{s}`")))?;
                let p = parse_fraction(frac)?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Usage(format!(
                        "fixed fraction {p} must lie in (0, 1]"
                    )));
                }
                Ok(RangeMode::FixedLength(p))
            }
        }
    }
}

fn parse_fraction(s: &str) -> Result<f64> {
    let bad = || Error::Usage(format!("bad fraction `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub mode: RangeMode,
    pub count: usize,
    pub k: usize,
    pub seed: u64,
}

/// Generates `spec.count` queries over `[1, n]`, cycling through
/// `query_vectors`.
pub fn gen_queries(
    spec: &WorkloadSpec,
    n: usize,
    query_vectors: &[Vec<f32>],
) -> Result<Vec<Query>> {
    if query_vectors.is_empty() {
        return Err(Error::Usage("no query vectors".into()));
    }
    if spec.count == 0 || spec.k == 0 || n == 0 {
        return Err(Error::Usage(
            "query count, k and n must be at least 1".into(),
        ));
    }
    let n32 = n as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let queries = (0..spec.count)
        .map(|i| {
            let range = match spec.mode {
                RangeMode::Mix => {
                    let a = rng.random_range(1..=n32);
                    let b = rng.random_range(1..=n32);
                    RankRange::new(a.min(b), a.max(b))
                }
                RangeMode::FixedLength(p) => {
                    let len = ((p * n as f64).round() as u32).clamp(1, n32);
                    let l = rng.random_range(1..=n32 - len + 1);
                    RankRange::new(l, l + len - 1)
                }
                RangeMode::HalfBounded => RankRange::new(1, rng.random_range(1..=n32)),
            };
            Query::new(
                query_vectors[i % query_vectors.len()].clone(),
                range,
                spec.k,
            )
        })
        .collect();
    Ok(queries)
}
