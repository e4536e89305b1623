//! Recall/QPS measurement against exact ground truth.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hbi_core::oracle::{exact_rfknn, recall};
use hbi_core::{Dataset, Query, RangeFilteredIndex, SearchParams};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::storage::dataset_hash;
use crate::vecs::{load_ivecs, write_ivecs};

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "beam",
    "k",
    "range_mode",
    "recall",
    "qps",
    "mean_dist",
    "mean_graphs",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub beam: usize,
    pub k: usize,
    pub range_mode: String,
    pub recall: f64,
    pub qps: f64,
    pub mean_dist: f64,
    pub mean_graphs: f64,
    pub wall_time: Duration,
}

/// Exact in-range top-`k` ranks per query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub ranks: Vec<Vec<u32>>,
}

impl GroundTruth {
    pub fn compute(dataset: &Dataset, queries: &[Query]) -> Result<Self> {
        let ranks = queries
            .par_iter()
            .map(|q| {
                Ok(exact_rfknn(dataset, q)?
                    .into_iter()
                    .map(|n| n.rank)
                    .collect())
            })
            .collect::<Result<Vec<Vec<u32>>>>()?;
        Ok(Self { ranks })
    }

    /// Content key over the dataset and every query (vector, range, k).
    pub fn cache_key(dataset: &Dataset, queries: &[Query]) -> String {
        let mut h = Sha256::new();
        h.update(dataset_hash(dataset));
        for q in queries {
            h.update(q.range.l.to_le_bytes());
            h.update(q.range.r.to_le_bytes());
            h.update((q.k as u64).to_le_bytes());
            for x in &q.vector {
                h.update(x.to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..16])
    }

    pub fn cache_path(dir: &Path, dataset: &Dataset, queries: &[Query]) -> PathBuf {
        dir.join(format!("gt-{}.ivecs", Self::cache_key(dataset, queries)))
    }

    /// Loads cached truth from `dir` when present, otherwise computes and
    /// stores it. Records are padded with `-1` up to `k`.
    pub fn cached(dir: Option<&Path>, dataset: &Dataset, queries: &[Query]) -> Result<Self> {
        let Some(dir) = dir else {
            return Self::compute(dataset, queries);
        };
        let path = Self::cache_path(dir, dataset, queries);
        if path.exists() {
            let file = load_ivecs(&path)?;
            if file.len() == queries.len() {
                let ranks = file
                    .rows()
                    .map(|row| row.iter().filter(|&&v| v > 0).map(|&v| v as u32).collect())
                    .collect();
                return Ok(Self { ranks });
            }
        }
        let truth = Self::compute(dataset, queries)?;
        let k = queries.iter().map(|q| q.k).max().unwrap_or(1);
        let mut flat = Vec::with_capacity(k * queries.len());
        for row in &truth.ranks {
            flat.extend(row.iter().map(|&r| r as i32));
            flat.extend(std::iter::repeat_n(-1, k - row.len()));
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_ivecs(&path, &flat, k)?;
        Ok(truth)
    }
}

/// Runs every query once per beam, single-threaded, timing only the search
/// calls.
pub fn run_benchmark(
    index: &dyn RangeFilteredIndex,
    dataset: &Dataset,
    queries: &[Query],
    truth: &GroundTruth,
    beams: &[usize],
    range_mode: &str,
) -> Result<Vec<BenchRow>> {
    if truth.ranks.len() != queries.len() {
        return Err(Error::Usage(
            "ground truth does not match the query set".into(),
        ));
    }
    let mut rows = Vec::with_capacity(beams.len());
    for &beam in beams {
        let params = SearchParams::with_beam(beam);
        let mut elapsed = Duration::ZERO;
        let mut recall_sum = 0.0;
        let mut dist_sum = 0u64;
        let mut graphs_sum = 0u64;
        let started = Instant::now();
        for (q, exact) in queries.iter().zip(&truth.ranks) {
            let t = Instant::now();
            let (hits, stats) = index.search(dataset, q, &params)?;
            elapsed += t.elapsed();
            let got: Vec<u32> = hits.iter().map(|n| n.rank).collect();
            recall_sum += recall(&got, exact, q.k);
            dist_sum += stats.dist_computations;
            graphs_sum += stats.graphs_consulted;
        }
        let count = queries.len().max(1) as f64;
        let secs = elapsed.as_secs_f64().max(1e-9);
        rows.push(BenchRow {
            method: index.label().to_string(),
            beam,
            k: queries.first().map_or(0, |q| q.k),
            range_mode: range_mode.to_string(),
            recall: recall_sum / count,
            qps: queries.len() as f64 / secs,
            mean_dist: dist_sum as f64 / count,
            mean_graphs: graphs_sum as f64 / count,
            wall_time: started.elapsed(),
        });
    }
    Ok(rows)
}

/// Writes rows as CSV with the fixed header; LF line endings.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Usage(format!("CSV output failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.beam.to_string(),
            r.k.to_string(),
            r.range_mode.clone(),
            format!("{:.6}", r.recall),
            format!("{:.3}", r.qps),
            format!("{:.3}", r.mean_dist),
            format!("{:.4}", r.mean_graphs),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_dataset, synthesize_queries};
    use crate::workload::{gen_queries, RangeMode, WorkloadSpec};
    use hbi_core::{GraphParams, TreeIndex, TreeParams};

    fn setup() -> (Dataset, Vec<Query>, TreeIndex) {
        let s = synthesize_dataset(600, 6, 4, 1).unwrap();
        let qv = synthesize_queries(&s.mixture, 20, 2);
        let spec = WorkloadSpec {
            mode: RangeMode::Mix,
            count: 40,
            k: 5,
            seed: 3,
        };
        let queries = gen_queries(&spec, 600, &qv).unwrap();
        let tree = TreeIndex::build(
            &s.dataset,
            TreeParams::new(2, 32),
            GraphParams::new(8, 40, 1),
        )
        .unwrap();
        (s.dataset, queries, tree)
    }

    #[test]
    fn rows_and_csv() {
        let (ds, queries, tree) = setup();
        let truth = GroundTruth::compute(&ds, &queries).unwrap();
        let rows = run_benchmark(&tree, &ds, &queries, &truth, &[5, 600], "mix").unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.recall) && r.qps > 0.0));
        assert!(rows.iter().all(|r| r.mean_graphs <= 2.0));
        let rerun = run_benchmark(&tree, &ds, &queries, &truth, &[5, 600], "mix").unwrap();
        assert_eq!(
            rows.iter().map(|r| r.recall).collect::<Vec<_>>(),
            rerun.iter().map(|r| r.recall).collect::<Vec<_>>()
        );
        assert!(run_benchmark(&tree, &ds, &queries, &truth, &[], "mix")
            .unwrap()
            .is_empty());

        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,beam,k,range_mode,recall,qps,mean_dist,mean_graphs"
        );
        assert!(lines.next().unwrap().starts_with("hbi-tree,5,5,mix,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn ground_truth_cache_roundtrip() {
        let (ds, queries, _) = setup();
        let dir = tempfile::tempdir().unwrap();
        let first = GroundTruth::cached(Some(dir.path()), &ds, &queries).unwrap();
        assert!(GroundTruth::cache_path(dir.path(), &ds, &queries).exists());
        let second = GroundTruth::cached(Some(dir.path()), &ds, &queries).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, GroundTruth::compute(&ds, &queries).unwrap());
    }
}
