//! Binary index files. Layout is documented in `docs/index-format.md`; all
//! integers are little-endian and fixed width. Vectors are not stored: the
//! file records a SHA-256 of the dataset it was built for.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hbi_core::{
    Anchor, Dataset, ElasticPolicy, GraphIndex, GraphParams, HalfIndex, HalfIndexParams,
    RangeFilteredIndex, RangedIndex, RankRange, TreeIndex, TreeParams,
};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"HBIX";
pub const FORMAT_VERSION: u32 = 1;

const KIND_HALF: u8 = 1;
const KIND_TREE: u8 = 2;
const NO_ENTRY: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum StoredIndex {
    Half(HalfIndex),
    Tree(TreeIndex),
}

impl StoredIndex {
    pub fn as_searchable(&self) -> &dyn RangeFilteredIndex {
        match self {
            StoredIndex::Half(h) => h,
            StoredIndex::Tree(t) => t,
        }
    }

    /// The graph over `[1, N]`, when one is stored.
    pub fn root(&self) -> Option<&GraphIndex> {
        match self {
            StoredIndex::Half(h) => h.root(),
            StoredIndex::Tree(t) => t.root(),
        }
    }

    pub fn graphs(&self) -> Vec<(RankRange, &GraphIndex)> {
        match self {
            StoredIndex::Half(h) => h.snapshots().iter().map(|s| (s.range, &s.graph)).collect(),
            StoredIndex::Tree(t) => t.nodes().iter().map(|(r, g)| (*r, g)).collect(),
        }
    }

    pub fn total_stored_nodes(&self) -> usize {
        match self {
            StoredIndex::Half(h) => h.total_stored_nodes(),
            StoredIndex::Tree(t) => t.count_stored_nodes(),
        }
    }

    pub fn build_insert_count(&self) -> u64 {
        match self {
            StoredIndex::Half(h) => h.build_insert_count() as u64,
            StoredIndex::Tree(t) => t.build_insert_count(),
        }
    }
}

/// SHA-256 over `n`, `dim` and every component's little-endian bits.
pub fn dataset_hash(dataset: &Dataset) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((dataset.len() as u64).to_le_bytes());
    h.update((dataset.dim() as u64).to_le_bytes());
    for x in dataset.as_flat() {
        h.update(x.to_le_bytes());
    }
    h.finalize().into()
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len_u32(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("count fits in u32"));
    }
}

fn write_graph_params(w: &mut Writer, p: &GraphParams) {
    w.len_u32(p.max_degree);
    w.len_u32(p.ef_construction);
    w.f64(p.level_scale);
    w.u64(p.seed);
}

fn write_graph(w: &mut Writer, range: RankRange, graph: &GraphIndex) {
    w.u32(range.l);
    w.u32(range.r);
    w.len_u32(graph.len());
    w.u32(graph.entry_local().unwrap_or(NO_ENTRY));
    for (rank, links) in graph.node_links() {
        w.u32(rank);
        w.u8((links.len() - 1) as u8);
        for layer in links {
            w.len_u32(layer.len());
            for &v in layer {
                w.u32(v);
            }
        }
    }
}

/// Serializes `index` for `dataset`. Output is byte-deterministic.
pub fn encode_index(index: &StoredIndex, dataset: &Dataset) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(match index {
        StoredIndex::Half(_) => KIND_HALF,
        StoredIndex::Tree(_) => KIND_TREE,
    });
    w.0.extend_from_slice(&dataset_hash(dataset));
    w.u64(dataset.len() as u64);
    w.len_u32(dataset.dim());
    match index {
        StoredIndex::Half(h) => {
            write_graph_params(&mut w, h.graph_params());
            w.len_u32(h.params().base);
            w.u8(match h.params().anchor {
                Anchor::Left => 0,
                Anchor::Right => 1,
            });
        }
        StoredIndex::Tree(t) => {
            write_graph_params(&mut w, t.graph_params());
            w.len_u32(t.params().fanout);
            w.len_u32(t.params().leaf_threshold);
            w.f64(t.params().elastic.c);
            w.u64(t.build_insert_count());
        }
    }
    let graphs = index.graphs();
    w.len_u32(graphs.len());
    for (range, graph) in graphs {
        write_graph(&mut w, range, graph);
    }
    w.0
}

pub fn save_index(index: &StoredIndex, dataset: &Dataset, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let bytes = encode_index(index, dataset);
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Corrupt(format!(
                "unexpected end of file at byte {} (wanted {n} more)",
                self.pos
            )));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
}

fn read_graph_params(r: &mut Reader) -> Result<GraphParams> {
    Ok(GraphParams {
        max_degree: r.usize()?,
        ef_construction: r.usize()?,
        level_scale: r.f64()?,
        seed: r.u64()?,
    })
}

fn read_graph(r: &mut Reader, params: GraphParams, n: usize) -> Result<(RankRange, GraphIndex)> {
    let l = r.u32()?;
    let rr = r.u32()?;
    let range = RankRange::try_new(l, rr, n).map_err(|e| Error::Corrupt(e.to_string()))?;
    let count = r.usize()?;
    if count > range.len() {
        return Err(Error::Corrupt(format!(
            "graph for {range} claims {count} nodes"
        )));
    }
    let entry = match r.u32()? {
        NO_ENTRY => None,
        e => Some(e),
    };
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = r.u32()?;
        let level = r.u8()? as usize;
        let mut links = Vec::with_capacity(level + 1);
        for layer in 0..=level {
            let degree = r.usize()?;
            if degree > params.cap(layer) {
                return Err(Error::Corrupt(format!(
                    "rank {rank} has degree {degree} on layer {layer}"
                )));
            }
            let mut ids = Vec::with_capacity(degree);
            for _ in 0..degree {
                ids.push(r.u32()?);
            }
            links.push(ids);
        }
        nodes.push((rank, links));
    }
    let graph =
        GraphIndex::from_parts(params, nodes, entry).map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok((range, graph))
}

/// Parses bytes produced by [`encode_index`], checking them against
/// `dataset`.
pub fn decode_index(bytes: &[u8], dataset: &Dataset) -> Result<StoredIndex> {
    let mut r = Reader { bytes, pos: 0 };
    if r.array::<4>()? != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let kind = r.u8()?;
    let hash: [u8; 32] = r.array()?;
    let n = r.u64()? as usize;
    let dim = r.usize()?;
    if hash != dataset_hash(dataset) || n != dataset.len() || dim != dataset.dim() {
        return Err(Error::HashMismatch);
    }
    let graph_params = read_graph_params(&mut r)?;
    let corrupt = |e: hbi_core::Error| Error::Corrupt(e.to_string());
    let index = match kind {
        KIND_HALF => {
            let base = r.usize()?;
            let anchor = match r.u8()? {
                0 => Anchor::Left,
                1 => Anchor::Right,
                a => return Err(Error::Corrupt(format!("unknown anchor {a}"))),
            };
            let count = r.usize()?;
            let mut snapshots = Vec::new();
            for _ in 0..count {
                let (range, graph) = read_graph(&mut r, graph_params, n)?;
                snapshots.push(RangedIndex { range, graph });
            }
            let params = HalfIndexParams { base, anchor };
            StoredIndex::Half(
                HalfIndex::from_parts(params, graph_params, n, snapshots).map_err(corrupt)?,
            )
        }
        KIND_TREE => {
            let fanout = r.usize()?;
            let leaf_threshold = r.usize()?;
            let c = r.f64()?;
            let inserts = r.u64()?;
            let count = r.usize()?;
            let mut nodes = BTreeMap::new();
            for _ in 0..count {
                let (range, graph) = read_graph(&mut r, graph_params, n)?;
                if nodes.insert(range, graph).is_some() {
                    return Err(Error::Corrupt(format!("range {range} stored twice")));
                }
            }
            let params = TreeParams {
                fanout,
                leaf_threshold,
                elastic: ElasticPolicy { c },
            };
            StoredIndex::Tree(
                TreeIndex::from_parts(params, graph_params, n, nodes, inserts).map_err(corrupt)?,
            )
        }
        other => return Err(Error::Corrupt(format!("unknown index kind {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(index)
}

pub fn load_index(path: impl AsRef<Path>, dataset: &Dataset) -> Result<StoredIndex> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_index(&bytes, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synthesize_dataset;

    fn small() -> (Dataset, GraphParams) {
        let ds = synthesize_dataset(300, 4, 3, 9).unwrap().dataset;
        (ds, GraphParams::new(6, 24, 2))
    }

    #[test]
    fn half_roundtrip_is_byte_stable() {
        let (ds, gp) = small();
        let idx = StoredIndex::Half(HalfIndex::build(&ds, HalfIndexParams::default(), gp).unwrap());
        let bytes = encode_index(&idx, &ds);
        let back = decode_index(&bytes, &ds).unwrap();
        assert_eq!(back, idx);
        assert_eq!(encode_index(&back, &ds), bytes);
    }

    #[test]
    fn empty_tree_is_header_only() {
        let (ds, gp) = small();
        let idx = StoredIndex::Tree(TreeIndex::build(&ds, TreeParams::new(2, 1000), gp).unwrap());
        let bytes = encode_index(&idx, &ds);
        let header = 4 + 4 + 1 + 32 + 8 + 4 + (4 + 4 + 8 + 8) + (4 + 4 + 8 + 8) + 4;
        assert_eq!(bytes.len(), header);
        match decode_index(&bytes, &ds).unwrap() {
            StoredIndex::Tree(t) => assert!(t.nodes().is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        let (ds, gp) = small();
        let idx = StoredIndex::Tree(TreeIndex::build(&ds, TreeParams::new(2, 64), gp).unwrap());
        let bytes = encode_index(&idx, &ds);

        let other = synthesize_dataset(300, 4, 3, 10).unwrap().dataset;
        assert!(matches!(
            decode_index(&bytes, &other),
            Err(Error::HashMismatch)
        ));

        assert!(matches!(
            decode_index(&bytes[..bytes.len() - 3], &ds),
            Err(Error::Corrupt(_))
        ));

        let mut bumped = bytes.clone();
        bumped[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            decode_index(&bumped, &ds),
            Err(Error::VersionMismatch { found: 7, .. })
        ));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode_index(&magic, &ds), Err(Error::Corrupt(_))));

        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(
            decode_index(&trailing, &ds),
            Err(Error::Corrupt(_))
        ));
    }
}
