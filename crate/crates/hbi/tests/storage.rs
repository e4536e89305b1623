//! Index files on disk: round trips, determinism and dataset binding.

use hbi::storage::{load_index, save_index, StoredIndex};
use hbi::synth::{synthesize_dataset, synthesize_queries};
use hbi::workload::{gen_queries, RangeMode, WorkloadSpec};
use hbi::Error;
use hbi_core::{GraphParams, HalfIndex, HalfIndexParams, SearchParams, TreeIndex, TreeParams};

#[test]
fn saved_files_reload_to_equal_indexes_with_identical_answers() {
    let s = synthesize_dataset(900, 5, 3, 4).unwrap();
    let ds = &s.dataset;
    let gp = GraphParams::new(8, 40, 4);
    let dir = tempfile::tempdir().unwrap();
    let indexes = [
        StoredIndex::Half(HalfIndex::build(ds, HalfIndexParams::default(), gp).unwrap()),
        StoredIndex::Tree(TreeIndex::build(ds, TreeParams::new(2, 16), gp).unwrap()),
    ];
    let vectors = synthesize_queries(&s.mixture, 25, 8);
    for (i, index) in indexes.iter().enumerate() {
        let a = dir.path().join(format!("{i}.a"));
        let b = dir.path().join(format!("{i}.b"));
        let size = save_index(index, ds, &a).unwrap();
        let loaded = load_index(&a, ds).unwrap();
        assert_eq!(&loaded, index);
        save_index(&loaded, ds, &b).unwrap();
        let bytes = std::fs::read(&a).unwrap();
        assert_eq!(bytes.len(), size);
        assert_eq!(bytes, std::fs::read(&b).unwrap());

        let mode = if i == 0 {
            RangeMode::HalfBounded
        } else {
            RangeMode::Mix
        };
        let spec = WorkloadSpec {
            mode,
            count: 50,
            k: 8,
            seed: 2,
        };
        for q in gen_queries(&spec, ds.len(), &vectors).unwrap() {
            let params = SearchParams::with_beam(24);
            assert_eq!(
                index.as_searchable().search(ds, &q, &params).unwrap(),
                loaded.as_searchable().search(ds, &q, &params).unwrap()
            );
        }
    }
}

#[test]
fn index_is_bound_to_its_dataset() {
    let ds = synthesize_dataset(200, 4, 2, 1).unwrap().dataset;
    let other = synthesize_dataset(200, 4, 2, 2).unwrap().dataset;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.hbi");
    let index = StoredIndex::Half(
        HalfIndex::build(&ds, HalfIndexParams::default(), GraphParams::new(6, 16, 1)).unwrap(),
    );
    save_index(&index, &ds, &path).unwrap();
    assert!(matches!(
        load_index(&path, &other),
        Err(Error::HashMismatch)
    ));
    assert!(matches!(
        load_index(dir.path().join("absent"), &ds),
        Err(Error::Io { .. })
    ));
}
