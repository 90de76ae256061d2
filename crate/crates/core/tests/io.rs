use std::fs;

use embedlens::dataset::{self, ClassLabel, EmbeddingSet, Modality, Split};
use embedlens::Error;
use proptest::prelude::*;

fn small_set() -> EmbeddingSet {
    EmbeddingSet::from_rows(
        "tiny",
        Modality::Prompt,
        Split::Eval,
        vec![
            (ClassLabel { id: 7, name: "jay".into() }, vec![vec![1.0, 0.5, -0.25], vec![0.0, 1.0, 2.0]]),
            (ClassLabel { id: 2, name: "crane".into() }, vec![vec![3.0, -1.0, 0.125]]),
        ],
    )
    .unwrap()
}

#[test]
fn round_trip_preserves_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    let set = small_set();
    dataset::save_set(&set, &path).unwrap();
    assert!(dir.path().join("tiny.f32").exists());
    let back = dataset::load_set(&path).unwrap();
    assert_eq!(back.name(), "tiny");
    assert_eq!(back.modality(), Modality::Prompt);
    assert_eq!(back.split(), Split::Eval);
    assert_eq!(back.labels(), set.labels());
    assert_eq!(back.rows().collect::<Vec<_>>(), set.rows().collect::<Vec<_>>());
}

#[test]
fn truncated_blob_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    dataset::save_set(&small_set(), &path).unwrap();
    let blob = dir.path().join("tiny.f32");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 4]).unwrap();
    match dataset::load_set(&path) {
        Err(Error::BlobSizeMismatch { expected, actual, .. }) => assert_eq!(expected, actual + 4),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_and_malformed_manifests() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(dataset::load_set(dir.path().join("nope.json")), Err(Error::Io { .. })));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert!(matches!(dataset::load_set(&bad), Err(Error::ManifestParse { .. })));
}

#[test]
fn non_finite_blob_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.json");
    dataset::save_set(&small_set(), &path).unwrap();
    let blob = dir.path().join("tiny.f32");
    let mut bytes = fs::read(&blob).unwrap();
    bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(&blob, bytes).unwrap();
    assert!(matches!(
        dataset::load_set(&path),
        Err(Error::NonFiniteValue { class_id: 7, row: 1 })
    ));
}

#[test]
fn split_partitions_every_class() {
    let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64, 1.0]).collect();
    let set = EmbeddingSet::from_rows(
        "all",
        Modality::Image,
        Split::Train,
        vec![(ClassLabel { id: 0, name: "a".into() }, rows)],
    )
    .unwrap();
    let (train, eval) = dataset::split_set(&set, 0.2, 3).unwrap();
    assert_eq!((train.len(), eval.len()), (20, 5));
    let mut seen: Vec<f64> = train.rows().chain(eval.rows()).map(|r| r[0]).collect();
    seen.sort_by(f64::total_cmp);
    assert_eq!(seen, (0..25).map(f64::from).collect::<Vec<_>>());
    assert_eq!(dataset::split_set(&set, 0.2, 3).unwrap().1.rows().collect::<Vec<_>>(), eval.rows().collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn f32_representable_sets_round_trip_exactly(
        data in prop::collection::vec(prop::collection::vec(-1e3f32..1e3, 4), 1..20),
    ) {
        let rows: Vec<Vec<f64>> = data.iter().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect();
        let set = EmbeddingSet::from_rows(
            "p",
            Modality::Image,
            Split::Train,
            vec![(ClassLabel { id: 1, name: "x".into() }, rows)],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        dataset::save_set(&set, &path).unwrap();
        let back = dataset::load_set(&path).unwrap();
        prop_assert_eq!(back.rows().collect::<Vec<_>>(), set.rows().collect::<Vec<_>>());
    }
}
