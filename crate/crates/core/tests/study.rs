use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use elastoct_core::study::{
    build_study, item_seed, BuildOptions, CategorySpec, GroundTruth, StudyError, StudyManifest, IMAGE_DIR,
    MANIFEST_FILE,
};
use elastoct_core::{deform, load_image, save_image, BorderPolicy, PixelGrid};

fn write_pool(dir: &Path, count: usize) -> Vec<PathBuf> {
    (0..count)
        .map(|i| {
            let img = PixelGrid::from_fn(24, 16, |x, y| ((x * 11 + y * 7 + i * 13) % 256) as u8).unwrap();
            let path = dir.join(format!("scan_{i:03}.png"));
            save_image(&img, &path).unwrap();
            path
        })
        .collect()
}

fn small_design() -> Vec<CategorySpec> {
    vec![
        CategorySpec::new("LOW", 1.0, 6.0, 5).unwrap(),
        CategorySpec::new("HIGH", 13.0, 18.0, 4).unwrap(),
        CategorySpec::new("CTRL", 19.0, 24.0, 2).unwrap(),
    ]
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    out.insert(MANIFEST_FILE.to_string(), fs::read(dir.join(MANIFEST_FILE)).unwrap());
    for entry in fs::read_dir(dir.join(IMAGE_DIR)).unwrap() {
        let entry = entry.unwrap();
        out.insert(entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path()).unwrap());
    }
    out
}

#[test]
fn counts_sigmas_and_files() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 11);
    let out = tmp.path().join("study");
    let m = build_study(&pool, &small_design(), 9, &out, &BuildOptions::default()).unwrap();

    assert_eq!(m.item_count(), 22);
    for spec in &m.categories {
        let of = |gt| m.items.iter().filter(|it| it.category == spec.name && it.ground_truth == gt).count();
        assert_eq!(of(GroundTruth::Original), spec.pair_count);
        assert_eq!(of(GroundTruth::Modified), spec.pair_count);
    }
    for it in &m.items {
        let spec = m.category(&it.category).unwrap();
        match it.ground_truth {
            GroundTruth::Original => assert!(it.sigma_used.is_none()),
            GroundTruth::Modified => assert!(spec.contains(it.sigma_used.unwrap())),
        }
        assert!(m.image_path(&out, it).is_file());
    }
    let mut order = m.display_order.clone();
    order.sort_unstable();
    assert_eq!(order, (0..22).collect::<Vec<_>>());
    assert_eq!(StudyManifest::load_dir(&out).unwrap(), m);
}

#[test]
fn byte_identical_rebuild() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 11);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    build_study(&pool, &small_design(), 2024, &a, &BuildOptions::default()).unwrap();
    build_study(&pool, &small_design(), 2024, &b, &BuildOptions::default()).unwrap();
    assert_eq!(dir_bytes(&a), dir_bytes(&b));

    let c = tmp.path().join("c");
    build_study(&pool, &small_design(), 2025, &c, &BuildOptions::default()).unwrap();
    assert_ne!(dir_bytes(&a), dir_bytes(&c));
}

#[test]
fn modified_images_are_the_seeded_deformation_of_their_source() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 11);
    let out = tmp.path().join("study");
    let m = build_study(&pool, &small_design(), 77, &out, &BuildOptions::default()).unwrap();
    for (index, it) in m.items.iter().enumerate() {
        let source = load_image(Path::new(&it.source_ref)).unwrap();
        let stored = load_image(&m.image_path(&out, it)).unwrap();
        match it.sigma_used {
            None => assert_eq!(stored, source),
            Some(sigma) => {
                let expected = deform(&source, sigma, item_seed(77, index), (3, 3), BorderPolicy::Clamp).unwrap();
                assert_eq!(stored, expected.image);
            }
        }
    }
}

#[test]
fn ids_are_opaque() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 11);
    let out = tmp.path().join("study");
    let m = build_study(&pool, &small_design(), 3, &out, &BuildOptions::default()).unwrap();
    let ids: HashSet<&str> = m.items.iter().map(|it| it.item_id.as_str()).collect();
    assert_eq!(ids.len(), m.item_count());
    for it in &m.items {
        assert_eq!(it.item_id.len(), 32);
        assert!(it.item_id.bytes().all(|b| b.is_ascii_hexdigit()));
        assert!(!it.item_id.contains(&it.category.to_ascii_lowercase()));
    }
    let names: HashSet<String> = fs::read_dir(out.join(IMAGE_DIR))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let expected: HashSet<String> = m.items.iter().map(|it| format!("{}.png", it.item_id)).collect();
    assert_eq!(names, expected);
}

#[test]
fn reveal_unblinds_only_known_items() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 11);
    let m = build_study(&pool, &small_design(), 5, &tmp.path().join("s"), &BuildOptions::default()).unwrap();
    for it in &m.items {
        assert_eq!(m.reveal(&it.item_id).unwrap(), (it.ground_truth, it.sigma_used));
    }
    assert!(matches!(m.reveal("0123"), Err(StudyError::UnknownItem(_))));
}

#[test]
fn insufficient_pool_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path(), 10);
    let out = tmp.path().join("study");
    let err = build_study(&pool, &small_design(), 1, &out, &BuildOptions::default()).unwrap_err();
    assert!(matches!(err, StudyError::InsufficientPool { needed: 11, available: 10 }));
    assert!(!out.exists());
}
