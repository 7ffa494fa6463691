use std::fs;
use std::path::Path;

use rfskit::ingest::{index_to_string, parse_coco, parse_yolo, read_index};
use rfskit::{build_table, compute_frequencies, IngestError, RebalanceConfig};

fn write(dir: &Path, name: &str, text: &str) {
    let path = dir.join(name);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn names() -> Vec<String> {
    vec!["fire".into(), "smoke".into()]
}

#[test]
fn yolo_three_file_example() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", "0 0.5 0.5 0.1 0.1\n");
    write(dir.path(), "b.txt", "0 0.2 0.2 0.1 0.1\n1 0.7 0.7 0.2 0.2\n");
    write(dir.path(), "c.txt", "1 0.1 0.1 0.1 0.1\n1 0.9 0.9 0.1 0.1\n");
    let index = parse_yolo(dir.path(), &names()).unwrap();
    let f = compute_frequencies(&index).unwrap();
    // images: {0}, {0,1}, {1,1}; instances: 2 of class 0, 3 of class 1
    let c0 = f.get(0).unwrap();
    let c1 = f.get(1).unwrap();
    assert_eq!((f.total_images, f.total_instances), (3, 5));
    assert_eq!((c0.image_count, c0.instance_count), (2, 2));
    assert_eq!((c1.image_count, c1.instance_count), (2, 3));
    assert_eq!(c0.image_fraction, 2.0 / 3.0);
    assert_eq!(c1.image_fraction, 2.0 / 3.0);
    assert_eq!(c0.instance_fraction, 2.0 / 5.0);
    assert_eq!(c1.instance_fraction, 3.0 / 5.0);
}

#[test]
fn coco_and_yolo_agree() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write(&labels, "img_a.txt", "0 0.5 0.5 0.1 0.1\n0 0.3 0.3 0.1 0.1\n");
    write(&labels, "img_b.txt", "1 0.5 0.5 0.1 0.1\n");
    write(&labels, "sub/img_c.txt", "0 0.5 0.5 0.1 0.1\n1 0.5 0.5 0.1 0.1\n1 0.1 0.1 0.1 0.1\n");
    write(&labels, "img_d.txt", "");

    let coco = r#"{
        "images": [
            {"id": "img_a", "file_name": "img_a.jpg"},
            {"id": "img_b", "file_name": "img_b.jpg"},
            {"id": "img_d", "file_name": "img_d.jpg"},
            {"id": "sub/img_c", "file_name": "sub/img_c.jpg"}
        ],
        "categories": [{"id": 0, "name": "fire"}, {"id": 1, "name": "smoke"}],
        "annotations": [
            {"id": 1, "image_id": "img_a", "category_id": 0, "bbox": [0, 0, 1, 1]},
            {"id": 2, "image_id": "img_a", "category_id": 0},
            {"id": 3, "image_id": "img_b", "category_id": 1},
            {"id": 4, "image_id": "sub/img_c", "category_id": 0},
            {"id": 5, "image_id": "sub/img_c", "category_id": 1},
            {"id": 6, "image_id": "sub/img_c", "category_id": 1}
        ]
    }"#;
    let from_coco = parse_coco(coco, "labels", "inline").unwrap();
    let from_yolo = parse_yolo(&labels, &names()).unwrap();

    let key = |i: &rfskit::DatasetIndex| {
        let mut v: Vec<_> = i
            .images()
            .iter()
            .map(|r| (r.image_id.to_string(), r.instance_counts.clone()))
            .collect();
        v.sort();
        v
    };
    assert_eq!(key(&from_coco), key(&from_yolo));

    let fc = compute_frequencies(&from_coco).unwrap();
    let fy = compute_frequencies(&from_yolo).unwrap();
    assert_eq!(fc, fy);

    let config = RebalanceConfig::eirfs(0.5, 2.0);
    let tc = build_table(&fc, &from_coco, &config).unwrap();
    let ty = build_table(&fy, &from_yolo, &config).unwrap();
    assert_eq!(tc.classes, ty.classes);
}

#[test]
fn index_round_trip_preserves_everything() {
    let coco = r#"{"images": [{"id": 7, "file_name": "x.jpg"}, {"id": 8, "file_name": "y.jpg"}],
        "categories": [{"id": 3, "name": "lake"}],
        "annotations": [{"image_id": 7, "category_id": 3}, {"image_id": 7, "category_id": 3}]}"#;
    let index = parse_coco(coco, "tiny", "inline").unwrap();
    let text = index_to_string(&index);
    let back = read_index(text.as_bytes(), "tiny.jsonl").unwrap();
    assert_eq!(back, index);
    assert_eq!(index_to_string(&back), text);
}

fn yolo_error(files: &[(&str, &str)]) -> IngestError {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        write(dir.path(), name, text);
    }
    parse_yolo(dir.path(), &names()).unwrap_err()
}

#[test]
fn yolo_rejects_bad_lines_with_location() {
    match yolo_error(&[("ok.txt", "0 0.5 0.5 0.1 0.1\n"), ("bad.txt", "0 0.5 0.5 0.1 0.1\n1 0.5 0.5\n")]) {
        IngestError::Parse { source_name, line, .. } => {
            assert_eq!(source_name, "bad.txt");
            assert_eq!(line, 2);
        }
        e => panic!("unexpected {e}"),
    }
    match yolo_error(&[("a.txt", "0 0.5 nan 0.1 0.1\n")]) {
        IngestError::Parse { column, .. } => assert_eq!(column, 3),
        e => panic!("unexpected {e}"),
    }
    match yolo_error(&[("a.txt", "x 0.5 0.5 0.1 0.1\n")]) {
        IngestError::Parse { column, .. } => assert_eq!(column, 1),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn yolo_rejects_out_of_range_class() {
    match yolo_error(&[("a.txt", "2 0.5 0.5 0.1 0.1\n")]) {
        IngestError::Validation { offending, .. } => assert_eq!(offending, vec!["a.txt:1: class 2"]),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn coco_rejects_malformed_and_dangling() {
    assert!(matches!(
        parse_coco("{\"images\": [", "x", "x.json"),
        Err(IngestError::Parse { .. })
    ));
    let dangling = r#"{"images": [{"id": 1, "file_name": "a"}],
        "categories": [{"id": 0, "name": "fire"}],
        "annotations": [{"image_id": 2, "category_id": 0}, {"image_id": 1, "category_id": 9}]}"#;
    match parse_coco(dangling, "x", "x.json").unwrap_err() {
        IngestError::Validation { offending, .. } => {
            assert_eq!(offending, vec!["category 9".to_string(), "image 2".to_string()]);
        }
        e => panic!("unexpected {e}"),
    }
    let dup = r#"{"images": [{"id": 1, "file_name": "a"}, {"id": 1, "file_name": "b"}],
        "categories": [], "annotations": []}"#;
    assert!(matches!(
        parse_coco(dup, "x", "x.json"),
        Err(IngestError::Validation { .. })
    ));
}
