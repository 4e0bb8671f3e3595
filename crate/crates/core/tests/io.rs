use gss3d::io::{
    load_boxes, load_ply, load_score_matrix, save_boxes, save_ply, save_score_matrix, ColorEncoding, PlyEncoding,
};
use gss3d::synth::{generate, SynthSpec};
use gss3d::{Rng, ScoreMatrix};

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = generate(&SynthSpec {
        points_per_face: 50,
        ..Default::default()
    })
    .unwrap();

    for (name, enc) in [
        ("a.ply", PlyEncoding::Ascii),
        ("b.ply", PlyEncoding::BinaryLittleEndian),
    ] {
        let path = dir.path().join(name);
        save_ply(&scene.cloud, &path, enc, ColorEncoding::Float).unwrap();
        let back = load_ply(&path).unwrap();
        assert_eq!(back.len(), scene.cloud.len());
        for (a, b) in back.positions().iter().zip(scene.cloud.positions()) {
            assert!((a - b).norm() < 1e-6, "{name}");
        }
    }

    let boxes = dir.path().join("boxes.json");
    save_boxes(&scene.gt_boxes, &boxes).unwrap();
    assert_eq!(load_boxes(&boxes).unwrap(), scene.gt_boxes);

    let mut rng = Rng::new(0);
    let m = ScoreMatrix::new(7, 3, (0..21).map(|_| rng.normal(0.0, 10.0)).collect()).unwrap();
    let csv = dir.path().join("scores.csv");
    save_score_matrix(&m, &csv).unwrap();
    assert_eq!(load_score_matrix(&csv).unwrap(), m);
}

#[test]
fn missing_files_name_the_path() {
    let err = load_ply("/definitely/not/here.ply").unwrap_err();
    assert_eq!(err.module(), "io");
    assert!(err.to_string().contains("/definitely/not/here.ply"));
}
