use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmbg::diffrender::TrainingView;
use nmbg::geometry::{Camera, Intrinsics};
use nmbg::io::{write_png, write_scene};
use nmbg::synthetic::subdivided_cube;
use nmbg::{Image, Vec3};

fn nmbg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmbg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Cameras at (±1,0,0), (0,±1,0) looking at the origin, with a small cube
/// in the middle and 16×16 gray images.
fn symmetric_fixture(dir: &Path) -> PathBuf {
    let k = Intrinsics {
        fx: 16.0,
        fy: 16.0,
        cx: 8.0,
        cy: 8.0,
        width: 16,
        height: 16,
    };
    let views = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
        .into_iter()
        .map(|(x, y)| TrainingView {
            camera: Camera::looking_at(k, Vec3::new(x, y, 0.0), Vec3::zero(), Vec3::new(0.0, 0.0, 1.0))
                .unwrap(),
            image: Image::filled(16, 16, 3, 0.4),
        })
        .collect::<Vec<_>>();
    let mut mesh = subdivided_cube(Vec3::zero(), 0.3, 2);
    nmbg::synthetic::merge_meshes(&mut mesh, &subdivided_cube(Vec3::zero(), 5.0, 1));
    write_scene(dir, &mesh, &views, None).unwrap()
}

#[test]
fn split_on_symmetric_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let scene = symmetric_fixture(dir.path());
    let o = nmbg(&["split", "--scene", scene.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("center 0.000000 0.000000 0.000000\n"), "{text}");
    assert!(text.contains("radius 1.100000\n"), "{text}");
    assert!(text.contains("fg_faces 48\n"), "{text}");
    assert!(text.contains("bg_faces 12\n"), "{text}");
}

#[test]
fn metrics_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.png");
    let img = Image::from_vec(12, 12, 3, (0..432).map(|i| (i % 17) as f64 / 16.0).collect()).unwrap();
    write_png(&p, &img).unwrap();
    let o = nmbg(&["metrics", "--pred", p.to_str().unwrap(), "--gt", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "PSNR inf\nSSIM 1.000000\n");
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(nmbg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nmbg(&["fit", "--scene", "x.json"]).status.code(), Some(1));
    assert_eq!(nmbg(&["--help"]).status.code(), Some(0));
    let o = nmbg(&["split", "--scene", "/nonexistent/scene.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.png");
    std::fs::write(&bad, b"nope").unwrap();
    let b = bad.to_str().unwrap();
    assert_eq!(nmbg(&["metrics", "--pred", b, "--gt", b]).status.code(), Some(2));
}

#[test]
fn fit_render_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let scene = symmetric_fixture(dir.path());
    let s = scene.to_str().unwrap();
    let ck = dir.path().join("ck.bin");
    let ck2 = dir.path().join("ck2.bin");
    let trace = dir.path().join("trace.csv");
    for out in [&ck, &ck2] {
        let o = nmbg(&[
            "fit", "--scene", s, "--epochs", "3", "--seed", "5", "--out", out.to_str().unwrap(),
            "--loss-trace", trace.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&ck).unwrap(), std::fs::read(&ck2).unwrap());
    let csv = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2,"));

    let png = dir.path().join("r.png");
    let o = nmbg(&[
        "render", "--scene", s, "--checkpoint", ck.to_str().unwrap(), "--camera-id", "2", "--out",
        png.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = nmbg::io::read_png::<f32>(&png).unwrap();
    assert_eq!((img.width, img.height), (16, 16));
    let o = nmbg(&[
        "render", "--scene", s, "--checkpoint", ck.to_str().unwrap(), "--camera-id", "99", "--out",
        png.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let cams = dir.path().join("cams.json");
    let cams2 = dir.path().join("cams2.json");
    for out in [&cams, &cams2] {
        let o = nmbg(&["sample-cameras", "--scene", s, "--count", "5", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&cams).unwrap();
    assert_eq!(text, std::fs::read_to_string(&cams2).unwrap());
    let poses: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(poses.len(), 5);
    for p in &poses {
        let pos: Vec<f64> = serde_json::from_value(p["position"].clone()).unwrap();
        let r = pos.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((0.66 - 1e-9..=1.1 + 1e-9).contains(&r), "{r}");
    }
}

#[test]
fn synth_writes_a_loadable_scene() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmbg(&["synth", "--out", dir.path().to_str().unwrap(), "--size", "16", "--views", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = stdout(&o).trim().to_string();
    let scene = nmbg::io::Scene::<f32>::load(&manifest).unwrap();
    assert_eq!(scene.views.len(), 3);
}
