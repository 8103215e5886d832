mod common;

use std::collections::BTreeSet;

use common::{demo, fatpad, ok, read_obj, s};
use fatpad_core::bundle::load_bundle;
use fatpad_core::pose::{PoseEdit, PoseFile};

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn build_writes_every_artifact() {
    let d = demo();
    let names: Vec<String> = dir_bytes(&d.bundle()).into_iter().map(|f| f.0).collect();
    assert_eq!(
        names,
        [
            "binding_lower.bin",
            "binding_upper.bin",
            "bundle.json",
            "cage_lower.json",
            "cage_upper.json",
            "map.json",
            "mesh.obj",
            "weights.json"
        ]
    );
    assert!(load_bundle(&d.bundle()).is_ok());
}

#[test]
fn build_reports_stage_timings_and_is_deterministic() {
    let d = demo();
    let out = tempfile::tempdir().unwrap();
    let stdout = ok(&["build", "--mesh", s(&d.mesh()), "--map", s(&d.map()), "--out-dir", s(out.path())]);
    for stage in ["mesh-core", "fatpad-map", "geodesics+attenuation", "cage-builder", "green-coords", "total"] {
        assert!(stdout.contains(stage), "{stdout}");
    }
    assert_eq!(dir_bytes(out.path()), dir_bytes(&d.bundle()));
}

#[test]
fn dijkstra_build_runs() {
    let d = demo();
    let out = tempfile::tempdir().unwrap();
    ok(&[
        "build",
        "--mesh",
        s(&d.mesh()),
        "--map",
        s(&d.map()),
        "--out-dir",
        s(out.path()),
        "--geodesic",
        "dijkstra",
        "--alpha-base",
        "0.06",
    ]);
    assert!(load_bundle(out.path()).is_ok());
}

#[test]
fn stage_errors_exit_nonzero() {
    let d = demo();
    let tmp = tempfile::tempdir().unwrap();
    // a map for another mesh
    ok(&["demo", "--out-dir", s(tmp.path()), "--subdivisions", "5"]);
    let out = fatpad(&[
        "build",
        "--mesh",
        s(&d.mesh()),
        "--map",
        s(&tmp.path().join("demo_map.json")),
        "--out-dir",
        s(&tmp.path().join("b")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage fatpad-map"));

    let bad = tmp.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nf 1 2 3\n").unwrap();
    let out = fatpad(&["build", "--mesh", s(&bad), "--map", s(&d.map()), "--out-dir", s(&tmp.path().join("c"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage mesh-core"));

    let out = fatpad(&["build", "--mesh", s(&d.mesh()), "--map", s(&d.map()), "--out-dir", s(&tmp.path().join("d")), "--alpha-base", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage cage-builder"));

    assert!(!fatpad(&["demo", "--out-dir", s(tmp.path()), "--subdivisions", "2"]).status.success());
}

fn pose(file: &PoseFile) -> (tempfile::TempDir, std::path::PathBuf) {
    let d = demo();
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("pose.json");
    std::fs::write(&script, file.to_json()).unwrap();
    let out = tmp.path().join("posed.obj");
    ok(&["pose", "--bundle", s(&d.bundle()), "--script", s(&script), "--out", s(&out)]);
    (tmp, out)
}

#[test]
fn empty_script_gives_the_input_mesh() {
    let rig = load_bundle(&demo().bundle()).unwrap();
    let (_tmp, out) = pose(&PoseFile::new(&rig));
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(demo().mesh()).unwrap());
}

#[test]
fn single_handle_script_moves_one_pad() {
    let rig = load_bundle(&demo().bundle()).unwrap();
    let mut file = PoseFile::new(&rig);
    file.edits.push(PoseEdit {
        handle: "cheek_r".into(),
        displacement: [-0.02, 0.01, 0.02],
        commit: true,
    });
    let (_tmp, out) = pose(&file);
    let posed = read_obj(&out);
    let pad: BTreeSet<usize> = rig.map.pad("cheek_r").unwrap().vertices.iter().copied().collect();
    let mut moved = 0;
    for (v, (a, b)) in posed.positions().iter().zip(rig.mesh.positions()).enumerate() {
        if a != b {
            assert!(pad.contains(&v), "vertex {v} outside the pad moved");
            moved += 1;
        }
    }
    assert!(moved > 0);
}

#[test]
fn lip_corner_pull_heat_stays_on_the_corners() {
    let d = demo();
    let rig = load_bundle(&d.bundle()).unwrap();
    let mut file = PoseFile::new(&rig);
    for (h, x) in [("mouth_corner_l", 0.03), ("mouth_corner_r", -0.03)] {
        file.edits.push(PoseEdit {
            handle: h.into(),
            displacement: [x, 0.03, -0.01],
            commit: false,
        });
    }
    let (tmp, out) = pose(&file);
    let heat = tmp.path().join("heat.txt");
    let stdout = ok(&["diff", "--a", s(&out), "--b", s(&d.mesh()), "--heat", s(&heat)]);
    assert!(stdout.trim().parse::<f64>().unwrap() > 0.0);
    let values: Vec<f64> = std::fs::read_to_string(&heat).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), rig.mesh.vertex_count());
    let support: BTreeSet<usize> = ["mouth_corner_l", "mouth_corner_r"]
        .iter()
        .flat_map(|h| rig.weights.matrix(h).unwrap().entries.iter().filter(|e| e.1 > 0.0).map(|e| e.0))
        .collect();
    let hot: BTreeSet<usize> = values.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(v, _)| v).collect();
    assert!(!hot.is_empty());
    assert!(hot.is_subset(&support), "{:?}", hot.difference(&support).collect::<Vec<_>>());
}

#[test]
fn pose_rejects_a_foreign_script() {
    let rig = load_bundle(&demo().bundle()).unwrap();
    let mut file = PoseFile::new(&rig);
    file.fingerprint.mesh = "f".repeat(64);
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("pose.json");
    std::fs::write(&script, file.to_json()).unwrap();
    let out = fatpad(&["pose", "--bundle", s(&demo().bundle()), "--script", s(&script), "--out", s(&tmp.path().join("o.obj"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
}

#[test]
fn pose_is_deterministic() {
    let rig = load_bundle(&demo().bundle()).unwrap();
    let mut file = PoseFile::new(&rig);
    file.edits.push(PoseEdit {
        handle: "forehead".into(),
        displacement: [0.0, 0.02, 0.01],
        commit: true,
    });
    file.edits.push(PoseEdit {
        handle: "jaw_l".into(),
        displacement: [0.01, -0.02, 0.0],
        commit: true,
    });
    let (_a, pa) = pose(&file);
    let (_b, pb) = pose(&file);
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
}

#[test]
fn diff_of_identical_and_translated_meshes() {
    let d = demo();
    let same = ok(&["diff", "--a", s(&d.mesh()), "--b", s(&d.mesh())]);
    assert_eq!(same.trim().parse::<f64>().unwrap(), 0.0);

    let m = read_obj(&d.mesh());
    let shift = fatpad_core::geometry::vec3(0.01, 0.02, -0.02);
    let moved = m.with_positions(m.positions().iter().map(|p| p + shift).collect()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("moved.obj");
    std::fs::write(&p, fatpad_core::mesh::save_obj(&moved)).unwrap();
    let v: f64 = ok(&["diff", "--a", s(&d.mesh()), "--b", s(&p)]).trim().parse().unwrap();
    assert!(v > 0.0 && v <= shift.norm() + 1e-12, "{v}");

    assert!(!fatpad(&["diff", "--a", s(&d.mesh()), "--b", "/nonexistent.obj"]).status.success());
}

#[test]
fn shipped_assets_build_and_pose() {
    let assets = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    let tmp = tempfile::tempdir().unwrap();
    // the shipped demo files are what `fatpad demo` writes
    ok(&["demo", "--out-dir", s(tmp.path())]);
    for f in ["demo_head.obj", "demo_map.json"] {
        assert_eq!(std::fs::read(tmp.path().join(f)).unwrap(), std::fs::read(assets.join(f)).unwrap(), "{f}");
    }
    let bundle = tmp.path().join("bundle");
    ok(&["build", "--mesh", s(&assets.join("demo_head.obj")), "--map", s(&assets.join("demo_map.json")), "--out-dir", s(&bundle)]);
    let out = tmp.path().join("smile.obj");
    ok(&["pose", "--bundle", s(&bundle), "--script", s(&assets.join("smile.json")), "--out", s(&out)]);
    let (rest, posed) = (read_obj(&assets.join("demo_head.obj")), read_obj(&out));
    let rig = load_bundle(&bundle).unwrap();
    let pads: BTreeSet<usize> = ["mouth_corner_l", "mouth_corner_r", "cheek_l", "cheek_r", "brow_l", "brow_r"]
        .iter()
        .flat_map(|p| rig.map.pad(p).unwrap().vertices.iter().copied())
        .collect();
    let moved: Vec<usize> = (0..rest.vertex_count()).filter(|&v| rest.position(v) != posed.position(v)).collect();
    assert!(moved.len() > 100, "{}", moved.len());
    assert!(moved.iter().all(|v| pads.contains(v)));
}
