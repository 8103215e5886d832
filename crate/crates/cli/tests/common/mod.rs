#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use fatpad_core::mesh::{load_obj, TriMesh};

pub fn fatpad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fatpad"))
        .args(args)
        .env_remove("FATPAD_CACHE_DIR")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = fatpad(args);
    assert!(out.status.success(), "fatpad {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub struct Demo {
    pub dir: tempfile::TempDir,
}

impl Demo {
    pub fn mesh(&self) -> PathBuf {
        self.dir.path().join("demo_head.obj")
    }
    pub fn map(&self) -> PathBuf {
        self.dir.path().join("demo_map.json")
    }
    pub fn bundle(&self) -> PathBuf {
        self.dir.path().join("bundle")
    }
}

/// Demo head at subdivision 4 and its bundle, built once per test binary.
pub fn demo() -> &'static Demo {
    static DEMO: OnceLock<Demo> = OnceLock::new();
    DEMO.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        ok(&["demo", "--out-dir", s(dir.path()), "--subdivisions", "4"]);
        let d = Demo { dir };
        ok(&["build", "--mesh", s(&d.mesh()), "--map", s(&d.map()), "--out-dir", s(&d.bundle())]);
        d
    })
}

pub fn read_obj(p: &Path) -> TriMesh {
    load_obj(&std::fs::read(p).unwrap()).unwrap()
}
