//! `fatpad`: offline pipeline, batch posing, mesh comparison and the live
//! posing service.

mod serve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use fatpad_core::attenuation::AttenuationParams;
use fatpad_core::bundle::{build, load_bundle_shared, write_bundle, BuildParams};
use fatpad_core::cage::CageParams;
use fatpad_core::geodesic::{GeodesicCache, GeodesicMethod};
use fatpad_core::mesh::{hausdorff_rms, load_obj, save_obj, vertex_distances_to_surface, SamplingParams};
use fatpad_core::pose::{apply_pose_script, PoseFile};
use fatpad_core::session::replay_log;

#[derive(Parser)]
#[command(name = "fatpad", version, about = "Fat pad cages for facial posing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Geodesic {
    Exact,
    Dijkstra,
}

#[derive(Subcommand)]
enum Command {
    /// Build weights, cages and bindings into a bundle directory.
    Build {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Cage offset as a fraction of the mesh bounding box diagonal.
        #[arg(long, default_value_t = 0.05)]
        alpha_base: f64,
        #[arg(long, value_enum, default_value = "exact")]
        geodesic: Geodesic,
    },
    /// Apply a pose script to a bundle and write the posed mesh.
    Pose {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hausdorff RMS between two meshes.
    Diff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Write the distance of every vertex of `a` to `b`, one per line.
        #[arg(long)]
        heat: Option<PathBuf>,
    },
    /// Serve live posing sessions over WebSocket ("fatpad.v1" on /ws).
    Serve {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Replay a recorded session message log and write the final mesh.
    Replay {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the procedural demo head and its fat pad map.
    Demo {
        #[arg(long)]
        out_dir: PathBuf,
        /// Icosphere subdivision level; 5 gives 10242 vertices.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(4..=7))]
        subdivisions: u8,
    },
}

/// An error that names the pipeline stage it came from.
#[derive(Debug)]
struct StageError {
    stage: &'static str,
    source: anyhow::Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {:#}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

fn stage<T, E: Into<anyhow::Error>>(stage: &'static str, r: Result<T, E>) -> anyhow::Result<T> {
    r.map_err(|e| {
        StageError {
            stage,
            source: e.into(),
        }
        .into()
    })
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn print_timing(name: &str, d: Duration) {
    println!("  {name:<24}{:>10.1} ms", d.as_secs_f64() * 1e3);
}

fn cmd_build(mesh: &Path, map: &Path, out_dir: &Path, alpha_base: f64, geodesic: Geodesic) -> anyhow::Result<()> {
    let start = Instant::now();
    let mesh_bytes = read(mesh)?;
    let t = Instant::now();
    let m = stage("mesh-core", load_obj(&mesh_bytes))?;
    let load_time = t.elapsed();
    let map_bytes = read(map)?;
    let params = BuildParams {
        cage: CageParams {
            alpha_base,
            ..CageParams::default()
        },
        attenuation: AttenuationParams {
            geodesic: match geodesic {
                Geodesic::Exact => GeodesicMethod::Exact,
                Geodesic::Dijkstra => GeodesicMethod::RefinedDijkstra,
            },
            ..AttenuationParams::default()
        },
    };
    let art = build(m, &map_bytes, &params, &GeodesicCache::from_env()).map_err(|e| StageError {
        stage: e.stage,
        source: anyhow::anyhow!(e.message),
    })?;
    for r in &art.weight_reports {
        if !r.unresolved.is_empty() {
            log::warn!("handle {}: {} pad vertices without a border intersection", r.handle, r.unresolved.len());
        }
    }
    let manifest = stage("bundle", write_bundle(out_dir, &mesh_bytes, &art))?;
    println!(
        "built {} ({} vertices, cages {}+{} vertices, {}+{} bound)",
        out_dir.display(),
        art.mesh.vertex_count(),
        art.upper.vertex_count(),
        art.lower.vertex_count(),
        art.bindings[0].bound_count(),
        art.bindings[1].bound_count()
    );
    print_timing("mesh-core", load_time);
    for (name, d) in &art.timings {
        print_timing(name, *d);
    }
    print_timing("total", start.elapsed());
    log::info!("manifest fingerprint {:?}", manifest.fingerprint);
    Ok(())
}

fn cmd_pose(bundle: &Path, script: &Path, out: &Path) -> anyhow::Result<()> {
    let rig = stage("bundle", load_bundle_shared(bundle))?;
    let file = stage("pose", PoseFile::from_json(&read(script)?))?;
    let state = stage("pose", apply_pose_script(rig, &file))?;
    write(out, &save_obj(&state.current_mesh()))?;
    println!("posed {} edits into {}", file.edits.len(), out.display());
    Ok(())
}

fn cmd_diff(a: &Path, b: &Path, heat: Option<&Path>) -> anyhow::Result<()> {
    let ma = stage("mesh-core", load_obj(&read(a)?))?;
    let mb = stage("mesh-core", load_obj(&read(b)?))?;
    let r = stage("mesh-core", hausdorff_rms(&ma, &mb, &SamplingParams::default()))?;
    println!("{}", r.symmetric);
    log::info!("a->b {} b->a {}", r.a_to_b, r.b_to_a);
    if let Some(path) = heat {
        let d = stage("mesh-core", vertex_distances_to_surface(&ma, &mb))?;
        let text: String = d.iter().map(|x| format!("{x}\n")).collect();
        write(path, text.as_bytes())?;
    }
    Ok(())
}

fn cmd_replay(bundle: &Path, log: &Path, out: &Path) -> anyhow::Result<()> {
    let rig = stage("bundle", load_bundle_shared(bundle))?;
    let text = String::from_utf8(read(log)?).context("log is not UTF-8")?;
    let session = replay_log(rig, &text);
    write(out, &save_obj(&session.current_mesh()))?;
    Ok(())
}

fn cmd_demo(out_dir: &Path, subdivisions: usize) -> anyhow::Result<()> {
    let mesh = fatpad_core::demo::demo_head_mesh(subdivisions);
    let map = fatpad_core::demo::demo_head_map(&mesh, subdivisions);
    write(&out_dir.join("demo_head.obj"), &save_obj(&mesh))?;
    write(&out_dir.join("demo_map.json"), &serde_json::to_vec_pretty(&map)?)?;
    println!("demo head with {} vertices and {} pads in {}", mesh.vertex_count(), map.pads.len(), out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Build {
            mesh,
            map,
            out_dir,
            alpha_base,
            geodesic,
        } => cmd_build(&mesh, &map, &out_dir, alpha_base, geodesic),
        Command::Pose { bundle, script, out } => cmd_pose(&bundle, &script, &out),
        Command::Diff { a, b, heat } => cmd_diff(&a, &b, heat.as_deref()),
        Command::Serve { bundle, port, host } => {
            let rig = stage("bundle", load_bundle_shared(&bundle))?;
            serve::run(rig, &host, port)
        }
        Command::Replay { bundle, log, out } => cmd_replay(&bundle, &log, &out),
        Command::Demo { out_dir, subdivisions } => cmd_demo(&out_dir, subdivisions.into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fatpad: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
