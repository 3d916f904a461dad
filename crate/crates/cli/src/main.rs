//! `nmbg` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nmbg::diffrender::{fit_scene, psnr, render_view, ssim, FitConfig, SplitScene};
use nmbg::geometry::{compute_camera_stats, estimate_up, partition_mesh, sample_augmented_cameras};
use nmbg::io::{read_png, write_png, write_scene, Checkpoint, Scene};
use nmbg::synthetic::{lambertian_cube_scene, specular_cube_scene, SceneParams};
use nmbg::{Error, Result};

/// Working precision of the CLI; checkpoints store f32 regardless.
type F = f32;

#[derive(Parser)]
#[command(name = "nmbg", version, about = "Fit and render neural mesh descriptors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit descriptors and render head to a scene's images.
    Fit {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// CSV file receiving `epoch,loss` rows.
        #[arg(long)]
        loss_trace: Option<PathBuf>,
        /// JSON file with further fit settings; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render one scene view from a checkpoint.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Image id of the view in the scene's images.txt.
        #[arg(long)]
        camera_id: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the foreground/background split of a scene.
    Split {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Draw augmented camera poses around the foreground sphere.
    SampleCameras {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two PNG images.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Write a synthetic cube scene directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthKind::Lambertian)]
        kind: SynthKind,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 12)]
        views: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Lambertian,
    Specular,
}

#[derive(Serialize)]
struct PoseRecord {
    /// World-to-camera rotation, row-major.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    position: [f64; 3],
}

fn load_scene(path: &Path) -> Result<(Scene<F>, SplitScene<F>)> {
    let scene = Scene::<F>::load(path)?;
    let split = scene.split()?;
    let split_scene = SplitScene::new(&scene.mesh, split);
    Ok((scene, split_scene))
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        let s = format!("{v:.6}");
        // values that round to zero print unsigned
        match s.strip_prefix('-') {
            Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
            _ => s,
        }
    }
}

fn run(command: Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Fit {
            scene,
            epochs,
            seed,
            out: ckpt,
            loss_trace,
            config,
        } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
                None => FitConfig::default(),
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (scene, split_scene) = load_scene(&scene)?;
            let views = scene.training_views()?;
            let result = fit_scene(&split_scene, &views, &cfg)?;
            Checkpoint::from_model(&result.model, &split_scene.split).save(&ckpt)?;
            if let Some(path) = loss_trace {
                let mut csv = String::from("epoch,loss\n");
                for (i, l) in result.loss_trace.iter().enumerate() {
                    let _ = writeln!(csv, "{i},{l:?}");
                }
                std::fs::write(path, csv)?;
            }
            if let Some(last) = result.loss_trace.last() {
                let _ = writeln!(out, "final loss {last:.6}");
            }
        }
        Command::Render {
            scene,
            checkpoint,
            camera_id,
            out: png,
        } => {
            let scene = Scene::<F>::load(&scene)?;
            let ck = Checkpoint::load(&checkpoint)?;
            // geometry is partitioned with the split the model was trained on
            let split_scene = SplitScene::new(&scene.mesh, ck.scene_split());
            let model = ck.model::<F>();
            model.check_against(&split_scene)?;
            let view = scene.view(camera_id)?;
            let cfg = FitConfig::default();
            let img = render_view(&split_scene, &model, &view.camera, cfg.point_radius as F)?;
            write_png(&png, &img)?;
        }
        Command::Split { scene } => {
            let scene = Scene::<f64>::load(&scene)?;
            let split = scene.split()?;
            let (fg, bg) = partition_mesh(&scene.mesh, &split);
            let c = split.center;
            let _ = writeln!(out, "center {} {} {}", fmt_num(c.x), fmt_num(c.y), fmt_num(c.z));
            let _ = writeln!(out, "radius {}", fmt_num(split.radius));
            let _ = writeln!(out, "fg_faces {}", fg.mesh.faces.len());
            let _ = writeln!(out, "bg_faces {}", bg.mesh.faces.len());
        }
        Command::SampleCameras {
            scene,
            count,
            seed,
            out: json,
        } => {
            let scene = Scene::<f64>::load(&scene)?;
            let cams = scene.cameras();
            let split = scene.split()?;
            let up = match scene.up {
                Some(u) => u,
                None => estimate_up(&cams)
                    .ok_or_else(|| Error::InvalidConfig("cannot estimate an up axis".into()))?,
            };
            let stats = compute_camera_stats(&cams, &split, up)?;
            let poses: Vec<PoseRecord> = sample_augmented_cameras(&split, &stats, count, seed)?
                .into_iter()
                .map(|p| PoseRecord {
                    rotation: p.rotation.rows,
                    translation: p.translation.to_array(),
                    position: p.position.to_array(),
                })
                .collect();
            let text = serde_json::to_string_pretty(&poses).expect("poses serialize");
            std::fs::write(json, text + "\n")?;
        }
        Command::Metrics { pred, gt } => {
            let p = read_png::<f64>(&pred)?;
            let g = read_png::<f64>(&gt)?;
            let v = psnr(&p, &g, 1.0)?;
            let s = ssim(&p, &g)?;
            let _ = writeln!(out, "PSNR {}", fmt_num(v));
            let _ = writeln!(out, "SSIM {}", fmt_num(s));
        }
        Command::Synth {
            out: dir,
            kind,
            size,
            views,
        } => {
            let params = SceneParams {
                size,
                views,
                ..SceneParams::default()
            };
            let syn = match kind {
                SynthKind::Lambertian => lambertian_cube_scene::<F>(&params)?,
                SynthKind::Specular => specular_cube_scene::<F>(&params)?,
            };
            let path = write_scene(&dir, &syn.mesh, &syn.views, None)?;
            let _ = writeln!(out, "{}", path.display());
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
