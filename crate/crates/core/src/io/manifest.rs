//! Scene manifest: a small JSON file naming the mesh, COLMAP text files
//! and images of one capture. Relative paths resolve against the
//! manifest's directory.
//!
//! ```json
//! {
//!   "mesh_path": "mesh.ply",
//!   "cameras_path": "cameras.txt",
//!   "images_txt_path": "images.txt",
//!   "images_dir": "images",
//!   "images": [{ "id": 1, "file": "0001.png" }],
//!   "split": { "center": [0, 0, 0], "radius": 3.3 }
//! }
//! ```
//!
//! `images` may be omitted, in which case every entry of `images.txt` is
//! used with its recorded name.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffrender::fit::TrainingView;
use crate::error::{Error, Result};
use crate::geometry::{compute_scene_split, Camera, SceneSplit, TriangleMesh};
use crate::image::Image;
use crate::io::colmap::{format_colmap, load_colmap_cameras, PosedCamera};
use crate::io::ply::{load_ply, save_ply, PlyFormat};
use crate::io::png::{read_png, write_png};
use crate::linalg::Vec3;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    /// `IMAGE_ID` in `images.txt`.
    pub id: u32,
    pub file: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitOverride {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub mesh_path: PathBuf,
    pub cameras_path: PathBuf,
    pub images_txt_path: PathBuf,
    pub images_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitOverride>,
    /// World up axis for camera augmentation; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<[f64; 3]>,
}

impl SceneManifest {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// One view of a loaded scene; the image is read on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneView<T> {
    pub id: u32,
    pub camera: Camera<T>,
    pub image_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub mesh: TriangleMesh<T>,
    pub views: Vec<SceneView<T>>,
    pub split_override: Option<SceneSplit<T>>,
    pub up: Option<Vec3<T>>,
}

fn existing(base: &Path, p: &Path) -> Result<PathBuf> {
    let full = base.join(p);
    if full.is_file() {
        Ok(full)
    } else {
        Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", full.display()),
        )))
    }
}

impl<T: Real> Scene<T> {
    /// Loads geometry and cameras and checks that every image exists.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest = SceneManifest::parse(&std::fs::read_to_string(manifest_path)?)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mesh = load_ply(existing(base, &manifest.mesh_path)?)?;
        let posed: Vec<PosedCamera<T>> = load_colmap_cameras(
            existing(base, &manifest.cameras_path)?,
            existing(base, &manifest.images_txt_path)?,
        )?;
        let images_dir = base.join(&manifest.images_dir);
        let entries: Vec<ImageEntry> = if manifest.images.is_empty() {
            posed
                .iter()
                .map(|p| ImageEntry {
                    id: p.image_id,
                    file: PathBuf::from(&p.name),
                })
                .collect()
        } else {
            manifest.images.clone()
        };
        let mut seen = HashSet::new();
        let views = entries
            .iter()
            .map(|e| {
                if !seen.insert(e.id) {
                    return Err(Error::parse(format!("manifest lists image id {} twice", e.id)));
                }
                let camera = posed
                    .iter()
                    .find(|p| p.image_id == e.id)
                    .ok_or_else(|| Error::parse(format!("image id {} is not in images.txt", e.id)))?
                    .camera
                    .clone();
                Ok(SceneView {
                    id: e.id,
                    camera,
                    image_path: existing(&images_dir, &e.file)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let split_override = manifest
            .split
            .map(|s| SceneSplit::new(Vec3::from_array(s.center).cast(), T::lit(s.radius)))
            .transpose()?;
        let up = manifest.up.map(|u| Vec3::from_array(u).cast());
        Ok(Self {
            mesh,
            views,
            split_override,
            up,
        })
    }

    pub fn cameras(&self) -> Vec<Camera<T>> {
        self.views.iter().map(|v| v.camera.clone()).collect()
    }

    /// The manifest's split if given, otherwise the camera-derived one.
    pub fn split(&self) -> Result<SceneSplit<T>> {
        match &self.split_override {
            Some(s) => Ok(*s),
            None => compute_scene_split(&self.cameras()),
        }
    }

    pub fn view(&self, id: u32) -> Result<&SceneView<T>> {
        self.views
            .iter()
            .find(|v| v.id == id)
            .ok_or(Error::IndexOutOfRange {
                what: "scene views (by id)",
                index: id as usize,
                len: self.views.len(),
            })
    }

    /// Reads every image; sizes must match their cameras.
    pub fn training_views(&self) -> Result<Vec<TrainingView<T>>> {
        self.views
            .iter()
            .map(|v| {
                let image: Image<T> = read_png(&v.image_path)?;
                if (image.width, image.height) != (v.camera.width, v.camera.height) {
                    return Err(Error::DimensionMismatch(format!(
                        "{} is {}x{}, camera {} is {}x{}",
                        v.image_path.display(),
                        image.width,
                        image.height,
                        v.id,
                        v.camera.width,
                        v.camera.height
                    )));
                }
                Ok(TrainingView {
                    camera: v.camera.clone(),
                    image,
                })
            })
            .collect()
    }
}

/// Writes a self-contained scene directory (`scene.json`, `mesh.ply`,
/// COLMAP text files, `images/NNNN.png`) and returns the manifest path.
/// View `i` gets image id `i + 1`.
pub fn write_scene<T: Real>(
    dir: impl AsRef<Path>,
    mesh: &TriangleMesh<T>,
    views: &[TrainingView<T>],
    split: Option<&SceneSplit<T>>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir.join("images"))?;
    save_ply(dir.join("mesh.ply"), mesh, PlyFormat::BinaryLittleEndian)?;
    let posed: Vec<PosedCamera<T>> = views
        .iter()
        .enumerate()
        .map(|(i, v)| PosedCamera {
            image_id: i as u32 + 1,
            name: format!("{:04}.png", i + 1),
            camera: v.camera.clone(),
        })
        .collect();
    for (p, v) in posed.iter().zip(views) {
        write_png(dir.join("images").join(&p.name), &v.image)?;
    }
    let (cams, imgs) = format_colmap(&posed);
    std::fs::write(dir.join("cameras.txt"), cams)?;
    std::fs::write(dir.join("images.txt"), imgs)?;
    let manifest = SceneManifest {
        mesh_path: "mesh.ply".into(),
        cameras_path: "cameras.txt".into(),
        images_txt_path: "images.txt".into(),
        images_dir: "images".into(),
        images: posed
            .iter()
            .map(|p| ImageEntry {
                id: p.image_id,
                file: p.name.clone().into(),
            })
            .collect(),
        split: split.map(|s| SplitOverride {
            center: s.center.cast::<f64>().to_array(),
            radius: s.radius.to_f64_lossy(),
        }),
        up: None,
    };
    let path = dir.join("scene.json");
    std::fs::write(&path, manifest.to_json())?;
    Ok(path)
}
