//! File formats: PLY meshes, COLMAP text cameras, PNG images, binary
//! checkpoints and the JSON scene manifest.

pub mod checkpoint;
pub mod colmap;
pub mod manifest;
pub mod ply;
pub mod png;

pub use checkpoint::Checkpoint;
pub use colmap::{load_colmap_cameras, PosedCamera};
pub use manifest::{write_scene, Scene, SceneManifest, SceneView};
pub use ply::{load_ply, parse_ply, save_ply, write_ply, PlyFormat};
pub use png::{decode_png, encode_png, read_png, write_png};
