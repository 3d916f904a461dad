//! COLMAP text export: `cameras.txt` and `images.txt`.
//!
//! Only undistorted pinhole models are accepted. Poses are world-to-camera
//! (`x_cam = R·x_world + t`) with `R` given as a Hamilton quaternion
//! `qw qx qy qz`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColmapCamera {
    pub id: u32,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColmapImage {
    pub id: u32,
    /// `[w, x, y, z]`, not necessarily normalized.
    pub qvec: [f64; 4],
    pub tvec: [f64; 3],
    pub camera_id: u32,
    pub name: String,
}

/// A fully resolved view: pose plus intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedCamera<T> {
    pub image_id: u32,
    pub name: String,
    pub camera: Camera<T>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'))
}

fn field<V: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<V> {
    let tok = tok.ok_or_else(|| Error::parse(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(format!("line {line}: bad {what} {tok:?}")))
}

fn finite(v: f64, what: &str, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(format!("line {line}: non-finite {what}")))
    }
}

pub fn parse_cameras_txt(text: &str) -> Result<Vec<ColmapCamera>> {
    let mut cams = Vec::new();
    for (ln, line) in content_lines(text) {
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let id: u32 = field(tok.next(), "camera id", ln)?;
        let model: &str = tok
            .next()
            .ok_or_else(|| Error::parse(format!("line {ln}: missing model")))?;
        let width: usize = field(tok.next(), "width", ln)?;
        let height: usize = field(tok.next(), "height", ln)?;
        let params = tok
            .map(|t| field::<f64>(Some(t), "parameter", ln).and_then(|v| finite(v, "parameter", ln)))
            .collect::<Result<Vec<_>>>()?;
        let (fx, fy, cx, cy) = match (model, params.as_slice()) {
            ("PINHOLE", &[fx, fy, cx, cy]) => (fx, fy, cx, cy),
            ("SIMPLE_PINHOLE", &[f, cx, cy]) => (f, f, cx, cy),
            ("PINHOLE" | "SIMPLE_PINHOLE", p) => {
                return Err(Error::parse(format!(
                    "line {ln}: {model} with {} parameters",
                    p.len()
                )))
            }
            (other, _) => return Err(Error::UnsupportedCameraModel(other.to_string())),
        };
        cams.push(ColmapCamera {
            id,
            width,
            height,
            fx,
            fy,
            cx,
            cy,
        });
    }
    Ok(cams)
}

/// Image records alternate with 2-D point lines; the latter may be empty
/// and are skipped.
pub fn parse_images_txt(text: &str) -> Result<Vec<ColmapImage>> {
    let mut images = Vec::new();
    let mut lines = content_lines(text);
    while let Some((ln, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let id: u32 = field(tok.next(), "image id", ln)?;
        let mut q = [0.0; 4];
        for v in &mut q {
            *v = finite(field(tok.next(), "quaternion", ln)?, "quaternion", ln)?;
        }
        let mut t = [0.0; 3];
        for v in &mut t {
            *v = finite(field(tok.next(), "translation", ln)?, "translation", ln)?;
        }
        let camera_id: u32 = field(tok.next(), "camera id", ln)?;
        let name: Vec<&str> = tok.collect();
        if name.is_empty() {
            return Err(Error::parse(format!("line {ln}: missing image name")));
        }
        images.push(ColmapImage {
            id,
            qvec: q,
            tvec: t,
            camera_id,
            name: name.join(" "),
        });
        lines.next();
    }
    Ok(images)
}

/// Rotation matrix of a Hamilton quaternion `[w, x, y, z]`; the input is
/// normalized first.
pub fn quaternion_to_rotation(q: [f64; 4]) -> Result<Mat3<f64>> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(Error::parse(format!("degenerate quaternion {q:?}")));
    }
    let [w, x, y, z] = q.map(|v| v / n);
    Ok(Mat3 {
        rows: [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ],
    })
}

/// Inverse of [`quaternion_to_rotation`] with `w ≥ 0`.
pub fn rotation_to_quaternion(r: &Mat3<f64>) -> [f64; 4] {
    let m = &r.rows;
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > 0.0 {
        let s = 0.5 / (trace + 1.0).sqrt();
        [0.25 / s, (m[2][1] - m[1][2]) * s, (m[0][2] - m[2][0]) * s, (m[1][0] - m[0][1]) * s]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
        [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
    } else if m[1][1] > m[2][2] {
        let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
        [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
    } else {
        let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
        [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
    };
    if q[0] < 0.0 {
        q.map(|v| -v)
    } else {
        q
    }
}

/// Joins images with their intrinsics, in `images.txt` order.
pub fn resolve_cameras<T: Real>(
    cameras: &[ColmapCamera],
    images: &[ColmapImage],
) -> Result<Vec<PosedCamera<T>>> {
    let mut by_id = HashMap::new();
    for c in cameras {
        if by_id.insert(c.id, c).is_some() {
            return Err(Error::parse(format!("duplicate camera id {}", c.id)));
        }
    }
    let mut seen = HashSet::new();
    images
        .iter()
        .map(|img| {
            if !seen.insert(img.id) {
                return Err(Error::parse(format!("duplicate image id {}", img.id)));
            }
            let c = by_id.get(&img.camera_id).ok_or_else(|| {
                Error::parse(format!("image {} references unknown camera {}", img.id, img.camera_id))
            })?;
            let r = quaternion_to_rotation(img.qvec)?;
            let camera = Camera::new(
                T::lit(c.fx),
                T::lit(c.fy),
                T::lit(c.cx),
                T::lit(c.cy),
                r.cast(),
                Vec3::from_array(img.tvec).cast(),
                c.width,
                c.height,
            )?;
            Ok(PosedCamera {
                image_id: img.id,
                name: img.name.clone(),
                camera,
            })
        })
        .collect()
}

pub fn load_colmap_cameras<T: Real>(
    cameras_txt: impl AsRef<Path>,
    images_txt: impl AsRef<Path>,
) -> Result<Vec<PosedCamera<T>>> {
    let cams = parse_cameras_txt(&std::fs::read_to_string(cameras_txt)?)?;
    let images = parse_images_txt(&std::fs::read_to_string(images_txt)?)?;
    resolve_cameras(&cams, &images)
}

/// One `PINHOLE` camera per view (camera id = image id), so differing
/// intrinsics survive the round trip.
pub fn format_colmap<T: Real>(views: &[PosedCamera<T>]) -> (String, String) {
    let mut cams = String::from("# Camera list with one line of data per camera:\n");
    let mut imgs = String::from("# Image list with two lines of data per image:\n");
    for v in views {
        let c = v.camera.cast::<f64>();
        let _ = writeln!(
            cams,
            "{} PINHOLE {} {} {:?} {:?} {:?} {:?}",
            v.image_id, c.width, c.height, c.fx, c.fy, c.cx, c.cy
        );
        let q = rotation_to_quaternion(&c.rotation);
        let t = c.translation;
        let _ = writeln!(
            imgs,
            "{} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {} {}\n",
            v.image_id, q[0], q[1], q[2], q[3], t.x, t.y, t.z, v.image_id, v.name
        );
    }
    (cams, imgs)
}
