//! Cameras, projection, pixel rays, the foreground/background scene split
//! and augmented-camera sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Points at or closer than this camera-space depth do not project.
pub const DEPTH_EPSILON: f64 = 1e-9;

/// Foreground radius as a multiple of the furthest camera distance.
pub const SPLIT_RADIUS_FACTOR: f64 = 1.1;

/// Pinhole camera with a world-to-camera pose: `p_cam = R·p + T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub width: usize,
    pub height: usize,
}

/// Result of projecting a world point into a camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection<T> {
    /// Continuous pixel coordinates and camera-space depth.
    Visible { u: T, v: T, z: T },
    BehindCamera,
}

impl<T: Real> Projection<T> {
    pub fn visible(self) -> Option<(T, T, T)> {
        match self {
            Projection::Visible { u, v, z } => Some((u, v, z)),
            Projection::BehindCamera => None,
        }
    }
}

impl<T: Real> Camera<T> {
    /// Builds a camera, checking intrinsics, image size and that the rotation
    /// is proper orthonormal.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        rotation: Mat3<T>,
        translation: Vec3<T>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `position` looking at `target`, with pixel-space intrinsics.
    pub fn looking_at(
        intrinsics: Intrinsics<T>,
        position: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
    ) -> Result<Self> {
        let rotation = look_at(position, target, up)?;
        let translation = -rotation.mul_vec(position);
        Self::new(
            intrinsics.fx,
            intrinsics.fy,
            intrinsics.cx,
            intrinsics.cy,
            rotation,
            translation,
            intrinsics.width,
            intrinsics.height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite() && self.translation.is_finite()) {
            return Err(Error::InvalidCamera("non-finite parameters".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera(format!(
                "image size {}x{} is empty",
                self.width, self.height
            )));
        }
        let tol = orthonormal_tolerance::<T>();
        if !self.rotation.is_finite()
            || !(self.rotation.orthonormality_error() < tol)
            || !(self.rotation.determinant() > T::zero())
        {
            return Err(Error::InvalidCamera(
                "rotation is not a proper orthonormal matrix".into(),
            ));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Intrinsics<T> {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    /// Camera center in world coordinates, `−Rᵀ·T`.
    pub fn position(&self) -> Vec3<T> {
        -self.rotation.transpose().mul_vec(self.translation)
    }

    #[inline]
    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Camera-frame direction (not normalized) of the ray through continuous
    /// pixel coordinates `(u, v)`.
    #[inline]
    pub fn camera_ray(&self, u: T, v: T) -> Vec3<T> {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        Camera {
            fx: U::lit(self.fx.to_f64_lossy()),
            fy: U::lit(self.fy.to_f64_lossy()),
            cx: U::lit(self.cx.to_f64_lossy()),
            cy: U::lit(self.cy.to_f64_lossy()),
            rotation: self.rotation.cast(),
            translation: self.translation.cast(),
            width: self.width,
            height: self.height,
        }
    }
}

fn orthonormal_tolerance<T: Real>() -> T {
    // f32 rotations cannot meet the f64 bound
    if T::epsilon() > T::lit(1e-10) {
        T::lit(1e-5)
    } else {
        T::lit(1e-9)
    }
}

/// Pixel-space intrinsics and image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

/// Projects a world point to continuous pixel coordinates.
pub fn project_point<T: Real>(p: Vec3<T>, cam: &Camera<T>) -> Projection<T> {
    let pc = cam.world_to_camera(p);
    if !(pc.z > T::lit(DEPTH_EPSILON)) {
        return Projection::BehindCamera;
    }
    Projection::Visible {
        u: cam.fx * pc.x / pc.z + cam.cx,
        v: cam.fy * pc.y / pc.z + cam.cy,
        z: pc.z,
    }
}

/// Unit world-frame direction of the ray through continuous pixel
/// coordinates `(u, v)`: `normalize(Rᵀ·K⁻¹·(u, v, 1))`.
pub fn pixel_ray_direction<T: Real>(u: T, v: T, cam: &Camera<T>) -> Vec3<T> {
    cam.rotation
        .transpose()
        .mul_vec(cam.camera_ray(u, v))
        .normalize()
}

/// Indexed triangle mesh. Faces reference rows of `vertices`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn centroid(&self, face: usize) -> Vec3<T> {
        let [a, b, c] = self.faces[face];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) * (T::one() / T::lit(3.0))
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Foreground sphere: mean camera position and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSplit<T> {
    pub center: Vec3<T>,
    pub radius: T,
}

impl<T: Real> SceneSplit<T> {
    pub fn new(center: Vec3<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() || !center.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "split radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }
}

/// Sphere centred on the mean camera position, with radius 1.1 times the
/// distance to the furthest camera.
pub fn compute_scene_split<T: Real>(cameras: &[Camera<T>]) -> Result<SceneSplit<T>> {
    if cameras.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "scene split needs at least 2 cameras, got {}",
            cameras.len()
        )));
    }
    let positions: Vec<Vec3<T>> = cameras.iter().map(Camera::position).collect();
    let sum = positions.iter().fold(Vec3::zero(), |acc, &p| acc + p);
    let n = T::from_usize_lossy(positions.len());
    let center = Vec3::new(sum.x / n, sum.y / n, sum.z / n);
    let max_dist = positions
        .iter()
        .map(|&p| (p - center).norm())
        .fold(T::zero(), T::max);
    if max_dist < T::lit(1e-9) {
        return Err(Error::DegenerateSplit);
    }
    Ok(SceneSplit {
        center,
        radius: T::lit(SPLIT_RADIUS_FACTOR) * max_dist,
    })
}

/// A submesh together with the original index of each of its vertices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubMesh<T> {
    pub mesh: TriangleMesh<T>,
    /// `vertex_map[i]` is the original index of submesh vertex `i`.
    pub vertex_map: Vec<usize>,
    /// `face_map[j]` is the original index of submesh face `j`.
    pub face_map: Vec<usize>,
}

/// Splits faces by whether their centroid lies inside the foreground sphere.
/// Returns `(foreground, background)`.
pub fn partition_mesh<T: Real>(
    mesh: &TriangleMesh<T>,
    split: &SceneSplit<T>,
) -> (SubMesh<T>, SubMesh<T>) {
    let mut fg_faces = Vec::new();
    let mut bg_faces = Vec::new();
    for fi in 0..mesh.faces.len() {
        if (mesh.centroid(fi) - split.center).norm() <= split.radius {
            fg_faces.push(fi);
        } else {
            bg_faces.push(fi);
        }
    }
    (extract_submesh(mesh, &fg_faces), extract_submesh(mesh, &bg_faces))
}

fn extract_submesh<T: Real>(mesh: &TriangleMesh<T>, faces: &[usize]) -> SubMesh<T> {
    const UNSEEN: usize = usize::MAX;
    let mut remap = vec![UNSEEN; mesh.vertices.len()];
    let mut vertex_map = Vec::new();
    let mut out_faces = Vec::with_capacity(faces.len());
    for &fi in faces {
        let mut tri = [0usize; 3];
        for (slot, &vi) in tri.iter_mut().zip(&mesh.faces[fi]) {
            if remap[vi] == UNSEEN {
                remap[vi] = vertex_map.len();
                vertex_map.push(vi);
            }
            *slot = remap[vi];
        }
        out_faces.push(tri);
    }
    let vertices = vertex_map.iter().map(|&i| mesh.vertices[i]).collect();
    SubMesh {
        mesh: TriangleMesh {
            vertices,
            faces: out_faces,
        },
        vertex_map,
        face_map: faces.to_vec(),
    }
}

/// World-to-camera rotation whose +z axis points from `position` to
/// `target`, with camera −y aligned as closely as possible with `up`.
pub fn look_at<T: Real>(position: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Result<Mat3<T>> {
    let delta = target - position;
    let dist = delta.norm();
    if !(dist >= T::lit(1e-9)) {
        return Err(Error::DegenerateLookAt(
            "target coincides with position".into(),
        ));
    }
    let forward = delta * (T::one() / dist);
    let up = up.normalize();
    if !(forward.dot(up).abs() <= T::one() - T::lit(1e-9)) {
        return Err(Error::DegenerateLookAt(
            "up axis is parallel to the viewing direction".into(),
        ));
    }
    let right = forward.cross(up).normalize();
    let down = forward.cross(right);
    Ok(Mat3::from_rows(right, down, forward))
}

/// Elevation statistics of the training cameras about a scene up axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraStats<T> {
    pub mean_elevation: T,
    pub std_elevation: T,
    pub up: Vec3<T>,
}

/// Scene up axis estimated as the normalized mean of the cameras' up
/// vectors (camera −y in world frame).
pub fn estimate_up<T: Real>(cameras: &[Camera<T>]) -> Option<Vec3<T>> {
    let sum = cameras.iter().fold(Vec3::zero(), |acc, c| {
        acc - c.rotation.transpose().mul_vec(Vec3::new(T::zero(), T::one(), T::zero()))
    });
    let n = sum.norm();
    (n > T::lit(1e-12)).then(|| sum * (T::one() / n))
}

/// Polar angle of each camera position about `up`, measured from the split
/// center; returns mean and population standard deviation.
pub fn compute_camera_stats<T: Real>(
    cameras: &[Camera<T>],
    split: &SceneSplit<T>,
    up: Vec3<T>,
) -> Result<CameraStats<T>> {
    let up_norm = up.norm();
    if cameras.is_empty() || !(up_norm > T::lit(1e-12)) {
        return Err(Error::InvalidConfig(
            "camera statistics need at least one camera and a non-zero up axis".into(),
        ));
    }
    let up = up * (T::one() / up_norm);
    let mut elevations = Vec::with_capacity(cameras.len());
    for cam in cameras {
        let offset = cam.position() - split.center;
        let len = offset.norm();
        if !(len > T::lit(1e-12)) {
            continue;
        }
        let c = (offset.dot(up) / len).max(-T::one()).min(T::one());
        elevations.push(c.acos());
    }
    if elevations.is_empty() {
        return Err(Error::DegenerateSplit);
    }
    let n = T::from_usize_lossy(elevations.len());
    let mean = elevations.iter().copied().sum::<T>() / n;
    let var = elevations
        .iter()
        .map(|&e| (e - mean) * (e - mean))
        .sum::<T>()
        / n;
    Ok(CameraStats {
        mean_elevation: mean,
        std_elevation: var.sqrt(),
        up,
    })
}

/// Orthonormal frame `(e1, up, e3)` used by the spherical sampling formula.
/// For `up = +y` this is the world frame.
pub fn pole_basis<T: Real>(up: Vec3<T>) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
    let up = up.normalize();
    let x = Vec3::new(T::one(), T::zero(), T::zero());
    let reference = if up.dot(x).abs() < T::lit(0.9) {
        x
    } else {
        Vec3::new(T::zero(), T::zero(), T::one())
    };
    let e3 = reference.cross(up).normalize();
    let e1 = up.cross(e3);
    (e1, up, e3)
}

/// `center + r·[sinθ sinφ, cosθ, sinθ cosφ]` expressed in the pole basis of `up`.
pub fn spherical_position<T: Real>(
    center: Vec3<T>,
    up: Vec3<T>,
    radius: T,
    theta: T,
    phi: T,
) -> Vec3<T> {
    let (e1, pole, e3) = pole_basis(up);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    center + (e1 * (st * sp) + pole * ct + e3 * (st * cp)) * radius
}

/// A sampled world-to-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub position: Vec3<T>,
}

/// Draws an augmented camera pose on a spherical shell around the split
/// center, looking at the center.
pub fn sample_augmented_camera<T: Real, R: Rng + ?Sized>(
    split: &SceneSplit<T>,
    stats: &CameraStats<T>,
    rng: &mut R,
) -> Result<Pose<T>> {
    let r_fg = split.radius.to_f64_lossy();
    let radius = T::lit(rng.random_range(0.6 * r_fg..=r_fg));
    let phi = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
    let mean = stats.mean_elevation.to_f64_lossy();
    let half = 1.5 * stats.std_elevation.to_f64_lossy();
    let raw = if half > 0.0 {
        rng.random_range(mean - half..=mean + half)
    } else {
        mean
    };
    // keep away from the poles, where look-at is undefined
    let margin = 1e-6;
    let theta = T::lit(raw.clamp(margin, std::f64::consts::PI - margin));
    let position = spherical_position(split.center, stats.up, radius, theta, phi);
    let rotation = look_at(position, split.center, stats.up)?;
    Ok(Pose {
        rotation,
        translation: -rotation.mul_vec(position),
        position,
    })
}

/// `count` poses from a `ChaCha8Rng` seeded with `seed`.
pub fn sample_augmented_cameras<T: Real>(
    split: &SceneSplit<T>,
    stats: &CameraStats<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<Pose<T>>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_augmented_camera(split, stats, &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam(fx: f64, c: f64, rotation: Mat3<f64>, t: Vec3<f64>) -> Camera<f64> {
        Camera::new(fx, fx, c, c, rotation, t, 64, 64).unwrap()
    }

    fn simple() -> Camera<f64> {
        cam(100.0, 32.0, Mat3::identity(), Vec3::zero())
    }

    fn at(p: Vec3<f64>) -> Camera<f64> {
        let r = look_at(p, Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.3, 1.0, 0.1)).unwrap();
        cam(50.0, 32.0, r, -r.mul_vec(p))
    }

    #[test]
    fn projection_examples() {
        let c = simple();
        assert_eq!(
            project_point(Vec3::new(0.0, 0.0, 1.0), &c),
            Projection::Visible { u: 32.0, v: 32.0, z: 1.0 }
        );
        let (u, v, z) = project_point(Vec3::new(0.1, 0.0, 1.0), &c).visible().unwrap();
        assert!((u - 42.0).abs() < 1e-12 && v == 32.0 && z == 1.0);
        assert_eq!(
            project_point(Vec3::new(0.0, 0.0, -1.0), &c),
            Projection::BehindCamera
        );
        assert_eq!(
            project_point(Vec3::new(0.0, 0.0, 0.0), &c),
            Projection::BehindCamera
        );
    }

    #[test]
    fn ray_direction_examples() {
        let c = simple();
        let d = pixel_ray_direction(32.0, 32.0, &c);
        assert!((d - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let d = pixel_ray_direction(132.0, 32.0, &c);
        let s = 0.5f64.sqrt();
        assert!((d - Vec3::new(s, 0.0, s)).norm() < 1e-15);
        let d = pixel_ray_direction(-17.3, 90.1, &at(Vec3::new(2.0, 1.0, -3.0)));
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn camera_rejects_bad_parameters() {
        let bad_r = Mat3::from_rows(
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        );
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, bad_r, Vec3::zero(), 4, 4).is_err());
        let mirror = Mat3::from_rows(
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        );
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, mirror, Vec3::zero(), 4, 4).is_err());
        let id = Mat3::identity();
        assert!(Camera::new(0.0, 1.0, 0.0, 0.0, id, Vec3::zero(), 4, 4).is_err());
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, id, Vec3::zero(), 0, 4).is_err());
    }

    #[test]
    fn split_examples() {
        let ring = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            .map(|(x, y)| at(Vec3::new(x, y, 0.0)));
        let split = compute_scene_split(&ring).unwrap();
        assert!(split.center.norm() < 1e-12);
        assert!((split.radius - 1.1).abs() < 1e-12);

        let pair = [at(Vec3::zero()), at(Vec3::new(2.0, 0.0, 0.0))];
        let split = compute_scene_split(&pair).unwrap();
        assert!((split.center - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((split.radius - 1.1).abs() < 1e-12);

        let same = [at(Vec3::new(1.0, 2.0, 3.0)), at(Vec3::new(1.0, 2.0, 3.0))];
        assert!(matches!(
            compute_scene_split(&same),
            Err(Error::DegenerateSplit)
        ));
        assert!(compute_scene_split(&same[..1]).is_err());
    }

    #[test]
    fn split_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f64; 3]> = (0..5)
            .map(|_| [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
            .collect();
        let cams: Vec<_> = pts.iter().map(|p| at(Vec3::from_array(*p))).collect();
        let split = compute_scene_split(&cams).unwrap();
        // recompute from the stored camera centres with plain arrays
        let centres: Vec<[f64; 3]> = cams.iter().map(|c| c.position().to_array()).collect();
        let mut mean = [0.0; 3];
        for c in &centres {
            for k in 0..3 {
                mean[k] += c[k];
            }
        }
        for m in &mut mean {
            *m /= 5.0;
        }
        let far = centres
            .iter()
            .map(|c| ((c[0] - mean[0]).powi(2) + (c[1] - mean[1]).powi(2) + (c[2] - mean[2]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        assert_eq!(split.center.to_array(), mean);
        assert_eq!(split.radius, 1.1 * far);
    }

    #[test]
    fn partition_examples() {
        let split = SceneSplit::new(Vec3::zero(), 1.0).unwrap();
        let inside = TriangleMesh::new(
            vec![
                Vec3::new(0.1, 0.0, 0.0),
                Vec3::new(0.0, 0.1, 0.0),
                Vec3::new(0.0, 0.0, 0.1),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (fg, bg) = partition_mesh(&inside, &split);
        assert_eq!(fg.mesh, inside);
        assert_eq!(fg.vertex_map, vec![0, 1, 2]);
        assert!(bg.mesh.faces.is_empty() && bg.mesh.vertices.is_empty());

        let far = TriangleMesh::new(
            vec![
                Vec3::new(2.0, 0.1, 0.0),
                Vec3::new(2.0, -0.1, 0.1),
                Vec3::new(2.0, 0.0, -0.1),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((far.centroid(0).norm() - 2.0f64).abs() < 1e-12);
        let (fg, bg) = partition_mesh(&far, &split);
        assert!(fg.mesh.faces.is_empty());
        assert_eq!(bg.mesh.faces.len(), 1);
    }

    #[test]
    fn partition_keeps_only_referenced_vertices() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.1, 0.0, 0.0),
                Vec3::new(0.0, 0.1, 0.0),
                Vec3::new(5.0, 0.0, 0.0),
                Vec3::new(5.0, 0.1, 0.0),
                Vec3::new(9.0, 9.0, 9.0),
            ],
            vec![[0, 1, 2], [1, 3, 4]],
        )
        .unwrap();
        let split = SceneSplit::new(Vec3::zero(), 1.0).unwrap();
        let (fg, bg) = partition_mesh(&mesh, &split);
        assert_eq!(fg.vertex_map, vec![0, 1, 2]);
        assert_eq!(bg.vertex_map, vec![1, 3, 4]);
        assert_eq!(bg.mesh.faces, vec![[0, 1, 2]]);
        assert_eq!(bg.face_map, vec![1]);
        for sub in [&fg, &bg] {
            for (j, f) in sub.mesh.faces.iter().enumerate() {
                let orig = mesh.faces[sub.face_map[j]];
                assert_eq!(f.map(|i| sub.vertex_map[i]), orig);
            }
        }
    }

    #[test]
    fn look_at_examples() {
        let r = look_at(Vec3::new(0.0, 0.0, 1.0), Vec3::zero(), Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let f = r.mul_vec(Vec3::new(0.0, 0.0, -1.0));
        assert!((f - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!(r.orthonormality_error() < 1e-9);
        assert!((r.determinant() - 1.0f64).abs() < 1e-12);
        // world up projects to the top of the image
        let up_cam = r.mul_vec(Vec3::new(0.0, 1.0, 0.0));
        assert!(up_cam.y < 0.0);

        let pos = Vec3::new(1.5, -0.4, 2.0);
        let target = Vec3::new(0.2, 0.3, -0.1);
        let r = look_at(pos, target, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let c = cam(80.0, 31.5, r, -r.mul_vec(pos));
        let (u, v, _) = project_point(target, &c).visible().unwrap();
        assert!((u - 31.5).abs() < 1e-9 && (v - 31.5).abs() < 1e-9);

        assert!(matches!(
            look_at(pos, pos, Vec3::new(0.0, 1.0, 0.0)),
            Err(Error::DegenerateLookAt(_))
        ));
        assert!(matches!(
            look_at(Vec3::zero(), Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            Err(Error::DegenerateLookAt(_))
        ));
    }

    #[test]
    fn spherical_formula_example() {
        let p = spherical_position(
            Vec3::zero(),
            Vec3::new(0.0, 1.0, 0.0),
            1.0,
            std::f64::consts::FRAC_PI_2,
            0.0,
        );
        assert!((p - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let p = spherical_position(
            Vec3::zero(),
            Vec3::new(0.0, 1.0, 0.0),
            1.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
        );
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        let p = spherical_position(Vec3::zero(), Vec3::new(0.0, 1.0, 0.0), 2.0, 0.0, 1.0);
        assert!((p - Vec3::new(0.0, 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn camera_stats_for_equatorial_ring() {
        let cams: Vec<_> = (0..6)
            .map(|i| {
                let a = i as f64;
                let p = Vec3::new(a.cos() * 3.0, 0.0, a.sin() * 3.0);
                let r = look_at(p, Vec3::zero(), Vec3::new(0.0, 1.0, 0.0)).unwrap();
                cam(50.0, 32.0, r, -r.mul_vec(p))
            })
            .collect();
        let up = estimate_up(&cams).unwrap();
        assert!((up - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        let split = compute_scene_split(&cams).unwrap();
        let stats = compute_camera_stats(&cams, &split, up).unwrap();
        assert!((stats.mean_elevation - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!(stats.std_elevation < 1e-9);
    }

    #[test]
    fn augmented_samples_stay_on_shell() {
        let split = SceneSplit::new(Vec3::new(0.5, -1.0, 2.0), 2.0).unwrap();
        let stats = CameraStats {
            mean_elevation: 1.2,
            std_elevation: 0.3,
            up: Vec3::new(0.0, 0.0, 1.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let pose = sample_augmented_camera(&split, &stats, &mut rng).unwrap();
            let d = (pose.position - split.center).norm();
            assert!((1.2 - 1e-12..=2.0 + 1e-12).contains(&d), "{d}");
            assert!(pose.rotation.orthonormality_error() < 1e-9);
            let theta = f64::acos((pose.position - split.center).dot(stats.up) / d);
            assert!(theta >= 1.2 - 0.45 - 1e-9 && theta <= 1.2 + 0.45 + 1e-9);
        }
    }

    #[test]
    fn augmented_samples_are_reproducible() {
        let split = SceneSplit::new(Vec3::zero(), 1.0).unwrap();
        let stats = CameraStats {
            mean_elevation: 1.0,
            std_elevation: 0.2,
            up: Vec3::new(0.0, 1.0, 0.0),
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_augmented_camera(&split, &stats, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }
}
