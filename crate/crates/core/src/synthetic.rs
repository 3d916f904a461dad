//! Procedural scenes with known ground truth: geometry, posed cameras and
//! target images rendered from per-vertex colors.

use std::collections::HashMap;

use crate::diffrender::fit::TrainingView;
use crate::error::Result;
use rand::Rng;

use crate::geometry::{Camera, Intrinsics, SceneSplit, TriangleMesh};
use crate::image::Image;
use crate::linalg::Vec3;
use crate::rasterizer::{pixel_center_ray, rasterize_mesh, MeshFragmentBuffer};
use crate::scalar::Real;

/// Closed axis-aligned cube whose faces are split into `divisions²` quads,
/// two triangles each. Vertices on shared edges are shared.
pub fn subdivided_cube<T: Real>(center: Vec3<T>, half: T, divisions: usize) -> TriangleMesh<T> {
    let n = divisions.max(1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |lattice: [usize; 3]| -> usize {
        *index.entry(lattice).or_insert_with(|| {
            let coord = |i: usize| {
                T::lit(2.0 * i as f64 / n as f64 - 1.0) * half
            };
            vertices.push(center + Vec3::new(coord(lattice[0]), coord(lattice[1]), coord(lattice[2])));
            vertices.len() - 1
        })
    };
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut l = [0; 3];
                        l[axis] = side;
                        l[a] = i + di;
                        l[b] = j + dj;
                        l
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)].map(&mut vertex);
                    if side == 0 {
                        faces.push([q[0], q[2], q[1]]);
                        faces.push([q[0], q[3], q[2]]);
                    } else {
                        faces.push([q[0], q[1], q[2]]);
                        faces.push([q[0], q[2], q[3]]);
                    }
                }
            }
        }
    }
    TriangleMesh { vertices, faces }
}

/// Appends `other` to `mesh`, offsetting its face indices.
pub fn merge_meshes<T: Real>(mesh: &mut TriangleMesh<T>, other: &TriangleMesh<T>) {
    let base = mesh.vertices.len();
    mesh.vertices.extend_from_slice(&other.vertices);
    mesh.faces
        .extend(other.faces.iter().map(|f| f.map(|i| i + base)));
}

/// Cameras on a horizontal ring (up = +y) around `target`, alternating
/// between the given elevation offsets.
pub fn ring_cameras<T: Real>(
    intrinsics: Intrinsics<T>,
    target: Vec3<T>,
    radius: f64,
    count: usize,
    heights: &[f64],
) -> Result<Vec<Camera<T>>> {
    let up = Vec3::new(T::zero(), T::one(), T::zero());
    (0..count)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / count as f64 + 0.1;
            let h = heights[i % heights.len().max(1)];
            let pos = target + Vec3::new(T::lit(radius * a.sin()), T::lit(h), T::lit(radius * a.cos()));
            Camera::looking_at(intrinsics, pos, target, up)
        })
        .collect()
}

/// Renders barycentric interpolation of per-vertex colors; empty pixels
/// take `background`.
pub fn render_vertex_colors<T: Real>(
    mesh: &TriangleMesh<T>,
    colors: &[[T; 3]],
    cam: &Camera<T>,
    background: [T; 3],
) -> Image<T> {
    let buf = rasterize_mesh(mesh, cam);
    shade(&buf, cam, background, |fi, bary, _| {
        let f = mesh.faces[fi];
        let mut c = [T::zero(); 3];
        for (&v, &b) in f.iter().zip(&bary) {
            for k in 0..3 {
                c[k] += b * colors[v][k];
            }
        }
        c
    })
}

/// Per-pixel shading callback over a mesh fragment buffer: `(face,
/// barycentrics, world ray direction) -> rgb`.
pub fn shade<T: Real>(
    buf: &MeshFragmentBuffer<T>,
    cam: &Camera<T>,
    background: [T; 3],
    mut f: impl FnMut(usize, [T; 3], Vec3<T>) -> [T; 3],
) -> Image<T> {
    let mut img = Image::zeros(buf.width, buf.height, 3);
    let to_world = cam.rotation.transpose();
    for y in 0..buf.height {
        for x in 0..buf.width {
            let frag = buf.get(x, y);
            let rgb = match frag.face {
                Some(fi) => {
                    let d = to_world.mul_vec(pixel_center_ray(cam, x, y));
                    f(fi, frag.barycentrics, d)
                }
                None => background,
            };
            img.pixel_mut(x, y).copy_from_slice(&rgb);
        }
    }
    img
}

/// Smooth procedural albedo in `[0.15, 0.85]`.
pub fn procedural_color<T: Real>(p: Vec3<T>) -> [T; 3] {
    let [x, y, z] = p.to_array().map(|v| v.to_f64_lossy());
    let c = [
        0.5 + 0.35 * (2.1 * x + 0.7 * y + 0.3).sin(),
        0.5 + 0.35 * (1.7 * y - 1.3 * z + 1.1).sin(),
        0.5 + 0.35 * (1.9 * z + 1.2 * x - 0.4).cos(),
    ];
    c.map(T::lit)
}

/// A complete synthetic capture.
#[derive(Debug, Clone)]
pub struct SyntheticScene<T> {
    pub mesh: TriangleMesh<T>,
    pub views: Vec<TrainingView<T>>,
    /// Number of leading vertices that belong to the foreground object.
    pub object_vertices: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SceneParams {
    pub size: usize,
    pub views: usize,
    pub cube_divisions: usize,
    pub backdrop: bool,
    /// Distance of the camera ring from the cube center.
    pub ring_radius: f64,
    /// Focal length in units of the image size.
    pub focal: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            size: 64,
            views: 12,
            cube_divisions: 9,
            backdrop: false,
            ring_radius: 3.0,
            focal: 1.0,
        }
    }
}

const RING_HEIGHTS: [f64; 3] = [0.9, -0.6, 0.2];
const CUBE_HALF: f64 = 0.7;
const BACKDROP_HALF: f64 = 8.0;

fn base_geometry<T: Real>(params: &SceneParams) -> Result<(TriangleMesh<T>, usize, Vec<Camera<T>>)> {
    let mut mesh = subdivided_cube(Vec3::zero(), T::lit(CUBE_HALF), params.cube_divisions);
    let object_vertices = mesh.vertices.len();
    if params.backdrop {
        merge_meshes(&mut mesh, &subdivided_cube(Vec3::zero(), T::lit(BACKDROP_HALF), 4));
    }
    let s = params.size as f64;
    let intrinsics = Intrinsics {
        fx: T::lit(s * params.focal),
        fy: T::lit(s * params.focal),
        cx: T::lit(s / 2.0),
        cy: T::lit(s / 2.0),
        width: params.size,
        height: params.size,
    };
    let cams = ring_cameras(intrinsics, Vec3::zero(), params.ring_radius, params.views, &RING_HEIGHTS)?;
    Ok((mesh, object_vertices, cams))
}

/// Textured cube inside a textured backdrop box; targets are view
/// independent.
pub fn lambertian_cube_scene<T: Real>(params: &SceneParams) -> Result<SyntheticScene<T>> {
    let (mesh, object_vertices, cams) = base_geometry::<T>(params)?;
    let colors: Vec<[T; 3]> = mesh.vertices.iter().map(|&p| procedural_color(p)).collect();
    let gray = [T::lit(0.5); 3];
    let views = cams
        .into_iter()
        .map(|camera| TrainingView {
            image: render_vertex_colors(&mesh, &colors, &camera, gray),
            camera,
        })
        .collect();
    Ok(SyntheticScene {
        mesh,
        views,
        object_vertices,
    })
}

/// Direction of the fixed light used by [`specular_cube_scene`].
pub fn light_direction<T: Real>() -> Vec3<T> {
    Vec3::new(T::lit(0.4), T::lit(0.8), T::lit(0.45)).normalize()
}

/// Same geometry as [`lambertian_cube_scene`] but each cube face adds a
/// Phong highlight `0.45·max(0, r·L)²` of the mirrored view ray `r`, so
/// the same surface point changes color between views.
pub fn specular_cube_scene<T: Real>(params: &SceneParams) -> Result<SyntheticScene<T>> {
    let (mesh, object_vertices, cams) = base_geometry::<T>(params)?;
    let colors: Vec<[T; 3]> = mesh
        .vertices
        .iter()
        .map(|&p| procedural_color(p).map(|c| c * T::lit(0.7)))
        .collect();
    let light = light_direction::<T>();
    let views = cams
        .into_iter()
        .map(|camera| {
            let buf = rasterize_mesh(&mesh, &camera);
            let image = shade(&buf, &camera, [T::lit(0.5); 3], |fi, bary, d| {
                let f = mesh.faces[fi];
                let mut c = [T::zero(); 3];
                for (&v, &b) in f.iter().zip(&bary) {
                    for k in 0..3 {
                        c[k] += b * colors[v][k];
                    }
                }
                if f.iter().all(|&v| v < object_vertices) {
                    let [a, b, e] = f.map(|i| mesh.vertices[i]);
                    let n = (b - a).cross(e - a).normalize();
                    let r = d - n * (T::lit(2.0) * d.dot(n));
                    let s = r.dot(light).max(T::zero());
                    for ck in &mut c {
                        *ck += T::lit(0.45) * s * s;
                    }
                }
                c
            });
            TrainingView { camera, image }
        })
        .collect();
    Ok(SyntheticScene {
        mesh,
        views,
        object_vertices,
    })
}

/// Small random scene for property tests: a cluster of foreground
/// triangles near the origin, background triangles behind it, cameras on
/// the −z side looking at the origin.
#[derive(Debug, Clone)]
pub struct RandomScene<T> {
    pub mesh: TriangleMesh<T>,
    pub cameras: Vec<Camera<T>>,
    /// Unit sphere at the origin: separates the two clusters.
    pub split: SceneSplit<T>,
}

pub fn random_scene<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    vertices: usize,
    faces: usize,
    size: usize,
    views: usize,
) -> Result<RandomScene<T>> {
    let n_fg = (vertices / 2).max(3);
    let n_bg = vertices.saturating_sub(n_fg).max(3);
    let mut verts = Vec::with_capacity(n_fg + n_bg);
    for _ in 0..n_fg {
        verts.push(Vec3::new(
            T::lit(rng.random_range(-0.5..0.5)),
            T::lit(rng.random_range(-0.5..0.5)),
            T::lit(rng.random_range(-0.5..0.5)),
        ));
    }
    for _ in 0..n_bg {
        verts.push(Vec3::new(
            T::lit(rng.random_range(-1.5..1.5)),
            T::lit(rng.random_range(-1.5..1.5)),
            T::lit(rng.random_range(1.6..2.6)),
        ));
    }
    let mut tris = Vec::with_capacity(faces);
    while tris.len() < faces {
        let (lo, hi) = if rng.random_bool(0.5) { (0, n_fg) } else { (n_fg, n_fg + n_bg) };
        let f = [0; 3].map(|_| rng.random_range(lo..hi));
        if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
            tris.push(f);
        }
    }
    let s = size as f64;
    let intrinsics = Intrinsics {
        fx: T::lit(s),
        fy: T::lit(s),
        cx: T::lit(s / 2.0),
        cy: T::lit(s / 2.0),
        width: size,
        height: size,
    };
    let up = Vec3::new(T::zero(), T::one(), T::zero());
    let cameras = (0..views)
        .map(|_| {
            let pos = Vec3::new(
                T::lit(rng.random_range(-0.8..0.8)),
                T::lit(rng.random_range(-0.8..0.8)),
                T::lit(rng.random_range(-4.5..-3.5)),
            );
            Camera::looking_at(intrinsics, pos, Vec3::zero(), up)
        })
        .collect::<Result<_>>()?;
    Ok(RandomScene {
        mesh: TriangleMesh::new(verts, tris)?,
        cameras,
        split: SceneSplit::new(Vec3::zero(), T::one())?,
    })
}

/// Adversarial rasterizer input: one camera, points reused as mesh
/// vertices, with duplicated points (exact depth ties), points behind the
/// camera and faces straddling the image plane.
#[derive(Debug, Clone)]
pub struct RasterCase<T> {
    pub camera: Camera<T>,
    pub mesh: TriangleMesh<T>,
    pub radius: T,
}

pub fn random_raster_case<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    max_points: usize,
    max_faces: usize,
    max_size: usize,
) -> Result<RasterCase<T>> {
    let width = rng.random_range(1..=max_size);
    let height = rng.random_range(1..=max_size);
    let f = rng.random_range(0.5..1.5) * width.max(height) as f64;
    let intrinsics = Intrinsics {
        fx: T::lit(f),
        fy: T::lit(f * rng.random_range(0.8..1.25)),
        cx: T::lit(width as f64 * rng.random_range(0.3..0.7)),
        cy: T::lit(height as f64 * rng.random_range(0.3..0.7)),
        width,
        height,
    };
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3<f64> {
        Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    }
    let position = unit(rng) * 3.0;
    let target = unit(rng) * 0.3;
    let mut up = unit(rng);
    if up.norm() < 0.1 || (target - position).normalize().cross(up.normalize()).norm() < 0.1 {
        up = Vec3::new(0.0, 1.0, 0.0);
    }
    let cast = |v: Vec3<f64>| Vec3::new(T::lit(v.x), T::lit(v.y), T::lit(v.z));
    let camera = Camera::looking_at(intrinsics, cast(position), cast(target), cast(up))?;

    let n = rng.random_range(3..=max_points.max(3));
    let mut vertices: Vec<Vec3<T>> = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i > 0 && rng.random_bool(0.1) {
            vertices[rng.random_range(0..i)]
        } else if rng.random_bool(0.15) {
            // near or behind the camera
            cast(position + unit(rng) * 1.5)
        } else {
            cast(unit(rng) * 1.5)
        };
        vertices.push(p);
    }
    let mut faces = Vec::new();
    let nf = rng.random_range(0..=max_faces);
    while faces.len() < nf {
        let t = [0; 3].map(|_| rng.random_range(0..n));
        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
            faces.push(t);
        }
    }
    // radius large enough that discs cover several pixels
    let radius = T::lit(rng.random_range(0.006..0.2));
    Ok(RasterCase {
        camera,
        mesh: TriangleMesh::new(vertices, faces)?,
        radius,
    })
}
