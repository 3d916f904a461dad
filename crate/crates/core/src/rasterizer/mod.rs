//! Deterministic point and mesh rasterization into per-pixel fragment
//! buffers. One fragment per pixel: the nearest candidate wins, exact depth
//! ties go to the smallest primitive index.

mod intersect;
mod mesh;
mod oracle;
mod points;

pub use intersect::{ray_triangle_intersect, RayHit};
pub use mesh::{rasterize_mesh, rasterize_mesh_with};
pub use oracle::{oracle_rasterize_mesh, oracle_rasterize_points};
pub use points::{rasterize_points, rasterize_points_with};

use crate::geometry::{project_point, Camera};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Point radius in NDC units used for point rasterization.
pub const DEFAULT_POINT_RADIUS: f64 = 0.006;

pub const DEFAULT_TILE_SIZE: usize = 16;

/// Internal execution settings. They never change the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterOptions {
    pub tile_size: usize,
}

impl Default for RasterOptions {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFragment<T> {
    /// Winning point, `None` for an empty pixel.
    pub point: Option<usize>,
    pub weight: T,
    pub depth: T,
}

impl<T: Real> PointFragment<T> {
    pub fn empty() -> Self {
        Self {
            point: None,
            weight: T::zero(),
            depth: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFragmentBuffer<T> {
    pub width: usize,
    pub height: usize,
    pub fragments: Vec<PointFragment<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFragment<T> {
    /// Winning face, `None` for an empty pixel.
    pub face: Option<usize>,
    /// Barycentric coordinates of the hit, in the face's vertex order.
    pub barycentrics: [T; 3],
    pub depth: T,
}

impl<T: Real> MeshFragment<T> {
    pub fn empty() -> Self {
        Self {
            face: None,
            barycentrics: [T::zero(); 3],
            depth: T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshFragmentBuffer<T> {
    pub width: usize,
    pub height: usize,
    pub fragments: Vec<MeshFragment<T>>,
}

macro_rules! buffer_common {
    ($buf:ident, $frag:ident, $field:ident) => {
        impl<T: Real> $buf<T> {
            pub fn empty(width: usize, height: usize) -> Self {
                Self {
                    width,
                    height,
                    fragments: vec![$frag::empty(); width * height],
                }
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> &$frag<T> {
                &self.fragments[y * self.width + x]
            }

            pub fn occupied_count(&self) -> usize {
                self.fragments.iter().filter(|f| f.$field.is_some()).count()
            }

            pub fn occupancy(&self) -> Vec<bool> {
                self.fragments.iter().map(|f| f.$field.is_some()).collect()
            }
        }
    };
}

buffer_common!(PointFragmentBuffer, PointFragment, point);
buffer_common!(MeshFragmentBuffer, MeshFragment, face);

/// Scale from pixels to NDC: the shorter image side spans `[-1, 1]`.
#[inline]
pub(crate) fn ndc_scale<T: Real>(width: usize, height: usize) -> T {
    T::lit(2.0) / T::from_usize_lossy(width.min(height))
}

/// Affine pixel → NDC map along one axis of length `extent`.
#[inline]
pub(crate) fn to_ndc<T: Real>(x: T, extent: usize, scale: T) -> T {
    (x + x - T::from_usize_lossy(extent)) * (scale * T::lit(0.5))
}

/// NDC coordinates of the center of pixel `i`.
#[inline]
pub(crate) fn pixel_center_ndc<T: Real>(i: usize, extent: usize, scale: T) -> T {
    to_ndc(T::from_usize_lossy(i) + T::lit(0.5), extent, scale)
}

/// Projected point in NDC with camera depth; `None` when behind the camera.
#[inline]
pub(crate) fn project_ndc<T: Real>(p: Vec3<T>, cam: &Camera<T>, scale: T) -> Option<[T; 3]> {
    let (u, v, z) = project_point(p, cam).visible()?;
    Some([to_ndc(u, cam.width, scale), to_ndc(v, cam.height, scale), z])
}

/// Squared NDC distance and weight `1 − d²/r²` if the projection is a
/// candidate for the pixel centred at `(px, py)`.
#[inline]
pub(crate) fn point_candidate<T: Real>(proj: [T; 3], px: T, py: T, radius: T) -> Option<T> {
    let dx = px - proj[0];
    let dy = py - proj[1];
    let d2 = dx * dx + dy * dy;
    let r2 = radius * radius;
    if d2 <= r2 {
        Some((T::one() - d2 / r2).max(T::zero()).min(T::one()))
    } else {
        None
    }
}

/// Unit camera-frame direction of the ray through the center of pixel `(x, y)`.
#[inline]
pub fn pixel_center_ray<T: Real>(cam: &Camera<T>, x: usize, y: usize) -> Vec3<T> {
    let half = T::lit(0.5);
    cam.camera_ray(T::from_usize_lossy(x) + half, T::from_usize_lossy(y) + half)
        .normalize()
}

/// Splits a `width×height` image into square tiles of side `tile`.
pub(crate) struct TileGrid {
    pub tile: usize,
    pub cols: usize,
    pub rows: usize,
    pub width: usize,
    pub height: usize,
}

impl TileGrid {
    pub fn new(width: usize, height: usize, tile: usize) -> Self {
        let tile = tile.max(1);
        Self {
            tile,
            cols: width.div_ceil(tile),
            rows: height.div_ceil(tile),
            width,
            height,
        }
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    /// Pixel bounds `(x0, x1, y0, y1)` (exclusive ends) of tile `t`.
    pub fn bounds(&self, t: usize) -> (usize, usize, usize, usize) {
        let (tx, ty) = (t % self.cols, t / self.cols);
        let x0 = tx * self.tile;
        let y0 = ty * self.tile;
        (
            x0,
            (x0 + self.tile).min(self.width),
            y0,
            (y0 + self.tile).min(self.height),
        )
    }

    /// Appends `prim` to every tile overlapping the inclusive pixel box.
    pub fn bin(&self, bins: &mut [Vec<usize>], prim: usize, px: (i64, i64), py: (i64, i64)) {
        let clamp_x = |v: i64| v.clamp(0, self.width as i64 - 1) as usize;
        let clamp_y = |v: i64| v.clamp(0, self.height as i64 - 1) as usize;
        if px.1 < 0 || py.1 < 0 || px.0 >= self.width as i64 || py.0 >= self.height as i64 {
            return;
        }
        let (tx0, tx1) = (clamp_x(px.0) / self.tile, clamp_x(px.1) / self.tile);
        let (ty0, ty1) = (clamp_y(py.0) / self.tile, clamp_y(py.1) / self.tile);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                bins[ty * self.cols + tx].push(prim);
            }
        }
    }

    pub fn bin_all(&self, bins: &mut [Vec<usize>], prim: usize) {
        for b in bins {
            b.push(prim);
        }
    }
}

/// Converts a floating pixel coordinate to an integer, saturating far
/// outside the image so later clamping stays well-defined.
#[inline]
pub(crate) fn saturating_pixel<T: Real>(v: T, limit: usize) -> i64 {
    let v = v.to_f64_lossy();
    if v.is_nan() {
        return 0;
    }
    v.clamp(-2.0, limit as f64 + 2.0) as i64
}
