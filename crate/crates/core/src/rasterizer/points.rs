use rayon::prelude::*;

use super::{
    ndc_scale, pixel_center_ndc, point_candidate, project_ndc, saturating_pixel, PointFragment,
    PointFragmentBuffer, RasterOptions, TileGrid,
};
use crate::geometry::Camera;
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Rasterizes `points` as discs of NDC radius `radius`. A non-positive
/// radius yields an empty buffer.
pub fn rasterize_points<T: Real>(
    points: &[Vec3<T>],
    cam: &Camera<T>,
    radius: T,
) -> PointFragmentBuffer<T> {
    rasterize_points_with(points, cam, radius, &RasterOptions::default())
}

pub fn rasterize_points_with<T: Real>(
    points: &[Vec3<T>],
    cam: &Camera<T>,
    radius: T,
    opts: &RasterOptions,
) -> PointFragmentBuffer<T> {
    let (w, h) = (cam.width, cam.height);
    let mut out = PointFragmentBuffer::empty(w, h);
    if !(radius > T::zero()) || points.is_empty() {
        return out;
    }
    let scale = ndc_scale::<T>(w, h);
    let projected: Vec<Option<[T; 3]>> = points
        .iter()
        .map(|&p| project_ndc(p, cam, scale))
        .collect();

    let grid = TileGrid::new(w, h, opts.tile_size);
    let mut bins = vec![Vec::new(); grid.len()];
    // disc radius in pixels, padded by one pixel against rounding
    let reach = radius / scale + T::one();
    let half_w = T::from_usize_lossy(w) * T::lit(0.5);
    let half_h = T::from_usize_lossy(h) * T::lit(0.5);
    for (i, proj) in projected.iter().enumerate() {
        let Some([nx, ny, _]) = *proj else { continue };
        // back to pixel units: u = ndc / scale + W/2
        let u = nx / scale + half_w - T::lit(0.5);
        let v = ny / scale + half_h - T::lit(0.5);
        let x = (
            saturating_pixel((u - reach).floor(), w),
            saturating_pixel((u + reach).ceil(), w),
        );
        let y = (
            saturating_pixel((v - reach).floor(), h),
            saturating_pixel((v + reach).ceil(), h),
        );
        grid.bin(&mut bins, i, x, y);
    }

    let tiles: Vec<Vec<(usize, PointFragment<T>)>> = (0..grid.len())
        .into_par_iter()
        .map(|t| {
            let (x0, x1, y0, y1) = grid.bounds(t);
            let mut hits = Vec::new();
            if bins[t].is_empty() {
                return hits;
            }
            for y in y0..y1 {
                let py = pixel_center_ndc(y, h, scale);
                for x in x0..x1 {
                    let px = pixel_center_ndc(x, w, scale);
                    let mut best = PointFragment::empty();
                    for &i in &bins[t] {
                        let proj = projected[i].expect("binned points are visible");
                        if let Some(weight) = point_candidate(proj, px, py, radius) {
                            if best.point.is_none() || proj[2] < best.depth {
                                best = PointFragment {
                                    point: Some(i),
                                    weight,
                                    depth: proj[2],
                                };
                            }
                        }
                    }
                    if best.point.is_some() {
                        hits.push((y * w + x, best));
                    }
                }
            }
            hits
        })
        .collect();
    for (idx, frag) in tiles.into_iter().flatten() {
        out.fragments[idx] = frag;
    }
    out
}
