use rayon::prelude::*;

use super::{
    pixel_center_ray, ray_triangle_intersect, saturating_pixel, MeshFragment, MeshFragmentBuffer,
    RasterOptions, TileGrid,
};
use crate::geometry::{Camera, TriangleMesh, DEPTH_EPSILON};
use crate::linalg::Vec3;
use crate::scalar::Real;

/// Ray-casts every pixel center against the mesh.
pub fn rasterize_mesh<T: Real>(mesh: &TriangleMesh<T>, cam: &Camera<T>) -> MeshFragmentBuffer<T> {
    rasterize_mesh_with(mesh, cam, &RasterOptions::default())
}

pub fn rasterize_mesh_with<T: Real>(
    mesh: &TriangleMesh<T>,
    cam: &Camera<T>,
    opts: &RasterOptions,
) -> MeshFragmentBuffer<T> {
    let (w, h) = (cam.width, cam.height);
    let mut out = MeshFragmentBuffer::empty(w, h);
    if mesh.faces.is_empty() {
        return out;
    }
    let cam_vertices: Vec<Vec3<T>> = mesh
        .vertices
        .iter()
        .map(|&p| cam.world_to_camera(p))
        .collect();

    let grid = TileGrid::new(w, h, opts.tile_size);
    let mut bins = vec![Vec::new(); grid.len()];
    for (fi, face) in mesh.faces.iter().enumerate() {
        let tri = face.map(|i| cam_vertices[i]);
        let zmax = tri.iter().map(|p| p.z).fold(T::neg_infinity(), T::max);
        let zmin = tri.iter().map(|p| p.z).fold(T::infinity(), T::min);
        let zabs = tri.iter().map(|p| p.z.abs()).fold(T::zero(), T::max);
        if !(zmax.is_finite() && zmin.is_finite()) {
            continue;
        }
        // entirely behind the camera: even with barycentric slack no hit
        // can reach positive depth
        if zmax < -T::lit(1e-6) * zabs {
            continue;
        }
        // straddling the camera plane or with extreme depth ratios the
        // projected box is unreliable; test everywhere
        if zmin <= T::lit(DEPTH_EPSILON) || zmin < T::lit(1e-3) * zmax {
            grid.bin_all(&mut bins, fi);
            continue;
        }
        let mut umin = T::infinity();
        let mut umax = T::neg_infinity();
        let mut vmin = T::infinity();
        let mut vmax = T::neg_infinity();
        for p in tri {
            let u = cam.fx * p.x / p.z + cam.cx;
            let v = cam.fy * p.y / p.z + cam.cy;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        // pixel x has its center at x + 0.5; pad by two pixels
        let pad = T::lit(2.5);
        let x = (
            saturating_pixel((umin - pad).floor(), w),
            saturating_pixel((umax + pad).ceil(), w),
        );
        let y = (
            saturating_pixel((vmin - pad).floor(), h),
            saturating_pixel((vmax + pad).ceil(), h),
        );
        grid.bin(&mut bins, fi, x, y);
    }

    let tiles: Vec<Vec<(usize, MeshFragment<T>)>> = (0..grid.len())
        .into_par_iter()
        .map(|t| {
            let (x0, x1, y0, y1) = grid.bounds(t);
            let mut hits = Vec::new();
            if bins[t].is_empty() {
                return hits;
            }
            for y in y0..y1 {
                for x in x0..x1 {
                    let dir = pixel_center_ray(cam, x, y);
                    let mut best = MeshFragment::empty();
                    for &fi in &bins[t] {
                        let [a, b, c] = mesh.faces[fi].map(|i| cam_vertices[i]);
                        let Some(hit) = ray_triangle_intersect(Vec3::zero(), dir, a, b, c) else {
                            continue;
                        };
                        let depth = hit.t * dir.z;
                        if depth > T::zero() && (best.face.is_none() || depth < best.depth) {
                            best = MeshFragment {
                                face: Some(fi),
                                barycentrics: hit.barycentrics,
                                depth,
                            };
                        }
                    }
                    if best.face.is_some() {
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
