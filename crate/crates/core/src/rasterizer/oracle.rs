//! Exhaustive reference rasterizers: every pixel against every primitive,
//! no binning, no tiling, no parallelism.

use super::{
    ndc_scale, pixel_center_ndc, pixel_center_ray, point_candidate, project_ndc,
    ray_triangle_intersect, MeshFragment, MeshFragmentBuffer, PointFragment, PointFragmentBuffer,
};
use crate::geometry::{Camera, TriangleMesh};
use crate::linalg::Vec3;
use crate::scalar::Real;

pub fn oracle_rasterize_points<T: Real>(
    points: &[Vec3<T>],
    cam: &Camera<T>,
    radius: T,
) -> PointFragmentBuffer<T> {
    let (w, h) = (cam.width, cam.height);
    let mut out = PointFragmentBuffer::empty(w, h);
    if !(radius > T::zero()) {
        return out;
    }
    let scale = ndc_scale::<T>(w, h);
    for y in 0..h {
        for x in 0..w {
            let px = pixel_center_ndc(x, w, scale);
            let py = pixel_center_ndc(y, h, scale);
            let slot = &mut out.fragments[y * w + x];
            for (i, &p) in points.iter().enumerate() {
                let Some(proj) = project_ndc(p, cam, scale) else {
                    continue;
                };
                let Some(weight) = point_candidate(proj, px, py, radius) else {
                    continue;
                };
                let better = match slot.point {
                    None => true,
                    Some(j) => proj[2] < slot.depth || (proj[2] == slot.depth && i < j),
                };
                if better {
                    *slot = PointFragment {
                        point: Some(i),
                        weight,
                        depth: proj[2],
                    };
                }
            }
        }
    }
    out
}

pub fn oracle_rasterize_mesh<T: Real>(
    mesh: &TriangleMesh<T>,
    cam: &Camera<T>,
) -> MeshFragmentBuffer<T> {
    let (w, h) = (cam.width, cam.height);
    let mut out = MeshFragmentBuffer::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            let dir = pixel_center_ray(cam, x, y);
            let slot = &mut out.fragments[y * w + x];
            for (fi, face) in mesh.faces.iter().enumerate() {
                let [a, b, c] = face.map(|i| cam.world_to_camera(mesh.vertices[i]));
                let Some(hit) = ray_triangle_intersect(Vec3::zero(), dir, a, b, c) else {
                    continue;
                };
                let depth = hit.t * dir.z;
                if !(depth > T::zero()) {
                    continue;
                }
                let better = match slot.face {
                    None => true,
                    Some(j) => depth < slot.depth || (depth == slot.depth && fi < j),
                };
                if better {
                    *slot = MeshFragment {
                        face: Some(fi),
                        barycentrics: hit.barycentrics,
                        depth,
                    };
                }
            }
        }
    }
    out
}
