use crate::linalg::Vec3;
use crate::scalar::Real;

const BARY_TOLERANCE: f64 = 1e-9;
const MIN_T: f64 = 1e-9;
const MIN_AREA: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T> {
    pub t: T,
    pub barycentrics: [T; 3],
}

/// Möller–Trumbore intersection of `origin + t·dir` with triangle
/// `(v0, v1, v2)`. Barycentrics are returned in vertex order and sum to 1.
/// Degenerate triangles, parallel rays and hits with `t ≤ 1e-9` miss.
pub fn ray_triangle_intersect<T: Real>(
    origin: Vec3<T>,
    dir: Vec3<T>,
    v0: Vec3<T>,
    v1: Vec3<T>,
    v2: Vec3<T>,
) -> Option<RayHit<T>> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let twice_area = e1.cross(e2).norm();
    if !(twice_area * T::lit(0.5) >= T::lit(MIN_AREA)) {
        return None;
    }
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if !(det.abs() > T::lit(1e-12) * twice_area) {
        return None;
    }
    let inv = T::one() / det;
    let s = origin - v0;
    let beta = s.dot(p) * inv;
    let q = s.cross(e1);
    let gamma = dir.dot(q) * inv;
    let alpha = T::one() - beta - gamma;
    let tol = -T::lit(BARY_TOLERANCE);
    if !(alpha >= tol && beta >= tol && gamma >= tol) {
        return None;
    }
    let t = e2.dot(q) * inv;
    if !(t > T::lit(MIN_T)) {
        return None;
    }
    Some(RayHit {
        t,
        barycentrics: [alpha, beta, gamma],
    })
}
