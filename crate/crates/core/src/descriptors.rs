//! Spherical-harmonic vertex descriptors and their evaluation into
//! view-dependent feature images.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{pixel_ray_direction, Camera};
use crate::image::Image;
use crate::linalg::Vec3;
use crate::rasterizer::{MeshFragmentBuffer, PointFragmentBuffer};
use crate::scalar::Real;

/// Number of real SH basis functions for bands `l ≤ 2`.
pub const SH_COEFFS: usize = 9;
/// Feature channels carried by each SH coefficient.
pub const FEATURE_DIM: usize = 8;
/// Scalars per vertex descriptor.
pub const DESCRIPTOR_LEN: usize = SH_COEFFS * FEATURE_DIM;
/// Channels of a concatenated point+mesh feature image with both masks.
pub const CONCAT_CHANNELS: usize = 2 * FEATURE_DIM + 2;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2_XY: f64 = 1.092_548_430_592_079_2;
pub const SH_C2_ZZ: f64 = 0.315_391_565_252_520_05;
pub const SH_C2_XX_YY: f64 = 0.546_274_215_296_039_6;

/// Number of basis functions in bands `0..=degree`.
pub fn sh_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Real SH basis in `(l, m)` order `(0,0), (1,-1), (1,0), (1,1), (2,-2),
/// (2,-1), (2,0), (2,1), (2,2)`. `dir` must be a unit vector.
pub fn sh_basis<T: Real>(dir: Vec3<T>) -> [T; SH_COEFFS] {
    let Vec3 { x, y, z } = dir;
    let c1 = T::lit(SH_C1);
    let c2 = T::lit(SH_C2_XY);
    [
        T::lit(SH_C0),
        c1 * y,
        c1 * z,
        c1 * x,
        c2 * x * y,
        c2 * y * z,
        T::lit(SH_C2_ZZ) * (T::lit(3.0) * z * z - T::one()),
        c2 * x * z,
        T::lit(SH_C2_XX_YY) * (x * x - y * y),
    ]
}

/// Per-vertex SH coefficients, `N × 9 × 8`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet<T> {
    count: usize,
    data: Vec<T>,
}

impl<T: Real> DescriptorSet<T> {
    pub fn zeros(count: usize) -> Self {
        Self {
            count,
            data: vec![T::zero(); count * DESCRIPTOR_LEN],
        }
    }

    pub fn from_vec(count: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != count * DESCRIPTOR_LEN {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {count} descriptors of {DESCRIPTOR_LEN}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("descriptor values must be finite".into()));
        }
        Ok(Self { count, data })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// The 72 coefficients of vertex `n`, indexed `[k * 8 + c]`.
    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        &self.data[n * DESCRIPTOR_LEN..(n + 1) * DESCRIPTOR_LEN]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize) -> &mut [T] {
        &mut self.data[n * DESCRIPTOR_LEN..(n + 1) * DESCRIPTOR_LEN]
    }

    /// Feature vector of coefficient `k` of vertex `n`.
    pub fn coeff(&self, n: usize, k: usize) -> &[T] {
        &self.row(n)[k * FEATURE_DIM..(k + 1) * FEATURE_DIM]
    }

    pub fn coeff_mut(&mut self, n: usize, k: usize) -> &mut [T] {
        &mut self.row_mut(n)[k * FEATURE_DIM..(k + 1) * FEATURE_DIM]
    }

    pub fn cast<U: Real>(&self) -> DescriptorSet<U> {
        DescriptorSet {
            count: self.count,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

/// `out += scale · Σ_k row[k, :] · basis[k]`.
#[inline]
pub(crate) fn contract_into<T: Real>(row: &[T], basis: &[T; SH_COEFFS], scale: T, out: &mut [T]) {
    for (k, &b) in basis.iter().enumerate() {
        let s = scale * b;
        let coeffs = &row[k * FEATURE_DIM..(k + 1) * FEATURE_DIM];
        for (o, &c) in out.iter_mut().zip(coeffs) {
            *o += s * c;
        }
    }
}

/// Rasterized features with a per-pixel occupancy mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage<T> {
    pub image: Image<T>,
    pub mask: Vec<bool>,
}

impl<T: Real> FeatureImage<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            image: Image::zeros(width, height, channels),
            mask: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    pub fn channels(&self) -> usize {
        self.image.channels
    }
}

fn check_buffer_size<T: Real>(w: usize, h: usize, cam: &Camera<T>) -> Result<()> {
    if (w, h) != (cam.width, cam.height) {
        return Err(Error::DimensionMismatch(format!(
            "fragment buffer {w}x{h} vs camera {}x{}",
            cam.width, cam.height
        )));
    }
    Ok(())
}

/// World-frame unit ray direction through the center of every pixel.
pub fn pixel_directions<T: Real>(cam: &Camera<T>) -> Vec<Vec3<T>> {
    let half = T::lit(0.5);
    (0..cam.height)
        .flat_map(|y| (0..cam.width).map(move |x| (x, y)))
        .map(|(x, y)| {
            pixel_ray_direction(
                T::from_usize_lossy(x) + half,
                T::from_usize_lossy(y) + half,
                cam,
            )
        })
        .collect()
}

/// Point features: `w · Σ_k K(p)[k] Φ_k(d)` at each occupied pixel.
pub fn eval_point_features<T: Real>(
    buf: &PointFragmentBuffer<T>,
    desc: &DescriptorSet<T>,
    cam: &Camera<T>,
) -> Result<FeatureImage<T>> {
    check_buffer_size(buf.width, buf.height, cam)?;
    for frag in &buf.fragments {
        if let Some(i) = frag.point {
            if i >= desc.len() {
                return Err(Error::IndexOutOfRange {
                    what: "descriptors",
                    index: i,
                    len: desc.len(),
                });
            }
        }
    }
    Ok(point_features_with_basis(buf, desc, &view_basis(cam)))
}

/// SH basis of the world-frame ray through every pixel center, row-major.
pub fn view_basis<T: Real>(cam: &Camera<T>) -> Vec<[T; SH_COEFFS]> {
    pixel_directions(cam).into_iter().map(sh_basis).collect()
}

pub(crate) fn point_features_with_basis<T: Real>(
    buf: &PointFragmentBuffer<T>,
    desc: &DescriptorSet<T>,
    basis: &[[T; SH_COEFFS]],
) -> FeatureImage<T> {
    let mut out = FeatureImage::zeros(buf.width, buf.height, FEATURE_DIM);
    out.mask = buf.occupancy();
    let w = buf.width;
    out.image
        .data
        .par_chunks_mut(w * FEATURE_DIM)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let frag = buf.get(x, y);
                let Some(i) = frag.point else { continue };
                contract_into(
                    desc.row(i),
                    &basis[y * w + x],
                    frag.weight,
                    &mut row[x * FEATURE_DIM..(x + 1) * FEATURE_DIM],
                );
            }
        });
    out
}

/// Resolves the descriptor rows of the three corners of face `fi`.
#[inline]
pub(crate) fn face_rows(
    faces: &[[usize; 3]],
    fi: usize,
    vertex_map: Option<&[usize]>,
) -> [usize; 3] {
    let f = faces[fi];
    match vertex_map {
        Some(map) => f.map(|i| map[i]),
        None => f,
    }
}

pub(crate) fn validate_mesh_refs<T: Real>(
    buf: &MeshFragmentBuffer<T>,
    faces: &[[usize; 3]],
    vertex_map: Option<&[usize]>,
    rows: usize,
) -> Result<()> {
    for frag in &buf.fragments {
        let Some(fi) = frag.face else { continue };
        if fi >= faces.len() {
            return Err(Error::IndexOutOfRange {
                what: "faces",
                index: fi,
                len: faces.len(),
            });
        }
        for &v in &faces[fi] {
            let row = match vertex_map {
                Some(map) => *map.get(v).ok_or(Error::IndexOutOfRange {
                    what: "vertex map entries",
                    index: v,
                    len: map.len(),
                })?,
                None => v,
            };
            if row >= rows {
                return Err(Error::IndexOutOfRange {
                    what: "descriptors",
                    index: row,
                    len: rows,
                });
            }
        }
    }
    Ok(())
}

/// Mesh features: barycentric blend of the three corner descriptors,
/// contracted with the SH basis of the pixel ray. `vertex_map` sends mesh
/// vertex indices to descriptor rows; `None` is the identity.
pub fn eval_mesh_features<T: Real>(
    buf: &MeshFragmentBuffer<T>,
    faces: &[[usize; 3]],
    desc: &DescriptorSet<T>,
    vertex_map: Option<&[usize]>,
    cam: &Camera<T>,
) -> Result<FeatureImage<T>> {
    check_buffer_size(buf.width, buf.height, cam)?;
    validate_mesh_refs(buf, faces, vertex_map, desc.len())?;
    Ok(mesh_features_with_basis(buf, faces, desc, vertex_map, &view_basis(cam)))
}

pub(crate) fn mesh_features_with_basis<T: Real>(
    buf: &MeshFragmentBuffer<T>,
    faces: &[[usize; 3]],
    desc: &DescriptorSet<T>,
    vertex_map: Option<&[usize]>,
    basis: &[[T; SH_COEFFS]],
) -> FeatureImage<T> {
    let mut out = FeatureImage::zeros(buf.width, buf.height, FEATURE_DIM);
    out.mask = buf.occupancy();
    let w = buf.width;
    out.image
        .data
        .par_chunks_mut(w * FEATURE_DIM)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let frag = buf.get(x, y);
                let Some(fi) = frag.face else { continue };
                let corners = face_rows(faces, fi, vertex_map);
                let px = &mut row[x * FEATURE_DIM..(x + 1) * FEATURE_DIM];
                for (&v, &b) in corners.iter().zip(&frag.barycentrics) {
                    contract_into(desc.row(v), &basis[y * w + x], b, px);
                }
            }
        });
    out
}

/// `[point features | mesh features | point mask | mesh mask]`.
pub fn concat_features<T: Real>(
    pt: &FeatureImage<T>,
    mesh: &FeatureImage<T>,
) -> Result<FeatureImage<T>> {
    if pt.width() != mesh.width() || pt.height() != mesh.height() {
        return Err(Error::DimensionMismatch(format!(
            "point features {}x{} vs mesh features {}x{}",
            pt.width(),
            pt.height(),
            mesh.width(),
            mesh.height()
        )));
    }
    let (cp, cm) = (pt.channels(), mesh.channels());
    let channels = cp + cm + 2;
    let mut out = FeatureImage::zeros(pt.width(), pt.height(), channels);
    for (i, px) in out.image.data.chunks_exact_mut(channels).enumerate() {
        px[..cp].copy_from_slice(&pt.image.data[i * cp..(i + 1) * cp]);
        px[cp..cp + cm].copy_from_slice(&mesh.image.data[i * cm..(i + 1) * cm]);
        if pt.mask[i] {
            px[cp + cm] = T::one();
        }
        if mesh.mask[i] {
            px[cp + cm + 1] = T::one();
        }
        out.mask[i] = pt.mask[i] || mesh.mask[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;
    use crate::rasterizer::{MeshFragment, PointFragment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(w: usize, h: usize) -> Camera<f64> {
        Camera::new(
            10.0,
            12.0,
            w as f64 / 2.0,
            h as f64 / 2.0,
            Mat3::identity(),
            Vec3::zero(),
            w,
            h,
        )
        .unwrap()
    }

    fn random_desc(n: usize, rng: &mut ChaCha8Rng) -> DescriptorSet<f64> {
        let data = (0..n * DESCRIPTOR_LEN).map(|_| rng.random_range(-1.0..1.0)).collect();
        DescriptorSet::from_vec(n, data).unwrap()
    }

    #[test]
    fn sh_examples() {
        let b = sh_basis(Vec3::new(0.0f64, 0.0, 1.0));
        assert!((b[0] - 0.2820948).abs() < 1e-7);
        assert!((b[2] - 0.4886025).abs() < 1e-7);
        assert_eq!(b[1], 0.0);
        assert_eq!(b[3], 0.0);
        assert!((SH_C0 - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((SH_C1 - (3.0 / (4.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn band_one_addition_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let b = sh_basis(d);
            let s = b[1] * b[1] + b[2] * b[2] + b[3] * b[3];
            assert!((s - 3.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-9);
            let s2: f64 = b[4..].iter().map(|v| v * v).sum();
            assert!((s2 - 5.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-9);
        }
    }

    #[test]
    fn band_zero_is_isotropic() {
        let mut desc = DescriptorSet::zeros(1);
        desc.coeff_mut(0, 0).fill(1.0);
        let mut buf = PointFragmentBuffer::empty(4, 3);
        buf.fragments[0] = PointFragment { point: Some(0), weight: 1.0, depth: 1.0 };
        buf.fragments[11] = PointFragment { point: Some(0), weight: 1.0, depth: 1.0 };
        let f = eval_point_features(&buf, &desc, &cam(4, 3)).unwrap();
        for c in 0..FEATURE_DIM {
            assert!((f.image.pixel(0, 0)[c] - 0.2820948).abs() < 1e-7);
            assert_eq!(f.image.pixel(0, 0)[c], f.image.pixel(3, 2)[c]);
        }
        assert_eq!(f.mask.iter().filter(|&&m| m).count(), 2);
        assert!(f.image.pixel(1, 0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn point_features_reject_bad_index() {
        let desc = DescriptorSet::<f64>::zeros(2);
        let mut buf = PointFragmentBuffer::empty(2, 2);
        buf.fragments[3].point = Some(2);
        assert!(matches!(
            eval_point_features(&buf, &desc, &cam(2, 2)),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn mesh_features_rejects_bad_references() {
        let desc = DescriptorSet::<f64>::zeros(3);
        let mut buf = MeshFragmentBuffer::empty(2, 2);
        buf.fragments[0].face = Some(0);
        let faces = [[0, 1, 3]];
        assert!(eval_mesh_features(&buf, &faces, &desc, None, &cam(2, 2)).is_err());
        let faces = [[0, 1, 2]];
        assert!(eval_mesh_features(&buf, &faces, &desc, None, &cam(2, 2)).is_ok());
        assert!(eval_mesh_features(&buf, &faces, &desc, Some(&[0, 1]), &cam(2, 2)).is_err());
        buf.fragments[1].face = Some(1);
        assert!(eval_mesh_features(&buf, &faces, &desc, None, &cam(2, 2)).is_err());
    }

    #[test]
    fn mesh_vertex_hit_equals_single_descriptor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let desc = random_desc(3, &mut rng);
        let c = cam(3, 3);
        let mut mbuf = MeshFragmentBuffer::empty(3, 3);
        mbuf.fragments[4] = MeshFragment { face: Some(0), barycentrics: [0.0, 1.0, 0.0], depth: 1.0 };
        let mut pbuf = PointFragmentBuffer::empty(3, 3);
        pbuf.fragments[4] = PointFragment { point: Some(1), weight: 1.0, depth: 1.0 };
        let m = eval_mesh_features(&mbuf, &[[0, 1, 2]], &desc, None, &c).unwrap();
        let p = eval_point_features(&pbuf, &desc, &c).unwrap();
        for ch in 0..FEATURE_DIM {
            assert!((m.image.pixel(1, 1)[ch] - p.image.pixel(1, 1)[ch]).abs() < 1e-12);
        }
    }

    #[test]
    fn shared_descriptor_is_independent_of_barycentrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let one = random_desc(1, &mut rng);
        let mut desc = DescriptorSet::zeros(3);
        for n in 0..3 {
            desc.row_mut(n).copy_from_slice(one.row(0));
        }
        let c = cam(2, 1);
        let mut buf = MeshFragmentBuffer::empty(2, 1);
        buf.fragments[0] = MeshFragment { face: Some(0), barycentrics: [0.2, 0.3, 0.5], depth: 1.0 };
        buf.fragments[1] = MeshFragment { face: Some(0), barycentrics: [0.7, 0.1, 0.2], depth: 1.0 };
        // same ray for both pixels
        let c = Camera { cx: 1.0, width: 2, ..c };
        let f = eval_mesh_features(&buf, &[[0, 1, 2]], &desc, None, &c).unwrap();
        let d0 = pixel_ray_direction(0.5, 0.5, &c);
        let d1 = pixel_ray_direction(1.5, 0.5, &c);
        let mut want0 = [0.0; FEATURE_DIM];
        let mut want1 = [0.0; FEATURE_DIM];
        contract_into(one.row(0), &sh_basis(d0), 1.0, &mut want0);
        contract_into(one.row(0), &sh_basis(d1), 1.0, &mut want1);
        for ch in 0..FEATURE_DIM {
            assert!((f.image.pixel(0, 0)[ch] - want0[ch]).abs() < 1e-12);
            assert!((f.image.pixel(1, 0)[ch] - want1[ch]).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_map_redirects_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let desc = random_desc(5, &mut rng);
        let c = cam(1, 1);
        let mut buf = MeshFragmentBuffer::empty(1, 1);
        buf.fragments[0] = MeshFragment { face: Some(0), barycentrics: [0.0, 0.0, 1.0], depth: 1.0 };
        let f = eval_mesh_features(&buf, &[[0, 1, 2]], &desc, Some(&[4, 3, 1]), &c).unwrap();
        let mut want = [0.0; FEATURE_DIM];
        contract_into(desc.row(1), &sh_basis(Vec3::new(0.0, 0.0, 1.0)), 1.0, &mut want);
        for ch in 0..FEATURE_DIM {
            assert!((f.image.data[ch] - want[ch]).abs() < 1e-12);
        }
    }

    #[test]
    fn concat_layout() {
        let mut pt = FeatureImage::<f64>::zeros(2, 1, FEATURE_DIM);
        let mesh = FeatureImage::<f64>::zeros(2, 1, FEATURE_DIM);
        let both = concat_features(&pt, &mesh).unwrap();
        assert_eq!(both.channels(), 18);
        assert!(both.image.data.iter().all(|&v| v == 0.0));
        assert!(both.mask.iter().all(|&m| !m));

        pt.mask[1] = true;
        pt.image.pixel_mut(1, 0)[3] = 2.5;
        let both = concat_features(&pt, &mesh).unwrap();
        assert_eq!(&both.image.pixel(1, 0)[16..], &[1.0, 0.0]);
        assert_eq!(both.image.pixel(1, 0)[3], 2.5);
        assert_eq!(both.mask, vec![false, true]);

        let small = FeatureImage::<f64>::zeros(1, 1, FEATURE_DIM);
        assert!(matches!(
            concat_features(&pt, &small),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
