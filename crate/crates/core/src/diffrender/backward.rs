//! Adjoint of point/mesh feature evaluation. Fragment geometry (winners,
//! weights, barycentrics) is held constant; only descriptor values receive
//! gradient.

use crate::descriptors::{
    face_rows, validate_mesh_refs, view_basis, DescriptorSet, FEATURE_DIM, SH_COEFFS,
};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::image::Image;
use crate::rasterizer::{MeshFragmentBuffer, PointFragmentBuffer};
use crate::scalar::Real;

/// A gradient image plus the channel where an 8-channel feature block starts.
#[derive(Clone, Copy)]
pub(crate) struct GradSlice<'a, T> {
    pub image: &'a Image<T>,
    pub offset: usize,
}

impl<'a, T: Real> GradSlice<'a, T> {
    #[inline]
    fn at(&self, px: usize) -> &'a [T] {
        let start = px * self.image.channels + self.offset;
        &self.image.data[start..start + FEATURE_DIM]
    }
}

/// `dL/dK` given `dL/dk_pt` and `dL/dk_mesh`. Contributions are added in
/// row-major pixel order, point before mesh, so the result is bitwise
/// reproducible.
#[allow(clippy::too_many_arguments)]
pub fn backward_to_descriptors<T: Real>(
    grad_pt: &Image<T>,
    grad_mesh: &Image<T>,
    point_buf: &PointFragmentBuffer<T>,
    mesh_buf: &MeshFragmentBuffer<T>,
    faces: &[[usize; 3]],
    vertex_map: Option<&[usize]>,
    cam: &Camera<T>,
    rows: usize,
) -> Result<DescriptorSet<T>> {
    let size = (cam.width, cam.height);
    for (what, w, h, c) in [
        ("point gradient", grad_pt.width, grad_pt.height, grad_pt.channels),
        ("mesh gradient", grad_mesh.width, grad_mesh.height, grad_mesh.channels),
    ] {
        if (w, h) != size || c != FEATURE_DIM {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {w}x{h}x{c}, expected {}x{}x{FEATURE_DIM}",
                size.0, size.1
            )));
        }
    }
    for (w, h) in [
        (point_buf.width, point_buf.height),
        (mesh_buf.width, mesh_buf.height),
    ] {
        if (w, h) != size {
            return Err(Error::DimensionMismatch(format!(
                "fragment buffer {w}x{h} vs camera {}x{}",
                size.0, size.1
            )));
        }
    }
    let mut out = DescriptorSet::zeros(rows);
    accumulate_descriptor_grads(
        &mut out,
        Some((point_buf, GradSlice { image: grad_pt, offset: 0 })),
        Some((mesh_buf, GradSlice { image: grad_mesh, offset: 0 })),
        faces,
        vertex_map,
        &view_basis(cam),
    )?;
    Ok(out)
}

pub(crate) fn accumulate_descriptor_grads<T: Real>(
    out: &mut DescriptorSet<T>,
    points: Option<(&PointFragmentBuffer<T>, GradSlice<'_, T>)>,
    mesh: Option<(&MeshFragmentBuffer<T>, GradSlice<'_, T>)>,
    faces: &[[usize; 3]],
    vertex_map: Option<&[usize]>,
    basis: &[[T; SH_COEFFS]],
) -> Result<()> {
    let rows = out.len();
    if let Some((buf, _)) = points {
        if let Some(bad) = buf.fragments.iter().filter_map(|f| f.point).find(|&i| i >= rows) {
            return Err(Error::IndexOutOfRange {
                what: "descriptors",
                index: bad,
                len: rows,
            });
        }
    }
    if let Some((buf, _)) = mesh {
        validate_mesh_refs(buf, faces, vertex_map, rows)?;
    }
    for (px, phi) in basis.iter().enumerate() {
        if let Some((buf, grad)) = points {
            let frag = &buf.fragments[px];
            if let Some(i) = frag.point {
                scatter(out.row_mut(i), phi, frag.weight, grad.at(px));
            }
        }
        if let Some((buf, grad)) = mesh {
            let frag = &buf.fragments[px];
            if let Some(fi) = frag.face {
                let g = grad.at(px);
                for (&row, &b) in face_rows(faces, fi, vertex_map).iter().zip(&frag.barycentrics) {
                    scatter(out.row_mut(row), phi, b, g);
                }
            }
        }
    }
    Ok(())
}

/// `row[k, c] += scale · Φ_k · g[c]`.
#[inline]
fn scatter<T: Real>(row: &mut [T], phi: &[T; SH_COEFFS], scale: T, g: &[T]) {
    if scale == T::zero() {
        return;
    }
    for (k, &b) in phi.iter().enumerate() {
        let s = scale * b;
        for (r, &gc) in row[k * FEATURE_DIM..(k + 1) * FEATURE_DIM].iter_mut().zip(g) {
            *r += s * gc;
        }
    }
}
