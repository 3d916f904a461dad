//! Forward and backward passes of the full split pipeline:
//! rasterize fg/bg → SH features → render head → RGB.

use crate::descriptors::{
    concat_features, mesh_features_with_basis, point_features_with_basis, validate_mesh_refs,
    view_basis, DescriptorSet, FeatureImage, FEATURE_DIM, SH_COEFFS,
};
use crate::diffrender::backward::{accumulate_descriptor_grads, GradSlice};
use crate::diffrender::head::{backward_to_inputs, render_head_forward, RenderHeadParams};
use crate::error::{Error, Result};
use crate::geometry::{partition_mesh, Camera, SceneSplit, SubMesh, TriangleMesh};
use crate::image::Image;
use crate::rasterizer::{
    rasterize_mesh_with, rasterize_points_with, MeshFragmentBuffer, PointFragmentBuffer,
    RasterOptions,
};
use crate::scalar::Real;

/// Scene geometry partitioned into foreground and background submeshes.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitScene<T> {
    pub split: SceneSplit<T>,
    pub fg: SubMesh<T>,
    pub bg: SubMesh<T>,
}

impl<T: Real> SplitScene<T> {
    pub fn new(mesh: &TriangleMesh<T>, split: SceneSplit<T>) -> Self {
        let (fg, bg) = partition_mesh(mesh, &split);
        Self { split, fg, bg }
    }

    pub fn vertex_counts(&self) -> (usize, usize) {
        (self.fg.mesh.vertices.len(), self.bg.mesh.vertices.len())
    }
}

/// Learnable state: one descriptor set per submesh plus the render head.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel<T> {
    pub fg: DescriptorSet<T>,
    pub bg: DescriptorSet<T>,
    pub head: RenderHeadParams<T>,
}

impl<T: Real> SceneModel<T> {
    pub fn check_against(&self, scene: &SplitScene<T>) -> Result<()> {
        let (nf, nb) = scene.vertex_counts();
        if self.fg.len() != nf || self.bg.len() != nb {
            return Err(Error::ShapeMismatch(format!(
                "model has {}/{} fg/bg descriptors, scene has {nf}/{nb} vertices",
                self.fg.len(),
                self.bg.len()
            )));
        }
        self.head.validate()
    }
}

/// Everything about a view that depends only on geometry, so it can be
/// computed once and reused across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewFragments<T> {
    pub fg_points: PointFragmentBuffer<T>,
    pub fg_mesh: MeshFragmentBuffer<T>,
    pub bg_points: PointFragmentBuffer<T>,
    pub bg_mesh: MeshFragmentBuffer<T>,
    pub basis: Vec<[T; SH_COEFFS]>,
}

impl<T: Real> ViewFragments<T> {
    pub fn rasterize(
        scene: &SplitScene<T>,
        cam: &Camera<T>,
        point_radius: T,
        opts: &RasterOptions,
    ) -> Self {
        Self {
            fg_points: rasterize_points_with(&scene.fg.mesh.vertices, cam, point_radius, opts),
            fg_mesh: rasterize_mesh_with(&scene.fg.mesh, cam, opts),
            bg_points: rasterize_points_with(&scene.bg.mesh.vertices, cam, point_radius, opts),
            bg_mesh: rasterize_mesh_with(&scene.bg.mesh, cam, opts),
            basis: view_basis(cam),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass<T> {
    pub fg: FeatureImage<T>,
    pub bg: FeatureImage<T>,
    pub rgb: Image<T>,
}

fn branch_features<T: Real>(
    sub: &SubMesh<T>,
    desc: &DescriptorSet<T>,
    points: &PointFragmentBuffer<T>,
    mesh: &MeshFragmentBuffer<T>,
    basis: &[[T; SH_COEFFS]],
) -> Result<FeatureImage<T>> {
    if let Some(bad) = points.fragments.iter().filter_map(|f| f.point).find(|&i| i >= desc.len()) {
        return Err(Error::IndexOutOfRange {
            what: "descriptors",
            index: bad,
            len: desc.len(),
        });
    }
    validate_mesh_refs(mesh, &sub.mesh.faces, None, desc.len())?;
    let pt = point_features_with_basis(points, desc, basis);
    let ms = mesh_features_with_basis(mesh, &sub.mesh.faces, desc, None, basis);
    concat_features(&pt, &ms)
}

pub fn forward<T: Real>(
    scene: &SplitScene<T>,
    model: &SceneModel<T>,
    frags: &ViewFragments<T>,
) -> Result<ForwardPass<T>> {
    let fg = branch_features(
        &scene.fg,
        &model.fg,
        &frags.fg_points,
        &frags.fg_mesh,
        &frags.basis,
    )?;
    let bg = branch_features(
        &scene.bg,
        &model.bg,
        &frags.bg_points,
        &frags.bg_mesh,
        &frags.basis,
    )?;
    let rgb = render_head_forward(&fg, &bg, &model.head)?;
    Ok(ForwardPass { fg, bg, rgb })
}

/// Rasterizes and renders one view.
pub fn render_view<T: Real>(
    scene: &SplitScene<T>,
    model: &SceneModel<T>,
    cam: &Camera<T>,
    point_radius: T,
) -> Result<Image<T>> {
    let frags = ViewFragments::rasterize(scene, cam, point_radius, &RasterOptions::default());
    Ok(forward(scene, model, &frags)?.rgb)
}

/// Gradients for every learnable tensor of a [`SceneModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients<T> {
    pub fg: DescriptorSet<T>,
    pub bg: DescriptorSet<T>,
    pub head: RenderHeadParams<T>,
}

/// Backpropagates `dL/d rgb` through the head and into both descriptor sets.
pub fn backward<T: Real>(
    scene: &SplitScene<T>,
    model: &SceneModel<T>,
    frags: &ViewFragments<T>,
    pass: &ForwardPass<T>,
    grad_rgb: &Image<T>,
) -> Result<ModelGradients<T>> {
    let head = backward_to_inputs(grad_rgb, &pass.fg, &pass.bg, &model.head)?;
    let mut fg = DescriptorSet::zeros(model.fg.len());
    accumulate_descriptor_grads(
        &mut fg,
        Some((&frags.fg_points, GradSlice { image: &head.fg, offset: 0 })),
        Some((&frags.fg_mesh, GradSlice { image: &head.fg, offset: FEATURE_DIM })),
        &scene.fg.mesh.faces,
        None,
        &frags.basis,
    )?;
    let mut bg = DescriptorSet::zeros(model.bg.len());
    accumulate_descriptor_grads(
        &mut bg,
        Some((&frags.bg_points, GradSlice { image: &head.bg, offset: 0 })),
        Some((&frags.bg_mesh, GradSlice { image: &head.bg, offset: FEATURE_DIM })),
        &scene.bg.mesh.faces,
        None,
        &frags.basis,
    )?;
    Ok(ModelGradients {
        fg,
        bg,
        head: head.params,
    })
}
