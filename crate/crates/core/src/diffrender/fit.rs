//! Joint optimization of descriptors and render head against posed images.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::descriptors::{sh_count, DescriptorSet, CONCAT_CHANNELS, FEATURE_DIM, SH_COEFFS};
use crate::diffrender::adam::AdamState;
use crate::diffrender::head::RenderHeadParams;
use crate::diffrender::loss::LossKind;
use crate::diffrender::pipeline::{backward, forward, SceneModel, SplitScene, ViewFragments};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::image::Image;
use crate::rasterizer::{RasterOptions, DEFAULT_POINT_RADIUS};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    pub lr_descriptors: f64,
    pub lr_head: f64,
    pub seed: u64,
    pub loss: LossKind,
    pub hidden: usize,
    /// Highest SH band that is trained; higher coefficients stay zero.
    pub sh_degree: usize,
    /// Standard deviation of the initial descriptor values.
    pub descriptor_init_std: f64,
    pub point_radius: f64,
    pub tile_size: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr_descriptors: 1e-1,
            lr_head: 1e-4,
            seed: 0,
            loss: LossKind::L1,
            hidden: crate::diffrender::head::DEFAULT_HIDDEN,
            sh_degree: 2,
            descriptor_init_std: 0.01,
            point_radius: DEFAULT_POINT_RADIUS,
            tile_size: crate::rasterizer::DEFAULT_TILE_SIZE,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.lr_descriptors > 0.0 && self.lr_head > 0.0) {
            return bad(format!(
                "learning rates must be positive ({}, {})",
                self.lr_descriptors, self.lr_head
            ));
        }
        if self.hidden == 0 {
            return bad("hidden width must be positive".into());
        }
        if self.sh_degree > 2 {
            return bad(format!("sh_degree {} exceeds 2", self.sh_degree));
        }
        if !(self.descriptor_init_std >= 0.0 && self.descriptor_init_std.is_finite()) {
            return bad("descriptor_init_std must be finite and non-negative".into());
        }
        if !(self.point_radius > 0.0) {
            return bad("point radius must be positive".into());
        }
        Ok(())
    }
}

/// One posed training image.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingView<T> {
    pub camera: Camera<T>,
    pub image: Image<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: SceneModel<T>,
    /// Mean training loss of each epoch, measured before each view's update.
    pub loss_trace: Vec<f64>,
}

/// Initial model: head from `Normal(0, 1/fan_in)`, descriptors from
/// `Normal(0, descriptor_init_std)` with untrained SH bands zeroed.
pub fn init_model<T: Real>(
    scene: &SplitScene<T>,
    config: &FitConfig,
    rng: &mut ChaCha8Rng,
) -> SceneModel<T> {
    let head = RenderHeadParams::init(CONCAT_CHANNELS, config.hidden, rng);
    let (nf, nb) = scene.vertex_counts();
    let mut fg = DescriptorSet::zeros(nf);
    let mut bg = DescriptorSet::zeros(nb);
    if config.descriptor_init_std > 0.0 {
        let dist = Normal::new(0.0, config.descriptor_init_std).expect("valid std");
        for v in fg.as_mut_slice().iter_mut().chain(bg.as_mut_slice()) {
            *v = T::lit(dist.sample(rng));
        }
    }
    mask_bands(&mut fg, config.sh_degree);
    mask_bands(&mut bg, config.sh_degree);
    SceneModel { fg, bg, head }
}

/// Zeros every coefficient above `degree`.
fn mask_bands<T: Real>(desc: &mut DescriptorSet<T>, degree: usize) {
    let keep = sh_count(degree);
    if keep >= SH_COEFFS {
        return;
    }
    for n in 0..desc.len() {
        desc.row_mut(n)[keep * FEATURE_DIM..].fill(T::zero());
    }
}

pub fn fit_scene<T: Real>(
    scene: &SplitScene<T>,
    views: &[TrainingView<T>],
    config: &FitConfig,
) -> Result<FitResult<T>> {
    config.validate()?;
    if views.is_empty() {
        return Err(Error::InvalidConfig("no training views".into()));
    }
    for (i, v) in views.iter().enumerate() {
        if (v.image.width, v.image.height, v.image.channels) != (v.camera.width, v.camera.height, 3)
        {
            return Err(Error::DimensionMismatch(format!(
                "view {i}: image {}x{}x{} vs camera {}x{}",
                v.image.width, v.image.height, v.image.channels, v.camera.width, v.camera.height
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_model(scene, config, &mut rng);

    let opts = RasterOptions {
        tile_size: config.tile_size,
    };
    let radius = T::lit(config.point_radius);
    let frags: Vec<ViewFragments<T>> = views
        .iter()
        .map(|v| ViewFragments::rasterize(scene, &v.camera, radius, &opts))
        .collect();

    let mut desc_opt = AdamState::<T>::new(&[model.fg.as_slice().len(), model.bg.as_slice().len()]);
    let mut head_opt = AdamState::<T>::new(&model.head.tensors().map(<[T]>::len));
    let lr_desc = T::lit(config.lr_descriptors);
    let lr_head = T::lit(config.lr_head);

    let mut order: Vec<usize> = (0..views.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &vi in &order {
            let pass = forward(scene, &model, &frags[vi])?;
            let (loss, grad) = config.loss.evaluate(&pass.rgb, &views[vi].image)?;
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, view: vi });
            }
            epoch_loss += loss;
            let mut grads = backward(scene, &model, &frags[vi], &pass, &grad)?;
            mask_bands(&mut grads.fg, config.sh_degree);
            mask_bands(&mut grads.bg, config.sh_degree);
            desc_opt.step(
                &mut [model.fg.as_mut_slice(), model.bg.as_mut_slice()],
                &[grads.fg.as_slice(), grads.bg.as_slice()],
                lr_desc,
            )?;
            head_opt.step(&mut model.head.tensors_mut(), &grads.head.tensors(), lr_head)?;
        }
        trace.push(epoch_loss / views.len() as f64);
    }
    Ok(FitResult {
        model,
        loss_trace: trace,
    })
}
