//! Differentiable render head, losses, metrics, backpropagation into the
//! descriptors, Adam, and the scene fitting loop.

pub mod adam;
pub mod backward;
pub mod fit;
pub mod head;
pub mod loss;
pub mod metrics;
pub mod pipeline;

pub use adam::{adam_step, AdamState};
pub use backward::backward_to_descriptors;
pub use fit::{fit_scene, init_model, FitConfig, FitResult, TrainingView};
pub use head::{backward_to_inputs, render_head_forward, HeadGradients, RenderHeadParams};
pub use loss::{loss_l1, loss_l2, LossKind};
pub use metrics::{psnr, ssim};
pub use pipeline::{
    backward, forward, render_view, ForwardPass, ModelGradients, SceneModel, SplitScene,
    ViewFragments,
};
