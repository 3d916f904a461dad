//! Two-branch render head: separate foreground/background encoders feeding
//! one shared linear decoder.
//!
//! ```text
//! h_fg = relu(fg · W_fg)      h_bg = relu(bg · W_bg)
//! rgb  = [h_fg, h_bg] · W_out + b_out
//! ```

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::descriptors::{FeatureImage, CONCAT_CHANNELS};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const DEFAULT_HIDDEN: usize = 16;
pub const RGB: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderHeadParams<T> {
    pub in_channels: usize,
    pub hidden: usize,
    /// `in_channels × hidden`, row-major.
    pub w_fg: Vec<T>,
    /// `in_channels × hidden`, row-major.
    pub w_bg: Vec<T>,
    /// `2·hidden × 3`, row-major; foreground rows first.
    pub w_out: Vec<T>,
    pub b_out: Vec<T>,
}

impl<T: Real> RenderHeadParams<T> {
    pub fn zeros(in_channels: usize, hidden: usize) -> Self {
        Self {
            in_channels,
            hidden,
            w_fg: vec![T::zero(); in_channels * hidden],
            w_bg: vec![T::zero(); in_channels * hidden],
            w_out: vec![T::zero(); 2 * hidden * RGB],
            b_out: vec![T::zero(); RGB],
        }
    }

    /// Weights drawn from `Normal(0, 1/fan_in)`, output bias at mid-gray.
    pub fn init<R: Rng + ?Sized>(in_channels: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(in_channels, hidden);
        let enc = Normal::new(0.0, (1.0 / in_channels as f64).sqrt()).expect("valid std");
        let dec = Normal::new(0.0, (1.0 / (2 * hidden) as f64).sqrt()).expect("valid std");
        for w in p.w_fg.iter_mut().chain(p.w_bg.iter_mut()) {
            *w = T::lit(enc.sample(rng));
        }
        for w in &mut p.w_out {
            *w = T::lit(dec.sample(rng));
        }
        p.b_out.fill(T::lit(0.5));
        p
    }

    pub fn default_init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::init(CONCAT_CHANNELS, DEFAULT_HIDDEN, rng)
    }

    /// Parameter tensors in a fixed order: `w_fg, w_bg, w_out, b_out`.
    pub fn tensors(&self) -> [&[T]; 4] {
        [&self.w_fg, &self.w_bg, &self.w_out, &self.b_out]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 4] {
        [&mut self.w_fg, &mut self.w_bg, &mut self.w_out, &mut self.b_out]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let (c, h) = (self.in_channels, self.hidden);
        if self.w_fg.len() != c * h
            || self.w_bg.len() != c * h
            || self.w_out.len() != 2 * h * RGB
            || self.b_out.len() != RGB
        {
            return Err(Error::ShapeMismatch(format!(
                "render head tensors do not match {c} inputs and {h} hidden units"
            )));
        }
        if self.tensors().iter().flat_map(|t| t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("render head has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> RenderHeadParams<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        RenderHeadParams {
            in_channels: self.in_channels,
            hidden: self.hidden,
            w_fg: conv(&self.w_fg),
            w_bg: conv(&self.w_bg),
            w_out: conv(&self.w_out),
            b_out: conv(&self.b_out),
        }
    }
}

fn check_inputs<T: Real>(
    fg: &FeatureImage<T>,
    bg: &FeatureImage<T>,
    params: &RenderHeadParams<T>,
) -> Result<()> {
    params.validate()?;
    if fg.width() != bg.width() || fg.height() != bg.height() {
        return Err(Error::DimensionMismatch(format!(
            "foreground {}x{} vs background {}x{}",
            fg.width(),
            fg.height(),
            bg.width(),
            bg.height()
        )));
    }
    if fg.channels() != params.in_channels || bg.channels() != params.in_channels {
        return Err(Error::DimensionMismatch(format!(
            "head expects {} channels, got {} / {}",
            params.in_channels,
            fg.channels(),
            bg.channels()
        )));
    }
    Ok(())
}

/// `pre[j] = Σ_i x[i] · w[i, j]`.
#[inline]
fn encode<T: Real>(x: &[T], w: &[T], hidden: usize, pre: &mut [T]) {
    pre.fill(T::zero());
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &w[i * hidden..(i + 1) * hidden];
        for (p, &wij) in pre.iter_mut().zip(row) {
            *p += xi * wij;
        }
    }
}

#[inline]
fn decode<T: Real>(h_fg: &[T], h_bg: &[T], params: &RenderHeadParams<T>, out: &mut [T]) {
    out.copy_from_slice(&params.b_out);
    for (j, &h) in h_fg.iter().chain(h_bg).enumerate() {
        if h == T::zero() {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(&params.w_out[j * RGB..(j + 1) * RGB]) {
            *o += h * w;
        }
    }
}

fn relu<T: Real>(v: &mut [T]) {
    for x in v {
        *x = x.max(T::zero());
    }
}

/// Per-pixel RGB, unclamped.
pub fn render_head_forward<T: Real>(
    fg: &FeatureImage<T>,
    bg: &FeatureImage<T>,
    params: &RenderHeadParams<T>,
) -> Result<Image<T>> {
    check_inputs(fg, bg, params)?;
    let h = params.hidden;
    let mut out = Image::zeros(fg.width(), fg.height(), RGB);
    let mut h_fg = vec![T::zero(); h];
    let mut h_bg = vec![T::zero(); h];
    for ((x_fg, x_bg), rgb) in fg
        .image
        .pixels()
        .zip(bg.image.pixels())
        .zip(out.data.chunks_exact_mut(RGB))
    {
        encode(x_fg, &params.w_fg, h, &mut h_fg);
        encode(x_bg, &params.w_bg, h, &mut h_bg);
        relu(&mut h_fg);
        relu(&mut h_bg);
        decode(&h_fg, &h_bg, params, rgb);
    }
    Ok(out)
}

/// Gradients of a scalar loss with respect to the head inputs and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients<T> {
    pub fg: Image<T>,
    pub bg: Image<T>,
    pub params: RenderHeadParams<T>,
}

/// Chain rule through [`render_head_forward`] given `dL/d rgb`.
pub fn backward_to_inputs<T: Real>(
    grad_rgb: &Image<T>,
    fg: &FeatureImage<T>,
    bg: &FeatureImage<T>,
    params: &RenderHeadParams<T>,
) -> Result<HeadGradients<T>> {
    check_inputs(fg, bg, params)?;
    if grad_rgb.width != fg.width() || grad_rgb.height != fg.height() || grad_rgb.channels != RGB {
        return Err(Error::DimensionMismatch(format!(
            "rgb gradient {}x{}x{} vs features {}x{}",
            grad_rgb.width,
            grad_rgb.height,
            grad_rgb.channels,
            fg.width(),
            fg.height()
        )));
    }
    let (c, h) = (params.in_channels, params.hidden);
    let mut grads = HeadGradients {
        fg: Image::zeros(fg.width(), fg.height(), c),
        bg: Image::zeros(fg.width(), fg.height(), c),
        params: RenderHeadParams::zeros(c, h),
    };
    let mut pre_fg = vec![T::zero(); h];
    let mut pre_bg = vec![T::zero(); h];
    let mut d_pre = vec![T::zero(); 2 * h];

    for (px, g) in grad_rgb.pixels().enumerate() {
        if g.iter().all(|&v| v == T::zero()) {
            continue;
        }
        let x_fg = &fg.image.data[px * c..(px + 1) * c];
        let x_bg = &bg.image.data[px * c..(px + 1) * c];
        encode(x_fg, &params.w_fg, h, &mut pre_fg);
        encode(x_bg, &params.w_bg, h, &mut pre_bg);

        for (k, gk) in g.iter().enumerate() {
            grads.params.b_out[k] += *gk;
        }
        for (j, &pre) in pre_fg.iter().chain(&pre_bg).enumerate() {
            let w_row = &params.w_out[j * RGB..(j + 1) * RGB];
            let act = pre.max(T::zero());
            let gw = &mut grads.params.w_out[j * RGB..(j + 1) * RGB];
            let mut dh = T::zero();
            for k in 0..RGB {
                gw[k] += act * g[k];
                dh += w_row[k] * g[k];
            }
            d_pre[j] = if pre > T::zero() { dh } else { T::zero() };
        }

        let branches = [
            (x_fg, &params.w_fg, &mut grads.params.w_fg, &mut grads.fg, &d_pre[..h]),
            (x_bg, &params.w_bg, &mut grads.params.w_bg, &mut grads.bg, &d_pre[h..]),
        ];
        for (x, w, gw, gx, dp) in branches {
            let gx = &mut gx.data[px * c..(px + 1) * c];
            for i in 0..c {
                let w_row = &w[i * h..(i + 1) * h];
                let gw_row = &mut gw[i * h..(i + 1) * h];
                let mut acc = T::zero();
                for j in 0..h {
                    gw_row[j] += x[i] * dp[j];
                    acc += w_row[j] * dp[j];
                }
                gx[i] = acc;
            }
        }
    }
    Ok(grads)
}
