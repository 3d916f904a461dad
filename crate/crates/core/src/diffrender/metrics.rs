//! Image fidelity metrics.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

pub fn mse<T: Real>(pred: &Image<T>, target: &Image<T>) -> Result<T> {
    pred.check_same_shape(target, "mse")?;
    let n = T::from_usize_lossy(pred.data.len().max(1));
    Ok(pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<T>()
        / n)
}

/// Peak signal-to-noise ratio in dB; `+∞` for identical images.
pub fn psnr<T: Real>(pred: &Image<T>, target: &Image<T>, max_val: T) -> Result<T> {
    let m = mse(pred, target)?;
    if m == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (max_val * max_val / m).log10())
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let taps: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Mean structural similarity over all fully-contained 11×11 Gaussian
/// windows (σ = 1.5, dynamic range 1), averaged over channels.
pub fn ssim<T: Real>(pred: &Image<T>, target: &Image<T>) -> Result<T> {
    pred.check_same_shape(target, "ssim")?;
    let (w, h, ch) = (pred.width, pred.height, pred.channels);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }
    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);

    let mut total = 0.0;
    for c in 0..ch {
        let x: Vec<f64> = (0..w * h).map(|i| pred.data[i * ch + c].to_f64_lossy()).collect();
        let y: Vec<f64> = (0..w * h).map(|i| target.data[i * ch + c].to_f64_lossy()).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
        let [mx, my, sxx, syy, sxy] =
            [&x, &y, &xx, &yy, &xy].map(|plane| filter_valid(plane, w, h, &kernel));
        let mut sum = 0.0;
        for i in 0..ow * oh {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += sum / (ow * oh) as f64;
    }
    Ok(T::lit(total / ch as f64))
}

/// Separable valid-mode filtering of a `w×h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            horiz[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * horiz[(y + i) * ow + x]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(w: usize, h: usize, c: usize, seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_vec(w, h, c, (0..w * h * c).map(|_| rng.random_range(0.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn psnr_examples() {
        let t = random(8, 8, 3, 0);
        assert_eq!(psnr(&t, &t, 1.0).unwrap(), f64::INFINITY);
        let p = t.map(|v| v + 0.1);
        assert!((psnr(&p, &t, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let p = t.map(|v| v - 1.0);
        assert!(psnr(&p, &t, 1.0).unwrap().abs() < 1e-9);
        assert!(psnr(&p, &random(4, 8, 3, 1), 1.0).is_err());
    }

    /// Direct definition: 2-D normalized Gaussian window, two-pass
    /// centered moments, one window at a time.
    fn ssim_reference(x: &Image<f64>, y: &Image<f64>) -> f64 {
        let (w, h, ch) = (x.width, x.height, x.channels);
        let mut win = [[0.0; 11]; 11];
        let mut norm = 0.0;
        for (i, row) in win.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(di * di + dj * dj) / 4.5).exp();
                norm += *v;
            }
        }
        let mut total = 0.0;
        for c in 0..ch {
            let mut acc = 0.0;
            let mut count = 0;
            for oy in 0..=h - 11 {
                for ox in 0..=w - 11 {
                    let at = |img: &Image<f64>, i: usize, j: usize| img.pixel(ox + j, oy + i)[c];
                    let (mut mx, mut my) = (0.0, 0.0);
                    for i in 0..11 {
                        for j in 0..11 {
                            mx += win[i][j] / norm * at(x, i, j);
                            my += win[i][j] / norm * at(y, i, j);
                        }
                    }
                    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                    for i in 0..11 {
                        for j in 0..11 {
                            let g = win[i][j] / norm;
                            let (dx, dy) = (at(x, i, j) - mx, at(y, i, j) - my);
                            vx += g * dx * dx;
                            vy += g * dy * dy;
                            cxy += g * dx * dy;
                        }
                    }
                    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
                    acc += (2.0 * mx * my + c1) * (2.0 * cxy + c2)
                        / ((mx * mx + my * my + c1) * (vx + vy + c2));
                    count += 1;
                }
            }
            total += acc / count as f64;
        }
        total / ch as f64
    }

    #[test]
    fn ssim_matches_reference_on_inverted_image() {
        let t = random(19, 14, 3, 7);
        let p = t.map(|v| 1.0 - v);
        let got = ssim(&p, &t).unwrap();
        let want = ssim_reference(&p, &t);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert!(got < 0.0);
        let q = random(19, 14, 3, 8);
        assert!((ssim(&q, &t).unwrap() - ssim_reference(&q, &t)).abs() < 1e-6);
    }

    #[test]
    fn ssim_identical_is_one() {
        let t = random(16, 13, 3, 2);
        assert!((ssim(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let zero = Image::<f64>::zeros(12, 12, 1);
        let one = Image::<f64>::filled(12, 12, 1, 1.0);
        let c1 = 1e-4;
        let c2 = 9e-4;
        let want = (2.0 * 0.0 * 1.0 + c1) * (2.0 * 0.0 + c2) / ((0.0 + 1.0 + c1) * (0.0 + 0.0 + c2));
        assert!((ssim(&zero, &one).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let t = random(10, 20, 3, 3);
        assert!(matches!(ssim(&t, &t), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(11, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..11 {
            assert_eq!(k[i], k[10 - i]);
        }
    }
}
