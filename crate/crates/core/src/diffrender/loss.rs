use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::Image;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Mean absolute error.
    #[default]
    L1,
    /// Mean squared error.
    L2,
}

impl LossKind {
    pub fn evaluate<T: Real>(self, pred: &Image<T>, target: &Image<T>) -> Result<(T, Image<T>)> {
        match self {
            LossKind::L1 => loss_l1(pred, target),
            LossKind::L2 => loss_l2(pred, target),
        }
    }
}

/// Mean absolute error and its gradient `sign(pred − target) / count`.
pub fn loss_l1<T: Real>(pred: &Image<T>, target: &Image<T>) -> Result<(T, Image<T>)> {
    pred.check_same_shape(target, "l1 loss")?;
    let count = T::from_usize_lossy(pred.data.len().max(1));
    let inv = T::one() / count;
    let mut grad = Image::zeros(pred.width, pred.height, pred.channels);
    let mut sum = T::zero();
    for ((g, &p), &t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let d = p - t;
        sum += d.abs();
        *g = if d > T::zero() {
            inv
        } else if d < T::zero() {
            -inv
        } else {
            T::zero()
        };
    }
    Ok((sum * inv, grad))
}

/// Mean squared error and its gradient `2 (pred − target) / count`.
pub fn loss_l2<T: Real>(pred: &Image<T>, target: &Image<T>) -> Result<(T, Image<T>)> {
    pred.check_same_shape(target, "l2 loss")?;
    let inv = T::one() / T::from_usize_lossy(pred.data.len().max(1));
    let mut grad = Image::zeros(pred.width, pred.height, pred.channels);
    let mut sum = T::zero();
    for ((g, &p), &t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let d = p - t;
        sum += d * d;
        *g = (d + d) * inv;
    }
    Ok((sum * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng) -> Image<f64> {
        let data = (0..4 * 3 * 3).map(|_| rng.random_range(0.0..1.0)).collect();
        Image::from_vec(4, 3, 3, data).unwrap()
    }

    #[test]
    fn l1_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = random(&mut rng);
        let (l, g) = loss_l1(&t, &t).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data.iter().all(|&v| v == 0.0));
        let p = t.map(|v| v + 0.1);
        let (l, _) = loss_l1(&p, &t).unwrap();
        assert!((l - 0.1).abs() < 1e-12);
        assert!(loss_l1(&p, &Image::zeros(3, 3, 3)).is_err());
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random(&mut rng);
        let p = random(&mut rng);
        for kind in [LossKind::L1, LossKind::L2] {
            let (_, g) = kind.evaluate(&p, &t).unwrap();
            for i in 0..p.data.len() {
                // skip the kink of |x|
                if (p.data[i] - t.data[i]).abs() < 1e-3 {
                    continue;
                }
                let h = 1e-6;
                let mut plus = p.clone();
                plus.data[i] += h;
                let mut minus = p.clone();
                minus.data[i] -= h;
                let fd = (kind.evaluate(&plus, &t).unwrap().0 - kind.evaluate(&minus, &t).unwrap().0)
                    / (2.0 * h);
                let rel = (fd - g.data[i]).abs() / g.data[i].abs().max(1e-12);
                assert!(rel < 1e-4, "{kind:?} {i}: fd {fd} vs {}", g.data[i]);
            }
        }
    }
}
