//! Additive angular margin softmax head.

use crate::error::{Error, Result};

/// Loss, class probabilities and gradients for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcFaceOutput {
    pub loss: f64,
    pub probs: Vec<f64>,
    /// dL/d(feature), length `l`.
    pub grad_feature: Vec<f64>,
    /// dL/d(centers), row-major `K × l`.
    pub grad_centers: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosines between the normalized feature and every center row.
fn cosines(unit: &[f64], centers: &[f64]) -> Vec<f64> {
    centers
        .chunks_exact(unit.len())
        .map(|w| w.iter().zip(unit).map(|(a, b)| a * b).sum())
        .collect()
}

/// Margin logits: `s·cos(θ_y + m)` for the label, `s·cos θ_k` otherwise.
fn logits(cos: &[f64], label: usize, s: f64, m: f64) -> Vec<f64> {
    cos.iter()
        .enumerate()
        .map(|(k, &c)| {
            if k == label {
                s * (c.clamp(-1.0, 1.0).acos() + m).cos()
            } else {
                s * c
            }
        })
        .collect()
}

fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&o| (o - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let log_norm = max + total.ln();
    (exps.into_iter().map(|e| e / total).collect(), log_norm)
}

fn check(feature: &[f64], label: usize, centers: &[f64]) -> Result<(usize, f64)> {
    let l = feature.len();
    if l == 0 || !centers.len().is_multiple_of(l) {
        return Err(Error::SizeMismatch(format!(
            "{} center entries do not fit feature dimension {l}",
            centers.len()
        )));
    }
    let classes = centers.len() / l;
    if label >= classes {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    let r = norm(feature);
    if r == 0.0 {
        return Err(Error::InvalidArgument("zero-norm feature".into()));
    }
    Ok((classes, r))
}

/// Margin softmax loss and probabilities. `centers` is `K × l`, row-major,
/// with unit rows.
pub fn arcface_loss(
    feature: &[f64],
    label: usize,
    centers: &[f64],
    s: f64,
    m: f64,
) -> Result<(f64, Vec<f64>)> {
    let (_, r) = check(feature, label, centers)?;
    let unit: Vec<f64> = feature.iter().map(|v| v / r).collect();
    let o = logits(&cosines(&unit, centers), label, s, m);
    let (probs, log_norm) = softmax(&o);
    Ok((log_norm - o[label], probs))
}

/// Loss, probabilities and exact gradients with respect to the feature and
/// the centers.
pub fn arcface_forward_backward(
    feature: &[f64],
    label: usize,
    centers: &[f64],
    s: f64,
    m: f64,
) -> Result<ArcFaceOutput> {
    let (classes, r) = check(feature, label, centers)?;
    let l = feature.len();
    let unit: Vec<f64> = feature.iter().map(|v| v / r).collect();
    let cos = cosines(&unit, centers);
    let o = logits(&cos, label, s, m);
    let (probs, log_norm) = softmax(&o);
    let loss = log_norm - o[label];

    // dL/dcos_k = (p_k − [k = y]) · dlogit_k/dcos_k
    let (sin_m, cos_m) = m.sin_cos();
    let grad_cos: Vec<f64> = (0..classes)
        .map(|k| {
            if k == label {
                let c = cos[k].clamp(-1.0, 1.0);
                let sin_theta = (1.0 - c * c).max(1e-24).sqrt();
                let dlogit = s * (cos_m + sin_m * c / sin_theta);
                (probs[k] - 1.0) * dlogit
            } else {
                probs[k] * s
            }
        })
        .collect();

    let mut grad_centers = vec![0.0; classes * l];
    let mut grad_unit = vec![0.0; l];
    for k in 0..classes {
        let w = &centers[k * l..(k + 1) * l];
        for j in 0..l {
            grad_centers[k * l + j] = grad_cos[k] * unit[j];
            grad_unit[j] += grad_cos[k] * w[j];
        }
    }
    // Through the normalization u = f / |f|.
    let radial: f64 = grad_unit.iter().zip(&unit).map(|(g, u)| g * u).sum();
    let grad_feature = grad_unit
        .iter()
        .zip(&unit)
        .map(|(g, u)| (g - radial * u) / r)
        .collect();

    Ok(ArcFaceOutput {
        loss,
        probs,
        grad_feature,
        grad_centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn centers_2d() -> Vec<f64> {
        vec![1.0, 0.0, 0.0, 1.0]
    }

    #[test]
    fn margin_free_is_softmax_cross_entropy() {
        let f = [0.3, -1.2, 0.5];
        let w = [0.6, 0.8, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let (loss, probs) = arcface_loss(&f, 2, &w, 1.0, 0.0).unwrap();
        let r = (0.09f64 + 1.44 + 0.25).sqrt();
        let logits = [(0.3 * 0.6 - 1.2 * 0.8) / r, 0.5 / r, 0.3 / r];
        let lse = logits.iter().map(|o: &f64| o.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(loss, lse - logits[2], epsilon = 1e-14);
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn aligned_feature_with_margin() {
        let (loss, probs) = arcface_loss(&[2.0, 0.0], 0, &centers_2d(), 64.0, 0.5).unwrap();
        let target = 64.0 * 0.5f64.cos();
        let expect = -(target.exp() / (target.exp() + 1.0)).ln();
        assert_abs_diff_eq!(loss, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_feature_and_bad_label() {
        assert!(arcface_loss(&[0.0, 0.0], 0, &centers_2d(), 64.0, 0.5).is_err());
        assert!(arcface_loss(&[1.0, 0.0], 2, &centers_2d(), 64.0, 0.5).is_err());
        assert!(arcface_loss(&[1.0, 0.0, 0.0], 0, &centers_2d(), 64.0, 0.5).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let f = vec![0.4, -0.7, 1.1];
        let mut w = vec![0.3, 0.5, -0.2, -0.9, 0.1, 0.4, 0.2, 0.2, 0.95, 0.6, -0.6, 0.1];
        for row in w.chunks_exact_mut(3) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= n);
        }
        let (s, m) = (8.0, 0.5);
        let out = arcface_forward_backward(&f, 1, &w, s, m).unwrap();
        let h = 1e-6;
        for j in 0..f.len() {
            let (mut a, mut b) = (f.clone(), f.clone());
            a[j] += h;
            b[j] -= h;
            let fd = (arcface_loss(&a, 1, &w, s, m).unwrap().0 - arcface_loss(&b, 1, &w, s, m).unwrap().0)
                / (2.0 * h);
            assert_abs_diff_eq!(fd, out.grad_feature[j], epsilon = 1e-7);
        }
        for j in 0..w.len() {
            let (mut a, mut b) = (w.clone(), w.clone());
            a[j] += h;
            b[j] -= h;
            let fd = (arcface_loss(&f, 1, &a, s, m).unwrap().0 - arcface_loss(&f, 1, &b, s, m).unwrap().0)
                / (2.0 * h);
            assert_abs_diff_eq!(fd, out.grad_centers[j], epsilon = 1e-7);
        }
    }
}
