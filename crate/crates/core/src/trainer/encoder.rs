use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One-hidden-layer encoder `x ↦ W2·tanh(W1·x + b1) + b2` plus the class
/// centers of the margin head. All matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub classes: usize,
    /// `hidden × input`
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `latent × hidden`
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// `classes × latent`, unit rows.
    pub centers: Vec<f64>,
}

/// Intermediate activations of one sample, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub latent: Vec<f64>,
}

impl EncoderParams {
    /// Uniform Glorot initialization for the layers, Gaussian directions for
    /// the centers, zero biases.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_dim: usize,
        latent_dim: usize,
        classes: usize,
        rng: &mut R,
    ) -> Self {
        let mut glorot = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect()
        };
        let w1 = glorot(input_dim, hidden_dim);
        let w2 = glorot(hidden_dim, latent_dim);
        let centers = (0..classes * latent_dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let mut params = Self {
            input_dim,
            hidden_dim,
            latent_dim,
            classes,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; latent_dim],
            centers,
        };
        params.normalize_centers();
        params
    }

    pub fn normalize_centers(&mut self) {
        for row in self.centers.chunks_exact_mut(self.latent_dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Activations {
        let hidden: Vec<f64> = self
            .w1
            .chunks_exact(self.input_dim)
            .zip(&self.b1)
            .map(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).tanh())
            .collect();
        let latent = self
            .w2
            .chunks_exact(self.hidden_dim)
            .zip(&self.b2)
            .map(|(row, b)| row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        Activations { hidden, latent }
    }

    /// Latent features of every row, concatenated.
    pub fn encode(&self, points: impl Iterator<Item = impl AsRef<[f64]>>) -> Vec<f64> {
        points.flat_map(|p| self.forward(p.as_ref()).latent).collect()
    }

    /// Accumulates the parameter gradient of one sample given dL/d(latent).
    pub fn backward(&self, x: &[f64], act: &Activations, grad_latent: &[f64], grads: &mut EncoderParams) {
        let mut grad_hidden = vec![0.0; self.hidden_dim];
        for (o, &g) in grad_latent.iter().enumerate() {
            grads.b2[o] += g;
            let row = &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            let grow = &mut grads.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            for h in 0..self.hidden_dim {
                grow[h] += g * act.hidden[h];
                grad_hidden[h] += g * row[h];
            }
        }
        for (h, (&gh, &a)) in grad_hidden.iter().zip(&act.hidden).enumerate() {
            let g = gh * (1.0 - a * a);
            grads.b1[h] += g;
            let grow = &mut grads.w1[h * self.input_dim..(h + 1) * self.input_dim];
            for (gw, &v) in grow.iter_mut().zip(x) {
                *gw += g * v;
            }
        }
    }

    /// A parameter set of the same shape filled with zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            centers: vec![0.0; self.centers.len()],
            ..*self
        }
    }

    fn blocks(&self) -> [&Vec<f64>; 5] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.centers]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.centers,
        ]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All parameters as one vector: `w1, b1, w2, b2, centers`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|b| b.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::SizeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            let len = block.len();
            block.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `self ← self·decay + other·scale`, element-wise.
    pub fn axpby(&mut self, decay: f64, other: &EncoderParams, scale: f64) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            dst.iter_mut()
                .zip(src.iter())
                .for_each(|(d, s)| *d = *d * decay + s * scale);
        }
    }

    /// Index of the center with the largest cosine to `latent`.
    pub fn predict(&self, latent: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, w) in self.centers.chunks_exact(self.latent_dim).enumerate() {
            let c: f64 = w.iter().zip(latent).map(|(a, b)| a * b).sum();
            if c > best.1 {
                best = (k, c);
            }
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_shapes_and_unit_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = EncoderParams::init(4, 5, 3, 2, &mut rng);
        assert_eq!(p.len(), 4 * 5 + 5 + 5 * 3 + 3 + 2 * 3);
        for row in p.centers.chunks_exact(3) {
            let n: f64 = row.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let act = p.forward(&[1.0, 0.0, -1.0, 0.5]);
        assert_eq!((act.hidden.len(), act.latent.len()), (5, 3));
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = EncoderParams::init(3, 4, 2, 3, &mut rng);
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[0.0]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = EncoderParams::init(3, 4, 2, 2, &mut rng);
        let x = [0.5, -1.0, 2.0];
        // Objective: ⟨c, latent⟩ for a fixed direction c.
        let c = [0.7, -1.3];
        let objective = |q: &EncoderParams| -> f64 {
            q.forward(&x).latent.iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        let mut grads = p.zeros_like();
        p.backward(&x, &p.forward(&x), &c, &mut grads);
        let flat = p.to_flat();
        let analytic = grads.to_flat();
        let h = 1e-6;
        let mut q = p.clone();
        for k in 0..flat.len() {
            let mut a = flat.clone();
            a[k] += h;
            q.set_flat(&a).unwrap();
            let up = objective(&q);
            a[k] -= 2.0 * h;
            q.set_flat(&a).unwrap();
            let down = objective(&q);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - analytic[k]).abs() < 1e-8, "param {k}: {fd} vs {}", analytic[k]);
        }
    }
}
