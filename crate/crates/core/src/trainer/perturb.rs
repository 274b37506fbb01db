//! Random structure perturbation for vector inputs.
//!
//! Four operations stand in for the usual image augmentations: `Mask` zeroes
//! a contiguous run of coordinates (random erasing), `Smooth` applies a box
//! filter along the coordinate axis (blur), `Collapse` replaces contiguous
//! groups by their mean (grayscale) and `Jitter` applies a random affine map
//! `a·x + b` to every coordinate (color jitter).

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationOp {
    /// Zero a contiguous run covering a fraction in `[min_frac, max_frac]`
    /// of the coordinates.
    Mask { min_frac: f64, max_frac: f64 },
    /// Average over a window of `2·radius + 1` neighbouring coordinates.
    Smooth { radius: usize },
    /// Split the coordinates into `groups` contiguous groups and replace
    /// each by its mean.
    Collapse { groups: usize },
    /// `a ∈ [1 − scale, 1 + scale]`, `b ∈ [−shift, shift]`.
    Jitter { scale: f64, shift: f64 },
}

impl PerturbationOp {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Mask { min_frac, max_frac } => {
                (0.0..=1.0).contains(&min_frac) && (min_frac..=1.0).contains(&max_frac)
            }
            Self::Smooth { .. } => true,
            Self::Collapse { groups } => groups >= 1,
            Self::Jitter { scale, shift } => (0.0..1.0).contains(&scale) && shift >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid perturbation {self:?}")))
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let d = x.len();
        match *self {
            Self::Mask { min_frac, max_frac } => {
                let frac = if max_frac > min_frac {
                    rng.random_range(min_frac..=max_frac)
                } else {
                    min_frac
                };
                let len = ((frac * d as f64).round() as usize).min(d);
                let start = rng.random_range(0..=d - len);
                let mut out = x.to_vec();
                out[start..start + len].iter_mut().for_each(|v| *v = 0.0);
                out
            }
            Self::Smooth { radius } => (0..d)
                .map(|i| {
                    let lo = i.saturating_sub(radius);
                    let hi = (i + radius + 1).min(d);
                    x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
                })
                .collect(),
            Self::Collapse { groups } => {
                let groups = groups.min(d).max(1);
                let mut out = Vec::with_capacity(d);
                for g in 0..groups {
                    let lo = g * d / groups;
                    let hi = (g + 1) * d / groups;
                    let mean = x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
                    out.extend(std::iter::repeat_n(mean, hi - lo));
                }
                out
            }
            Self::Jitter { scale, shift } => {
                let a = if scale > 0.0 {
                    rng.random_range(1.0 - scale..=1.0 + scale)
                } else {
                    1.0
                };
                let b = if shift > 0.0 {
                    rng.random_range(-shift..=shift)
                } else {
                    0.0
                };
                x.iter().map(|&v| a * v + b).collect()
            }
        }
    }
}

pub fn default_ops() -> Vec<PerturbationOp> {
    vec![
        PerturbationOp::Mask {
            min_frac: 0.1,
            max_frac: 0.3,
        },
        PerturbationOp::Smooth { radius: 1 },
        PerturbationOp::Collapse { groups: 4 },
        PerturbationOp::Jitter {
            scale: 0.2,
            shift: 0.2,
        },
    ]
}

/// With probability `xi`, applies one uniformly chosen operation; otherwise
/// returns `x` unchanged.
pub fn rsp_perturb<R: Rng + ?Sized>(
    x: &[f64],
    ops: &[PerturbationOp],
    xi: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if ops.is_empty() {
        return Err(Error::InvalidArgument("no perturbation operations".into()));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidArgument(format!("xi must lie in [0, 1], got {xi}")));
    }
    if rng.random::<f64>() >= xi {
        return Ok(x.to_vec());
    }
    let op = ops[rng.random_range(0..ops.len())];
    Ok(op.apply(x, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Vec<f64> {
        (0..10).map(|i| i as f64 * 0.5 - 1.0).collect()
    }

    #[test]
    fn xi_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(rsp_perturb(&sample(), &default_ops(), 0.0, &mut rng).unwrap(), sample());
        }
    }

    #[test]
    fn single_group_collapse_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = sample();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let out = rsp_perturb(&x, &[PerturbationOp::Collapse { groups: 1 }], 1.0, &mut rng).unwrap();
        assert_eq!(out, vec![mean; x.len()]);
    }

    #[test]
    fn fixed_seed_repeats() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..50)
                .map(|_| rsp_perturb(&sample(), &default_ops(), 0.5, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!(a.iter().any(|v| v != &sample()));
    }

    #[test]
    fn ops_preserve_dimension_and_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample();
        for op in default_ops() {
            op.validate().unwrap();
            for _ in 0..20 {
                let y = op.apply(&x, &mut rng);
                assert_eq!(y.len(), x.len());
                match op {
                    PerturbationOp::Mask { .. } => {
                        let zeroed = y.iter().zip(&x).filter(|(a, b)| a != b).count();
                        assert!(zeroed <= 3);
                    }
                    PerturbationOp::Jitter { .. } => {
                        let a = (y[1] - y[0]) / (x[1] - x[0]);
                        assert!((0.8 - 1e-12..=1.2 + 1e-12).contains(&a));
                    }
                    _ => {}
                }
            }
        }
        assert_eq!(
            PerturbationOp::Smooth { radius: 1 }.apply(&[0.0, 3.0, 0.0], &mut rng),
            vec![1.5, 1.0, 1.5]
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rsp_perturb(&sample(), &[], 0.5, &mut rng).is_err());
        assert!(rsp_perturb(&sample(), &default_ops(), 1.5, &mut rng).is_err());
        assert!(PerturbationOp::Collapse { groups: 0 }.validate().is_err());
    }
}
