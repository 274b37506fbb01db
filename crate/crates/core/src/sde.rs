//! Structure damage estimation.
//!
//! Prediction entropies are modelled by a Gaussian-uniform mixture: a
//! half-normal `N⁺(0, Σ)` for easy samples and a uniform `U(0, Ω)` for hard
//! ones. The mixture is fitted per batch by EM on sign-augmented entropies,
//! and the posterior probability of the uniform component feeds the
//! structure damage score `ω = (1 + h)^λ · (1 − g_gt)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn normalization_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// Shannon entropy in nats, with `0 · log 0 = 0`.
pub fn entropy<T: Scalar>(probs: &[T]) -> Result<T> {
    check_distribution(probs)?;
    Ok(probs
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |acc, &p| acc - p * p.ln()))
}

fn check_distribution<T: Scalar>(probs: &[T]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if probs.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
        return Err(Error::InvalidArgument(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let total = probs.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > normalization_tolerance() {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// A classifier output with its cached entropy and ground-truth probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord<T> {
    pub probs: Vec<T>,
    pub label: usize,
    pub entropy: T,
    pub gt_prob: T,
}

impl<T: Scalar> PredictionRecord<T> {
    pub fn new(probs: Vec<T>, label: usize) -> Result<Self> {
        if label >= probs.len() {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} classes",
                probs.len()
            )));
        }
        let entropy = entropy(&probs)?;
        let gt_prob = probs[label];
        Ok(Self {
            probs,
            label,
            entropy,
            gt_prob,
        })
    }
}

/// Fitted mixture parameters `φ = {π, Σ, Ω}` and fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GumParams<T> {
    /// Prior of the Gaussian (easy) component.
    pub pi: T,
    /// Variance of the Gaussian component.
    pub sigma: T,
    /// Half-width of the uniform component on the sign-augmented axis.
    pub omega: T,
    pub log_likelihood: T,
    pub iterations: usize,
    /// Set when the input carried no spread (all entropies zero).
    pub degenerate: bool,
    /// Log-likelihood at initialization and after every iteration.
    pub trace: Vec<T>,
}

impl<T: Scalar> GumParams<T> {
    /// Parameters without diagnostics, for evaluating a known mixture.
    pub fn fixed(pi: T, sigma: T, omega: T) -> Self {
        Self {
            pi,
            sigma,
            omega,
            log_likelihood: T::nan(),
            iterations: 0,
            degenerate: false,
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GumOptions<T> {
    pub max_iter: usize,
    pub tol: T,
    pub sigma_floor: T,
    pub omega_floor: T,
}

impl<T: Scalar> Default for GumOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: T::lit(1e-6),
            sigma_floor: T::lit(1e-8),
            omega_floor: T::lit(1e-8),
        }
    }
}

#[inline]
fn gaussian_density<T: Scalar>(x: T, variance: T) -> T {
    let two = T::lit(2.0);
    (-(x * x) / (two * variance)).exp() / (two * T::PI() * variance).sqrt()
}

/// Uniform density on `[-Ω, Ω]` (the sign-augmented form).
#[inline]
fn symmetric_uniform_density<T: Scalar>(x: T, omega: T) -> T {
    if x.abs() <= omega {
        (T::lit(2.0) * omega).recip()
    } else {
        T::zero()
    }
}

/// Log-likelihood of the entropies under the sign-augmented mixture.
///
/// Mirroring a sample to `±E` with weight ½ each leaves its likelihood term
/// unchanged because the density is symmetric, so the sum runs over `E`.
pub fn gum_log_likelihood<T: Scalar>(entropies: &[T], pi: T, sigma: T, omega: T) -> T {
    entropies.iter().fold(T::zero(), |acc, &e| {
        let density = pi * gaussian_density(e, sigma)
            + (T::one() - pi) * symmetric_uniform_density(e, omega);
        acc + density.ln()
    })
}

/// Posterior probability that a sample with entropy `e` is hard.
///
/// The uniform term vanishes outside its support `[0, Ω]`.
pub fn gum_posterior<T: Scalar>(e: T, params: &GumParams<T>) -> Result<T> {
    if !(e >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "entropy must be non-negative, got {e}"
        )));
    }
    let two = T::lit(2.0);
    let easy = params.pi * two * gaussian_density(e, params.sigma);
    let hard = if e <= params.omega {
        (T::one() - params.pi) / params.omega
    } else {
        T::zero()
    };
    let total = easy + hard;
    Ok(if total > T::zero() { hard / total } else { T::zero() })
}

fn e_step<T: Scalar>(entropies: &[T], pi: T, sigma: T, omega: T, out: &mut [T]) {
    for (h, &e) in out.iter_mut().zip(entropies) {
        let hard = (T::one() - pi) * symmetric_uniform_density(e, omega);
        let total = pi * gaussian_density(e, sigma) + hard;
        *h = if total > T::zero() { hard / total } else { T::zero() };
    }
}

/// Fits the mixture by EM with deterministic sign augmentation.
///
/// Initialization: `π = 0.5`, `Σ` = variance of the mirrored sample, `Ω` =
/// largest entropy. Each iteration runs the E-step, then the closed-form
/// updates for `π` and `Σ`, then the moment update
/// `Ω = √(3(η₂ − η₁²))`. The `Ω` proposal is kept only if it does not lower
/// the likelihood at the new `(π, Σ)`, so the likelihood never decreases.
pub fn gum_fit<T: Scalar>(entropies: &[T], opts: &GumOptions<T>) -> Result<GumParams<T>> {
    if entropies.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "mixture fit needs at least 2 samples, got {}",
            entropies.len()
        )));
    }
    if let Some(bad) = entropies.iter().find(|e| !(e.is_finite() && **e >= T::zero())) {
        return Err(Error::InvalidArgument(format!(
            "entropies must be finite and non-negative, got {bad}"
        )));
    }
    let n = T::from_count(entropies.len());
    let max_e = entropies.iter().fold(T::zero(), |a, &b| a.max(b));
    if max_e == T::zero() {
        let (pi, sigma, omega) = (T::one(), opts.sigma_floor, opts.omega_floor);
        let ll = gum_log_likelihood(entropies, pi, sigma, omega);
        return Ok(GumParams {
            pi,
            sigma,
            omega,
            log_likelihood: ll,
            iterations: 0,
            degenerate: true,
            trace: vec![ll],
        });
    }

    let mut pi = T::lit(0.5);
    let mut sigma = (entropies.iter().fold(T::zero(), |a, &e| a + e * e) / n).max(opts.sigma_floor);
    let mut omega = max_e.max(opts.omega_floor);
    let mut ll = gum_log_likelihood(entropies, pi, sigma, omega);
    let mut trace = vec![ll];
    let mut h = vec![T::zero(); entropies.len()];
    let half = T::lit(0.5);
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        e_step(entropies, pi, sigma, omega, &mut h);

        let easy_mass = h.iter().fold(T::zero(), |a, &hi| a + (T::one() - hi));
        let next_pi = easy_mass / n;
        let next_sigma = if easy_mass > T::zero() {
            let weighted = h
                .iter()
                .zip(entropies)
                .fold(T::zero(), |a, (&hi, &e)| a + (T::one() - hi) * e * e);
            (weighted / easy_mass).max(opts.sigma_floor)
        } else {
            sigma
        };

        // Moments over the mirrored sample (±E with weight ½ each).
        let hard_prior = T::one() - next_pi;
        let proposal = if hard_prior > T::zero() && easy_mass > T::zero() {
            let (mut m1, mut m2) = (T::zero(), T::zero());
            for (&hi, &e) in h.iter().zip(entropies) {
                let w = hi / hard_prior;
                m1 += half * (w * e) + half * (w * -e);
                m2 += w * e * e;
            }
            let eta1 = m1 / easy_mass;
            let eta2 = m2 / easy_mass;
            let spread = T::lit(3.0) * (eta2 - eta1 * eta1);
            Some(spread.max(T::zero()).sqrt().max(opts.omega_floor))
        } else {
            None
        };

        let kept_ll = gum_log_likelihood(entropies, next_pi, next_sigma, omega);
        let (next_omega, next_ll) = match proposal {
            Some(candidate) => {
                let cand_ll = gum_log_likelihood(entropies, next_pi, next_sigma, candidate);
                if cand_ll >= kept_ll {
                    (candidate, cand_ll)
                } else {
                    (omega, kept_ll)
                }
            }
            None => (omega, kept_ll),
        };

        pi = next_pi;
        sigma = next_sigma;
        omega = next_omega;
        let delta = next_ll - ll;
        ll = next_ll;
        trace.push(ll);
        if delta.abs() < opts.tol {
            break;
        }
    }

    Ok(GumParams {
        pi,
        sigma,
        omega,
        log_likelihood: ll,
        iterations,
        degenerate: false,
        trace,
    })
}

/// Per-sample score. `w1 = (1 + h)^λ`, `w2 = 1 − g_gt`, `sds = w1 · w2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScore<T> {
    pub h: T,
    pub w1: T,
    pub w2: T,
    pub sds: T,
}

pub fn structure_damage_score<T: Scalar>(h: T, gt_prob: T, lambda: T) -> Result<SampleScore<T>> {
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if !unit(h) {
        return Err(Error::InvalidArgument(format!("posterior {h} outside [0, 1]")));
    }
    if !unit(gt_prob) {
        return Err(Error::InvalidArgument(format!(
            "ground-truth probability {gt_prob} outside [0, 1]"
        )));
    }
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be finite and non-negative, got {lambda}"
        )));
    }
    let w1 = (T::one() + h).powf(lambda);
    let w2 = T::one() - gt_prob;
    Ok(SampleScore {
        h,
        w1,
        w2,
        sds: w1 * w2,
    })
}

#[inline]
pub fn weighted_classification_loss<T: Scalar>(score: &SampleScore<T>, arc_loss: T) -> T {
    score.sds * arc_loss
}

/// Draws `n` entropies from the mixture: with probability `pi` a half-normal
/// of variance `sigma`, otherwise uniform on `[0, width]`.
pub fn sample_gum_entropies(n: usize, pi: f64, sigma: f64, width: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.sqrt()).expect("valid variance");
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < pi {
                normal.sample(&mut rng).abs()
            } else {
                rng.random_range(0.0..width)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_monotone(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "likelihood dropped: {} -> {}", w[0], w[1]);
        }
    }

    /// Coarse-to-fine grid search over (π, Σ, Ω) maximizing the same
    /// likelihood, written independently of the EM path.
    fn grid_mle(e: &[f64]) -> (f64, f64, f64) {
        let ll = |pi: f64, s: f64, o: f64| -> f64 {
            e.iter()
                .map(|&x| {
                    let g = (-x * x / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s).sqrt();
                    let u = if x <= o { 0.5 / o } else { 0.0 };
                    (pi * g + (1.0 - pi) * u).ln()
                })
                .sum()
        };
        let max_e = e.iter().cloned().fold(0.0, f64::max);
        let (mut pi_c, mut s_c, mut o_c) = (0.5, 0.1, max_e);
        let (mut pi_w, mut s_w, mut o_w) = (0.5, 0.1, 0.5 * max_e);
        for _ in 0..4 {
            let mut best = (f64::NEG_INFINITY, pi_c, s_c, o_c);
            for a in 0..=20 {
                let pi = (pi_c - pi_w + pi_w * a as f64 / 10.0).clamp(0.001, 0.999);
                for b in 0..=20 {
                    let s = (s_c - s_w + s_w * b as f64 / 10.0).max(1e-4);
                    for c in 0..=10 {
                        let o = (o_c - o_w + o_w * c as f64 / 5.0).clamp(1e-3, max_e * 2.0);
                        let o = if o < max_e && c == 10 { max_e } else { o };
                        let v = ll(pi, s, o);
                        if v > best.0 {
                            best = (v, pi, s, o);
                        }
                    }
                }
            }
            (pi_c, s_c, o_c) = (best.1, best.2, best.3);
            pi_w /= 5.0;
            s_w /= 5.0;
            o_w /= 5.0;
        }
        (pi_c, s_c, o_c)
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(&[0.25f64; 4]).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&[0.5, 0.5, 0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.1, 1.1]).is_err());
        assert!(entropy::<f64>(&[]).is_err());
    }

    #[test]
    fn prediction_record_caches() {
        let r = PredictionRecord::new(vec![0.2, 0.8], 1).unwrap();
        assert_eq!(r.gt_prob, 0.8);
        assert_abs_diff_eq!(r.entropy, -(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln()), epsilon = 1e-15);
        assert!(PredictionRecord::new(vec![1.0], 1).is_err());
    }

    #[test]
    fn posterior_examples() {
        let all_easy = GumParams::fixed(1.0, 0.3, 2.0);
        assert_eq!(gum_posterior(0.7, &all_easy).unwrap(), 0.0);

        // 0.5 / (0.5 · 2/√(2π) + 0.5) from the closed-form densities.
        let p = GumParams::fixed(0.5, 1.0, 1.0);
        let expect = 0.5 / (0.5 * 2.0 / (2.0 * std::f64::consts::PI).sqrt() + 0.5);
        assert_abs_diff_eq!(expect, 0.5562, epsilon = 5e-5);
        assert_abs_diff_eq!(gum_posterior(0.0, &p).unwrap(), expect, epsilon = 1e-15);

        assert_eq!(gum_posterior(1.5, &GumParams::fixed(0.4, 1.0, 1.0)).unwrap(), 0.0);
        assert!(gum_posterior(-0.1, &p).is_err());
    }

    #[test]
    fn fit_recovers_synthetic_mixture() {
        let e = sample_gum_entropies(5000, 0.8, 0.04, 2.0, 20240501);
        let fit = gum_fit(&e, &GumOptions::default()).unwrap();
        assert_monotone(&fit.trace);
        assert!((fit.pi - 0.8).abs() <= 0.1, "pi = {}", fit.pi);
        let (pi_grid, _, _) = grid_mle(&e);
        assert!((fit.pi - pi_grid).abs() <= 0.05, "em {} vs grid {}", fit.pi, pi_grid);
    }

    #[test]
    fn fit_pure_half_gaussian() {
        let e = sample_gum_entropies(3000, 1.0, 0.04, 2.0, 9);
        let fit = gum_fit(&e, &GumOptions::default()).unwrap();
        assert_monotone(&fit.trace);
        assert!(fit.pi >= 0.95, "pi = {}", fit.pi);
    }

    #[test]
    fn fit_two_equal_samples() {
        let fit = gum_fit(&[0.1f64, 0.1], &GumOptions::default()).unwrap();
        assert!(fit.log_likelihood.is_finite());
        assert!(!fit.degenerate);
        assert_monotone(&fit.trace);
    }

    #[test]
    fn fit_all_zero_is_degenerate() {
        let fit = gum_fit(&[0.0; 5], &GumOptions::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!((fit.pi, fit.sigma, fit.omega), (1.0, 1e-8, 1e-8));
    }

    #[test]
    fn fit_rejects_bad_input() {
        let opts = GumOptions::default();
        assert!(gum_fit(&[0.3], &opts).is_err());
        assert!(gum_fit(&[0.3, -0.1], &opts).is_err());
        assert!(gum_fit(&[0.3, f64::NAN], &opts).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let e = sample_gum_entropies(500, 0.7, 0.02, 1.5, 4);
        let opts = GumOptions::default();
        assert_eq!(gum_fit(&e, &opts).unwrap(), gum_fit(&e, &opts).unwrap());
    }

    #[test]
    fn fit_in_single_precision() {
        let e: Vec<f32> = sample_gum_entropies(1000, 0.8, 0.04, 2.0, 1)
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let fit = gum_fit(&e, &GumOptions::default()).unwrap();
        assert!((fit.pi - 0.8).abs() <= 0.1);
    }

    #[test]
    fn score_examples() {
        assert_eq!(structure_damage_score(0.0, 1.0, 1.0).unwrap().sds, 0.0);
        assert_eq!(structure_damage_score(1.0, 0.0, 1.0).unwrap().sds, 2.0);
        let s = structure_damage_score(0.5, 0.3, 2.0).unwrap();
        assert_abs_diff_eq!(s.sds, 1.5 * 1.5 * 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sds, 1.575, epsilon = 1e-12);
        assert!(structure_damage_score(1.5, 0.3, 1.0).is_err());
        assert!(structure_damage_score(0.5, -0.3, 1.0).is_err());
        assert!(structure_damage_score(0.5, 0.3, -1.0).is_err());
    }

    #[test]
    fn weighted_loss_examples() {
        let zero = structure_damage_score(0.0, 1.0, 1.0).unwrap();
        assert_eq!(weighted_classification_loss(&zero, 17.0), 0.0);
        let one = SampleScore { h: 0.0, w1: 1.0, w2: 1.0, sds: 1.0 };
        assert_eq!(weighted_classification_loss(&one, 2.5), 2.5);
        let s = SampleScore { h: 0.5, w1: 2.25, w2: 0.7, sds: 1.575 };
        assert_abs_diff_eq!(weighted_classification_loss(&s, 2.0), 3.15, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn posterior_is_monotone(
            pi in 0.0f64..1.0, sigma in 1e-3f64..2.0, omega in 1e-2f64..3.0,
            a in 0.0f64..1.0, b in 0.0f64..1.0,
        ) {
            let p = GumParams::fixed(pi, sigma, omega);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let h_lo = gum_posterior(lo * omega, &p).unwrap();
            let h_hi = gum_posterior(hi * omega, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&h_lo));
            prop_assert!(h_lo <= h_hi);
        }

        #[test]
        fn em_never_decreases_likelihood(
            seed in 0u64..1000, pi in 0.3f64..1.0, sigma in 0.005f64..0.2, n in 2usize..300,
        ) {
            let e = sample_gum_entropies(n, pi, sigma, 2.0, seed);
            let fit = gum_fit(&e, &GumOptions::default()).unwrap();
            for w in fit.trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-10);
            }
            prop_assert!((0.0..=1.0).contains(&fit.pi));
            prop_assert!(fit.sigma >= 1e-8 && fit.omega >= 1e-8);
        }

        #[test]
        fn score_ordering(h1 in 0.0f64..1.0, h2 in 0.0f64..1.0, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0, lambda in 0.0f64..4.0) {
            let hard = structure_damage_score(h1.max(h2), g1.min(g2), lambda).unwrap();
            let easy = structure_damage_score(h1.min(h2), g1.max(g2), lambda).unwrap();
            prop_assert!(hard.sds >= easy.sds);
        }
    }
}
