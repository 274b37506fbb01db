//! Desk-scale training harness for the combined objective
//! `L = mean_i(ω_i · L_arc,i) + α · L_sa`.
//!
//! A one-hidden-layer encoder maps (possibly perturbed) inputs to latent
//! features, a margin softmax head classifies them, a Gaussian-uniform
//! mixture over the prediction entropies yields per-sample weights `ω`, and
//! the alignment loss ties the latent MST structure to the clean inputs. The
//! backward pass is written out by hand; pairings and `ω` are held constant
//! within a step.

mod arcface;
mod config;
mod data;
mod encoder;
mod experiment;
mod perturb;

pub use arcface::{arcface_forward_backward, arcface_loss, ArcFaceOutput};
pub use config::{TrainConfig, Variant};
pub use data::{synthetic_blobs, BlobSpec, LabeledDataset};
pub use encoder::{Activations, EncoderParams};
pub use experiment::{run_experiment, EpochRow, Report, REPORT_HEADER};
pub use perturb::{default_ops, rsp_perturb, PerturbationOp};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alignment::isa_objective;
use crate::error::{Error, Result};
use crate::persistence::{h0_persistence, PersistencePairing};
use crate::pointcloud::{pairwise_distances, DistanceMatrix, PointCloud};
use crate::sde::{entropy, gum_fit, gum_posterior, structure_damage_score, GumOptions, GumParams};

/// Everything that changes during training.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: EncoderParams,
    /// Momentum buffer, same shape as `params`.
    pub velocity: EncoderParams,
    pub rng: ChaCha8Rng,
    pub ops: Vec<PerturbationOp>,
}

impl TrainState {
    /// Seeds the generator from `cfg.rng_seed` and initializes the encoder.
    pub fn new(input_dim: usize, classes: usize, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let params = EncoderParams::init(input_dim, cfg.hidden_dim, cfg.latent_dim, classes, &mut rng);
        let velocity = params.zeros_like();
        Self {
            params,
            velocity,
            rng,
            ops: default_ops(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub l_cls: f64,
    pub l_sa: f64,
    pub total: f64,
    pub weight_mean: f64,
    pub weight_min: f64,
    pub weight_max: f64,
    pub gum: GumParams<f64>,
    /// All inputs of the batch coincide.
    pub degenerate_batch: bool,
}

/// Values of the objective at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub l_cls: f64,
    pub l_sa: f64,
    pub total: f64,
}

/// Forward pass over a batch: activations and per-sample head outputs.
pub struct BatchForward {
    pub activations: Vec<Activations>,
    pub heads: Vec<ArcFaceOutput>,
    pub latent: PointCloud<f64>,
}

pub fn forward_batch(
    params: &EncoderParams,
    inputs: &PointCloud<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<BatchForward> {
    if labels.len() != inputs.len() {
        return Err(Error::SizeMismatch(format!(
            "{} labels for {} samples",
            labels.len(),
            inputs.len()
        )));
    }
    let activations: Vec<Activations> = inputs.points().map(|x| params.forward(x)).collect();
    let heads = activations
        .iter()
        .zip(labels)
        .map(|(act, &y)| arcface_forward_backward(&act.latent, y, &params.centers, cfg.s, cfg.m))
        .collect::<Result<Vec<_>>>()?;
    let latent = PointCloud::new(
        activations.iter().flat_map(|a| a.latent.iter().copied()).collect(),
        inputs.len(),
        params.latent_dim,
    )?;
    Ok(BatchForward {
        activations,
        heads,
        latent,
    })
}

/// Per-sample weights `ω` from the head probabilities, plus the mixture fit
/// behind them. Disabled factors are replaced by 1.
pub fn sample_weights(
    heads: &[ArcFaceOutput],
    labels: &[usize],
    variant: Variant,
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, GumParams<f64>)> {
    let entropies = heads
        .iter()
        .map(|h| entropy(&h.probs).map(|e| e.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let gum = gum_fit(&entropies, &GumOptions::default())?;
    let mut weights = Vec::with_capacity(heads.len());
    for ((head, &y), &e) in heads.iter().zip(labels).zip(&entropies) {
        let h = gum_posterior(e, &gum)?;
        let score = structure_damage_score(h, head.probs[y].clamp(0.0, 1.0), cfg.lambda)?;
        let w1 = if variant.uncertainty { score.w1 } else { 1.0 };
        let w2 = if variant.probability { score.w2 } else { 1.0 };
        weights.push(w1 * w2);
    }
    Ok((weights, gum))
}

/// Combines a forward pass with fixed weights into the objective and its
/// exact gradient. The latent pairing is recomputed from the forward pass
/// and then held fixed; `alpha = 0` skips the alignment gradient.
pub fn assemble(
    params: &EncoderParams,
    inputs: &PointCloud<f64>,
    fwd: &BatchForward,
    clean_distances: &DistanceMatrix<f64>,
    clean_pairing: &PersistencePairing,
    weights: &[f64],
    alpha: f64,
) -> Result<(Objective, EncoderParams)> {
    let n = inputs.len();
    let inv_n = 1.0 / n as f64;
    let l_cls = fwd
        .heads
        .iter()
        .zip(weights)
        .map(|(h, w)| w * h.loss)
        .sum::<f64>()
        * inv_n;
    let (l_sa, isa_grad) = isa_objective(clean_distances, clean_pairing, &fwd.latent)?;

    let mut grads = params.zeros_like();
    let l = params.latent_dim;
    for (i, ((x, act), head)) in inputs
        .points()
        .zip(&fwd.activations)
        .zip(&fwd.heads)
        .enumerate()
    {
        let scale = weights[i] * inv_n;
        let mut grad_latent: Vec<f64> = head.grad_feature.iter().map(|g| g * scale).collect();
        if alpha != 0.0 {
            for (g, ig) in grad_latent.iter_mut().zip(&isa_grad[i * l..(i + 1) * l]) {
                *g += alpha * ig;
            }
        }
        for (gc, hc) in grads.centers.iter_mut().zip(&head.grad_centers) {
            *gc += scale * hc;
        }
        params.backward(x, act, &grad_latent, &mut grads);
    }
    Ok((
        Objective {
            l_cls,
            l_sa,
            total: l_cls + alpha * l_sa,
        },
        grads,
    ))
}

/// Objective and gradient at `params` with the weights held fixed.
pub fn objective_and_gradient(
    params: &EncoderParams,
    clean: &PointCloud<f64>,
    perturbed: &PointCloud<f64>,
    labels: &[usize],
    weights: &[f64],
    cfg: &TrainConfig,
    alpha: f64,
) -> Result<(Objective, EncoderParams)> {
    let m_x = pairwise_distances(clean);
    let (_, gamma_x) = h0_persistence(&m_x);
    let fwd = forward_batch(params, perturbed, labels, cfg)?;
    assemble(params, perturbed, &fwd, &m_x, &gamma_x, weights, alpha)
}

/// One optimization step on a batch of clean inputs.
pub fn train_step(
    state: &mut TrainState,
    batch_x: &PointCloud<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
    variant: Variant,
) -> Result<StepMetrics> {
    if batch_x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a training batch needs at least 2 samples, got {}",
            batch_x.len()
        )));
    }
    let perturbed = if variant.rsp {
        let mut coords = Vec::with_capacity(batch_x.as_slice().len());
        for x in batch_x.points() {
            coords.extend(rsp_perturb(x, &state.ops, cfg.xi, &mut state.rng)?);
        }
        PointCloud::new(coords, batch_x.len(), batch_x.dim())?
    } else {
        batch_x.clone()
    };

    let m_x = pairwise_distances(batch_x);
    let degenerate_batch = (1..m_x.len()).all(|j| m_x.get(0, j) == 0.0);
    let (_, gamma_x) = h0_persistence(&m_x);

    let fwd = forward_batch(&state.params, &perturbed, labels, cfg)?;
    let (weights, gum) = sample_weights(&fwd.heads, labels, variant, cfg)?;
    let alpha = if variant.isa { cfg.alpha } else { 0.0 };
    let (obj, grads) = assemble(&state.params, &perturbed, &fwd, &m_x, &gamma_x, &weights, alpha)?;

    state.velocity.axpby(cfg.momentum, &grads, 1.0);
    state.params.axpby(1.0, &state.velocity, -cfg.learning_rate);
    state.params.normalize_centers();
    if !state.params.is_finite() {
        return Err(Error::InvalidArgument(
            "training diverged: non-finite parameters".into(),
        ));
    }

    let weight_mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let weight_min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let weight_max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(StepMetrics {
        l_cls: obj.l_cls,
        l_sa: obj.l_sa,
        total: obj.total,
        weight_mean,
        weight_min,
        weight_max,
        gum,
        degenerate_batch,
    })
}
