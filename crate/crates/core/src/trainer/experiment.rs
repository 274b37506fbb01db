use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{train_step, LabeledDataset, TrainConfig, TrainState, Variant};
use crate::alignment::structure_discrepancy;
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

pub const REPORT_HEADER: &str = "epoch,L_cls,L_sa,discrepancy_heldout,accuracy,pi,sigma,omega";

/// Epoch means of the step metrics plus the held-out evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub l_cls: f64,
    pub l_sa: f64,
    pub discrepancy_heldout: f64,
    pub accuracy: f64,
    pub pi: f64,
    pub sigma: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<EpochRow>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.epoch, r.l_cls, r.l_sa, r.discrepancy_heldout, r.accuracy, r.pi, r.sigma, r.omega
            );
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRow> {
        self.rows.last()
    }
}

/// Held-out discrepancy between the first `batch_size` inputs and their
/// latents, and accuracy over the whole held-out split.
fn evaluate(state: &TrainState, heldout: &LabeledDataset, batch_size: usize) -> Result<(f64, f64)> {
    let params = &state.params;
    let latents = params.encode(heldout.points.points());
    let l = params.latent_dim;
    let correct = latents
        .chunks_exact(l)
        .zip(&heldout.labels)
        .filter(|(z, &y)| params.predict(z) == y)
        .count();
    let accuracy = correct as f64 / heldout.len() as f64;

    let k = batch_size.min(heldout.len());
    let idx: Vec<usize> = (0..k).collect();
    let x = heldout.points.select(&idx)?;
    let z = PointCloud::new(latents[..k * l].to_vec(), k, l)?;
    Ok((structure_discrepancy(&x, &z)?, accuracy))
}

/// Trains from scratch and evaluates on `heldout` after every epoch. Batches
/// are reshuffled each epoch; a trailing batch smaller than 2 is dropped.
pub fn run_experiment(
    train: &LabeledDataset,
    heldout: &LabeledDataset,
    cfg: &TrainConfig,
    variant: Variant,
) -> Result<Report> {
    cfg.validate()?;
    if train.dim() != heldout.dim() {
        return Err(Error::SizeMismatch(format!(
            "train dimension {} differs from held-out dimension {}",
            train.dim(),
            heldout.dim()
        )));
    }
    if train.len() < 2 || heldout.len() < 2 {
        return Err(Error::InvalidArgument(
            "train and held-out splits need at least 2 samples each".into(),
        ));
    }
    let classes = train.classes.max(heldout.classes);
    let mut state = TrainState::new(train.dim(), classes, cfg);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rows = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut state.rng);
        let mut sums = [0.0f64; 5];
        let mut steps = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch = train.select(chunk)?;
            let m = train_step(&mut state, &batch.points, &batch.labels, cfg, variant)?;
            for (s, v) in sums
                .iter_mut()
                .zip([m.l_cls, m.l_sa, m.gum.pi, m.gum.sigma, m.gum.omega])
            {
                *s += v;
            }
            steps += 1;
        }
        let mean = |k: usize| if steps == 0 { 0.0 } else { sums[k] / steps as f64 };
        let (discrepancy_heldout, accuracy) = evaluate(&state, heldout, cfg.batch_size)?;
        rows.push(EpochRow {
            epoch,
            l_cls: mean(0),
            l_sa: mean(1),
            discrepancy_heldout,
            accuracy,
            pi: mean(2),
            sigma: mean(3),
            omega: mean(4),
        });
    }
    Ok(Report { rows })
}
