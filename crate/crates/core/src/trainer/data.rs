use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

/// Points with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: PointCloud<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledDataset {
    pub fn new(points: PointCloud<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::SizeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let classes = labels.iter().max().map_or(0, |&k| k + 1);
        if classes < 2 {
            return Err(Error::InvalidArgument(
                "a classification dataset needs at least two classes".into(),
            ));
        }
        Ok(Self {
            points,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Subset in the given order; keeps the class count of the parent.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            points: self.points.select(indices)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        })
    }

    /// Splits off the last `heldout` samples.
    pub fn split_tail(&self, heldout: usize) -> Result<(Self, Self)> {
        if heldout == 0 || heldout >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot hold out {heldout} of {} samples",
                self.len()
            )));
        }
        let cut = self.len() - heldout;
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..self.len()).collect();
        Ok((self.select(&head)?, self.select(&tail)?))
    }

    /// Parses `label,x_1,...,x_d` rows; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split(',').map(str::trim);
            let label_field = fields.next().unwrap_or_default();
            let label: usize = label_field.parse().map_err(|_| Error::NonNumeric {
                line: line_no,
                column: 1,
                field: label_field.to_string(),
            })?;
            let mut row = Vec::new();
            for (col, field) in fields.enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                    line: line_no,
                    column: col + 2,
                    field: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        line: line_no,
                        column: col + 2,
                    });
                }
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::RaggedRow {
                        line: line_no,
                        expected: first.len() + 1,
                        found: row.len() + 1,
                    });
                }
            } else if row.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "row has a label but no coordinates".into(),
                });
            }
            labels.push(label);
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        Self::new(PointCloud::from_rows(&rows)?, labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (p, label) in self.points.points().zip(&self.labels) {
            let _ = write!(out, "{label}");
            for v in p {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Gaussian class blobs with a fraction of inflated-variance "hard" samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    pub samples: usize,
    /// Standard deviation of the class centers around the origin.
    pub center_spread: f64,
    /// Standard deviation of ordinary samples around their center.
    pub spread: f64,
    pub hard_fraction: f64,
    /// Standard deviation of hard samples around their center.
    pub hard_spread: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            classes: 8,
            dim: 16,
            samples: 5000,
            center_spread: 1.0,
            spread: 1.0,
            hard_fraction: 0.2,
            hard_spread: 2.5,
        }
    }
}

/// Draws a blob dataset. Labels cycle through the classes, so every class is
/// equally represented and a tail split stays balanced.
pub fn synthetic_blobs(spec: &BlobSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.classes < 2 || spec.dim == 0 || spec.samples < spec.classes {
        return Err(Error::InvalidArgument(format!("invalid blob spec {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let centers: Vec<f64> = (0..spec.classes * spec.dim)
        .map(|_| spec.center_spread * gauss(&mut rng))
        .collect();
    let mut coords = Vec::with_capacity(spec.samples * spec.dim);
    let mut labels = Vec::with_capacity(spec.samples);
    for idx in 0..spec.samples {
        let label = idx % spec.classes;
        let sd = if rng.random::<f64>() < spec.hard_fraction {
            spec.hard_spread
        } else {
            spec.spread
        };
        let center = &centers[label * spec.dim..(label + 1) * spec.dim];
        coords.extend(center.iter().map(|&c| c + sd * gauss(&mut rng)));
        labels.push(label);
    }
    LabeledDataset::new(PointCloud::new(coords, spec.samples, spec.dim)?, labels)
}
