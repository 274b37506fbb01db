use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Logit scale of the margin head.
    pub s: f64,
    /// Additive angular margin, radians.
    pub m: f64,
    /// Weight of the alignment loss.
    pub alpha: f64,
    /// Probability of perturbing a sample.
    pub xi: f64,
    /// Temperature of the uncertainty factor.
    pub lambda: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            s: 64.0,
            m: 0.5,
            alpha: 0.1,
            xi: 0.2,
            lambda: 1.0,
            batch_size: 128,
            learning_rate: 1e-4,
            momentum: 0.9,
            epochs: 30,
            rng_seed: 0,
            hidden_dim: 64,
            latent_dim: 16,
        }
    }
}

const KEYS: [&str; 12] = [
    "s",
    "m",
    "alpha",
    "xi",
    "lambda",
    "batch_size",
    "learning_rate",
    "momentum",
    "epochs",
    "rng_seed",
    "hidden_dim",
    "latent_dim",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.s > 0.0 && self.s.is_finite()) {
            return bad(format!("s must be positive, got {}", self.s));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.m) {
            return bad(format!("m must lie in [0, π/2), got {}", self.m));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return bad(format!("xi must lie in [0, 1], got {}", self.xi));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return bad("hidden_dim and latent_dim must be positive".into());
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. Every field is required; `#` starts
    /// a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            values.insert(key.to_string(), (line_no, value.trim().to_string()));
        }

        fn get<V: FromStr>(values: &BTreeMap<String, (usize, String)>, key: &str) -> Result<V> {
            let (line, raw) = values
                .get(key)
                .ok_or_else(|| Error::MissingKey(key.to_string()))?;
            raw.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid value {raw:?} for `{key}`"),
            })
        }

        let cfg = Self {
            s: get(&values, "s")?,
            m: get(&values, "m")?,
            alpha: get(&values, "alpha")?,
            xi: get(&values, "xi")?,
            lambda: get(&values, "lambda")?,
            batch_size: get(&values, "batch_size")?,
            learning_rate: get(&values, "learning_rate")?,
            momentum: get(&values, "momentum")?,
            epochs: get(&values, "epochs")?,
            rng_seed: get(&values, "rng_seed")?,
            hidden_dim: get(&values, "hidden_dim")?,
            latent_dim: get(&values, "latent_dim")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "s = {}", self.s);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "xi = {}", self.xi);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(out, "momentum = {}", self.momentum);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "rng_seed = {}", self.rng_seed);
        let _ = writeln!(out, "hidden_dim = {}", self.hidden_dim);
        let _ = writeln!(out, "latent_dim = {}", self.latent_dim);
        out
    }
}

/// Which parts of the combined objective are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    /// Random structure perturbation of the inputs.
    pub rsp: bool,
    /// Alignment loss between the clean inputs and perturbed latents.
    pub isa: bool,
    /// Uncertainty factor `(1 + h)^λ` in the sample weight.
    pub uncertainty: bool,
    /// Probability factor `1 − g_gt` in the sample weight.
    pub probability: bool,
}

impl Variant {
    pub const BASELINE: Self = Self {
        rsp: false,
        isa: false,
        uncertainty: false,
        probability: false,
    };
    pub const FULL: Self = Self {
        rsp: true,
        isa: true,
        uncertainty: true,
        probability: true,
    };

    /// Named configurations: `baseline`, `rsp`, `align`, `ptsa`,
    /// `uncertainty`, `focal`, `topofr`.
    pub fn from_name(name: &str) -> Result<Self> {
        let ptsa = Self {
            rsp: true,
            isa: true,
            ..Self::BASELINE
        };
        Ok(match name {
            "baseline" => Self::BASELINE,
            "rsp" => Self {
                rsp: true,
                ..Self::BASELINE
            },
            "align" => Self {
                isa: true,
                ..Self::BASELINE
            },
            "ptsa" => ptsa,
            "uncertainty" => Self {
                uncertainty: true,
                ..ptsa
            },
            "focal" => Self {
                probability: true,
                ..ptsa
            },
            "topofr" => Self::FULL,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown mode `{other}` (expected baseline, rsp, align, ptsa, uncertainty, focal or topofr)"
                )))
            }
        })
    }

    pub fn uses_weights(&self) -> bool {
        self.uncertainty || self.probability
    }
}
