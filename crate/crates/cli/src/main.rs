use std::fmt::Write as _;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use topoalign::alignment::structure_discrepancy;
use topoalign::metrics::{bottleneck_distance, wasserstein_distance};
use topoalign::persistence::{betti_counts, format_diagram, h0_persistence, parse_diagram, rips_persistence};
use topoalign::pointcloud::{load_point_cloud, pairwise_distances};
use topoalign::sde::{entropy, gum_fit, gum_posterior, structure_damage_score, GumOptions};
use topoalign::trainer::{run_experiment, synthetic_blobs, BlobSpec, LabeledDataset, TrainConfig, Variant};
use topoalign::{Error, PersistenceDiagram, PointCloud};

#[derive(Parser, Debug)]
#[command(name = "topoalign", version, about = "Persistent homology, structure alignment and hard-sample scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Persistence diagram of a point cloud (one `x1,...,xd` row per point).
    Diagram {
        input: PathBuf,
        /// Highest homology dimension; 0 uses the union-find sweep.
        #[arg(long, default_value_t = 0)]
        max_dim: usize,
        /// Largest simplex diameter included in the filtration.
        #[arg(long, default_value_t = f64::INFINITY)]
        max_scale: f64,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two diagram files in one homology dimension.
    Distance {
        d1: PathBuf,
        d2: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Bottleneck)]
        metric: Metric,
        /// Order of the Wasserstein distance.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        dim: usize,
    },
    /// Alignment loss between an input cloud and its embedding.
    Align { x: PathBuf, z: PathBuf },
    /// Fit the Gaussian-uniform mixture to a file of entropies.
    Gum {
        entropies: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Per-sample hard-sample scores from `label,p1,...,pK` prediction rows.
    Score {
        predictions: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Train the encoder and emit the per-epoch report.
    Train {
        /// Labelled `label,x1,...,xd` rows.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        dataset: Option<PathBuf>,
        /// Use the built-in Gaussian blob generator instead of a file.
        #[arg(long)]
        synthetic: bool,
        /// `key = value` file with every training parameter.
        #[arg(long)]
        config: Option<PathBuf>,
        /// baseline, rsp, align, ptsa, uncertainty, focal or topofr.
        #[arg(long, default_value = "topofr")]
        mode: String,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of trailing samples held out for evaluation.
        #[arg(long, default_value_t = 1000)]
        heldout: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Betti numbers of a point cloud over a grid of scales, as CSV.
    Report {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        max_dim: usize,
        /// Upper end of the scale grid; defaults to the largest finite death.
        #[arg(long)]
        max_scale: Option<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Metric {
    Bottleneck,
    Wasserstein,
}

#[derive(Serialize)]
struct GumJson {
    pi: f64,
    sigma: f64,
    omega: f64,
    log_likelihood: f64,
    iterations: usize,
    degenerate: bool,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Rounds to 12 significant digits and prints the shortest form of the
/// rounded value.
fn format_scalar(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Whitespace- or comma-separated numbers; `#` starts a comment.
fn parse_numbers(text: &str) -> Result<Vec<f64>, Error> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or_default();
        for (col, field) in content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .enumerate()
        {
            let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                line: idx + 1,
                column: col + 1,
                field: field.to_string(),
            })?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values)
}

fn diagram_of(cloud: &PointCloud, max_dim: usize, max_scale: f64) -> Result<PersistenceDiagram, Error> {
    let m = pairwise_distances(cloud);
    if max_dim == 0 {
        let (d, _) = h0_persistence(&m);
        // The sweep ignores the scale cap; apply it afterwards.
        let features = d
            .features
            .into_iter()
            .filter(|f| f.birth <= max_scale)
            .map(|mut f| {
                if f.death > max_scale {
                    f.death = f64::INFINITY;
                }
                f
            })
            .collect();
        Ok(PersistenceDiagram::new(features, 0))
    } else {
        rips_persistence(&m, max_dim, max_scale)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Diagram {
            input,
            max_dim,
            max_scale,
            out,
        } => {
            let cloud: PointCloud = load_point_cloud(&input)?;
            let d = diagram_of(&cloud, max_dim, max_scale)?;
            emit(&format_diagram(&d), out.as_deref())
        }
        Command::Distance {
            d1,
            d2,
            metric,
            p,
            dim,
        } => {
            let a: PersistenceDiagram = parse_diagram(&read(&d1)?)?;
            let b: PersistenceDiagram = parse_diagram(&read(&d2)?)?;
            let (a, b) = (a.finite_part(dim), b.finite_part(dim));
            let value = match metric {
                Metric::Bottleneck => bottleneck_distance(&a, &b),
                Metric::Wasserstein => wasserstein_distance(&a, &b, p)?,
            };
            println!("{}", format_scalar(value));
            Ok(())
        }
        Command::Align { x, z } => {
            let x: PointCloud = load_point_cloud(&x)?;
            let z: PointCloud = load_point_cloud(&z)?;
            println!("{}", format_scalar(structure_discrepancy(&x, &z)?));
            Ok(())
        }
        Command::Gum {
            entropies,
            tol,
            max_iter,
        } => {
            let values = parse_numbers(&read(&entropies)?)?;
            let opts = GumOptions {
                tol,
                max_iter,
                ..GumOptions::default()
            };
            let fit = gum_fit(&values, &opts)?;
            let json = GumJson {
                pi: fit.pi,
                sigma: fit.sigma,
                omega: fit.omega,
                log_likelihood: fit.log_likelihood,
                iterations: fit.iterations,
                degenerate: fit.degenerate,
            };
            let text = serde_json::to_string_pretty(&json)
                .map_err(|e| Error::InvalidArgument(format!("cannot serialize fit: {e}")))?;
            println!("{text}");
            Ok(())
        }
        Command::Score {
            predictions,
            lambda,
            tol,
            max_iter,
        } => {
            let rows = LabeledDataset::parse(&read(&predictions)?)?;
            let mut entropies = Vec::with_capacity(rows.len());
            for probs in rows.points.points() {
                entropies.push(entropy(probs)?.max(0.0));
            }
            let opts = GumOptions {
                tol,
                max_iter,
                ..GumOptions::default()
            };
            let fit = gum_fit(&entropies, &opts)?;
            let mut out = String::from("index,entropy,gt_prob,h,w1,w2,sds\n");
            for (i, ((probs, &label), &e)) in rows
                .points
                .points()
                .zip(&rows.labels)
                .zip(&entropies)
                .enumerate()
            {
                let gt = *probs.get(label).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "row {}: label {label} has no probability column",
                        i + 1
                    ))
                })?;
                let score = structure_damage_score(gum_posterior(e, &fit)?, gt, lambda)?;
                let _ = writeln!(
                    out,
                    "{i},{e},{gt},{},{},{},{}",
                    score.h, score.w1, score.w2, score.sds
                );
            }
            emit(&out, None)
        }
        Command::Train {
            dataset,
            synthetic,
            config,
            mode,
            seed,
            heldout,
            out,
        } => {
            let variant = Variant::from_name(&mode)?;
            let mut cfg = match config {
                Some(path) => TrainConfig::load(&path)?,
                None => TrainConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            cfg.validate()?;
            let data = match dataset {
                Some(path) if !synthetic => LabeledDataset::load(&path)?,
                _ => synthetic_blobs(&BlobSpec::default(), cfg.rng_seed)?,
            };
            let (train, held) = data.split_tail(heldout)?;
            let report = run_experiment(&train, &held, &cfg, variant)?;
            emit(&report.to_csv(), out.as_deref())
        }
        Command::Report {
            input,
            max_dim,
            max_scale,
            steps,
            out,
        } => {
            if steps == 0 {
                return Err(Error::InvalidArgument("--steps must be positive".into()));
            }
            let cloud: PointCloud = load_point_cloud(&input)?;
            let cap = max_scale.unwrap_or(f64::INFINITY);
            let d = diagram_of(&cloud, max_dim, cap)?;
            let top = max_scale.unwrap_or_else(|| {
                d.features
                    .iter()
                    .filter(|f| !f.is_essential())
                    .map(|f| f.death)
                    .fold(0.0, f64::max)
            });
            let mut text = String::from("scale");
            for k in 0..=max_dim {
                let _ = write!(text, ",betti_{k}");
            }
            text.push('\n');
            for s in 0..=steps {
                let scale = top * s as f64 / steps as f64;
                let counts = betti_counts(&d, scale);
                let _ = write!(text, "{}", format_scalar(scale));
                for k in 0..=max_dim {
                    let _ = write!(text, ",{}", counts.get(&k).copied().unwrap_or(0));
                }
                text.push('\n');
            }
            emit(&text, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
