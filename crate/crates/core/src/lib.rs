//! Topological structure alignment between point clouds and their learned
//! embeddings.
//!
//! The crate is organised bottom-up:
//!
//! * [`pointcloud`] holds point clouds and dense Euclidean distance matrices.
//! * [`persistence`] computes Vietoris-Rips persistent homology, both the
//!   union-find H0 sweep that drives the alignment loss and a general
//!   boundary-matrix reduction for small clouds.
//! * [`metrics`] compares persistence diagrams with the bottleneck and
//!   p-Wasserstein distances.
//! * [`alignment`] implements the invariant structure alignment loss over
//!   pairing-selected distance entries, with its exact latent gradient.
//! * [`sde`] scores hard samples: prediction entropy, a Gaussian-uniform
//!   mixture fitted by EM, and the structure damage score.
//! * [`trainer`] is a small training harness combining everything above.
//!
//! The numerical core is generic over [`Scalar`] (implemented for `f32` and
//! `f64`). The aliases below fix the scalar to `f64`, which is what the
//! trainer and the command-line tool use.

pub mod alignment;
pub mod error;
pub mod metrics;
pub mod persistence;
pub mod pointcloud;
pub mod scalar;
pub mod sde;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PointCloud = pointcloud::PointCloud<f64>;
pub type DistanceMatrix = pointcloud::DistanceMatrix<f64>;
pub type Edge = persistence::Edge<f64>;
pub type PersistenceFeature = persistence::PersistenceFeature<f64>;
pub type PersistenceDiagram = persistence::PersistenceDiagram<f64>;
pub type GumParams = sde::GumParams<f64>;
pub type SampleScore = sde::SampleScore<f64>;

pub type PointCloudF32 = pointcloud::PointCloud<f32>;
pub type DistanceMatrixF32 = pointcloud::DistanceMatrix<f32>;
pub type PersistenceDiagramF32 = persistence::PersistenceDiagram<f32>;
