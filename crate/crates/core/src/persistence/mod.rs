//! Vietoris-Rips persistent homology.
//!
//! [`h0_persistence`] is the fast path used by the alignment loss: a
//! Kruskal sweep over the sorted edge filtration with a union-find forest.
//! [`rips_persistence`] handles any dimension by reducing the full boundary
//! matrix over GF(2) and is only meant for small clouds.

mod h0;
mod rips;
mod union_find;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use h0::h0_persistence;
pub use rips::{rips_persistence, rips_persistence_with, RipsOptions, DEFAULT_SIMPLEX_BUDGET};
pub use union_find::UnionFind;

use crate::error::{Error, Result};
use crate::pointcloud::DistanceMatrix;
use crate::scalar::Scalar;

/// An edge of the Rips filtration. `rank` is its position in the global
/// sorted order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub length: T,
    pub rank: usize,
}

/// All `n(n-1)/2` edges sorted by `(length, i, j)`.
pub fn sorted_edge_filtration<T: Scalar>(m: &DistanceMatrix<T>) -> Vec<Edge<T>> {
    let n = m.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push(Edge {
                i,
                j,
                length: m.get(i, j),
                rank: 0,
            });
        }
    }
    edges.sort_by(|a, b| {
        a.length
            .cmp_finite(&b.length)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    for (rank, e) in edges.iter_mut().enumerate() {
        e.rank = rank;
    }
    edges
}

/// A `(birth, death)` point of homology dimension `dim`. Essential features
/// have an infinite death.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceFeature<T> {
    pub birth: T,
    pub death: T,
    pub dim: usize,
}

impl<T: Scalar> PersistenceFeature<T> {
    pub fn finite(dim: usize, birth: T, death: T) -> Self {
        Self { birth, death, dim }
    }

    pub fn essential(dim: usize, birth: T) -> Self {
        Self {
            birth,
            death: T::infinity(),
            dim,
        }
    }

    #[inline]
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    #[inline]
    pub fn persistence(&self) -> T {
        self.death - self.birth
    }

    /// Alive on the half-open interval `[birth, death)`.
    #[inline]
    pub fn alive_at(&self, scale: T) -> bool {
        self.birth <= scale && scale < self.death
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram<T> {
    pub features: Vec<PersistenceFeature<T>>,
    pub max_dim: usize,
}

impl<T: Scalar> PersistenceDiagram<T> {
    pub fn new(features: Vec<PersistenceFeature<T>>, max_dim: usize) -> Self {
        Self { features, max_dim }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistenceFeature<T>> {
        self.features.iter().filter(move |f| f.dim == dim)
    }

    /// Finite `(birth, death)` pairs of one dimension, in diagram order.
    pub fn finite_pairs(&self, dim: usize) -> Vec<(T, T)> {
        self.in_dim(dim)
            .filter(|f| !f.is_essential())
            .map(|f| (f.birth, f.death))
            .collect()
    }

    /// Restriction to one dimension with essential features removed.
    pub fn finite_part(&self, dim: usize) -> Self {
        Self {
            features: self
                .in_dim(dim)
                .filter(|f| !f.is_essential())
                .copied()
                .collect(),
            max_dim: self.max_dim,
        }
    }

    /// Features in canonical `(dim, birth, death)` order.
    pub fn sorted(&self) -> Self {
        let mut features = self.features.clone();
        features.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.cmp_finite(&b.birth))
                .then(a.death.cmp_finite(&b.death))
        });
        Self {
            features,
            max_dim: self.max_dim,
        }
    }
}

/// One H0 merge: the younger component's root vertex and the edge that
/// killed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PersistencePair {
    pub creator: usize,
    pub destroyer: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PersistencePairing {
    pub pairs: Vec<PersistencePair>,
}

impl PersistencePairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn destroyer_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|p| p.destroyer)
    }
}

/// Betti numbers at `scale`: features with `birth <= scale < death`, keyed by
/// dimension. Dimensions with no live feature are omitted.
pub fn betti_counts<T: Scalar>(d: &PersistenceDiagram<T>, scale: T) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for f in d.features.iter().filter(|f| f.alive_at(scale)) {
        *counts.entry(f.dim).or_insert(0) += 1;
    }
    counts
}

/// Serializes a diagram as `dim birth death` lines in canonical order, with
/// `inf` for essential deaths.
pub fn format_diagram<T: Scalar>(d: &PersistenceDiagram<T>) -> String {
    let mut out = String::new();
    for f in d.sorted().features {
        let death = if f.is_essential() {
            "inf".to_string()
        } else {
            f.death.to_string()
        };
        writeln!(out, "{} {} {}", f.dim, f.birth, death).expect("write to string");
    }
    out
}

pub fn parse_diagram<T: Scalar>(text: &str) -> Result<PersistenceDiagram<T>> {
    let mut features = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `dim birth death`, found {} fields", parts.len()),
            });
        }
        let parse_err = |what: &str, s: &str| Error::Parse {
            line: line_no,
            message: format!("invalid {what} {s:?}"),
        };
        let dim: usize = parts[0].parse().map_err(|_| parse_err("dimension", parts[0]))?;
        let birth: T = parts[1].parse().map_err(|_| parse_err("birth", parts[1]))?;
        let death: T = parts[2].parse().map_err(|_| parse_err("death", parts[2]))?;
        if !birth.is_finite() || birth < T::zero() {
            return Err(parse_err("birth", parts[1]));
        }
        if death.is_nan() || death < birth || death == T::neg_infinity() {
            return Err(parse_err("death", parts[2]));
        }
        features.push(PersistenceFeature { birth, death, dim });
    }
    let max_dim = features.iter().map(|f| f.dim).max().unwrap_or(0);
    Ok(PersistenceDiagram { features, max_dim })
}
