use std::collections::HashMap;

use super::{PersistenceDiagram, PersistenceFeature};
use crate::error::{Error, Result};
use crate::pointcloud::DistanceMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_SIMPLEX_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone, Copy)]
pub struct RipsOptions {
    /// Largest number of simplices the filtration may contain.
    pub simplex_budget: usize,
}

impl Default for RipsOptions {
    fn default() -> Self {
        Self {
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

struct Simplex<T> {
    vertices: Vec<usize>,
    diameter: T,
}

/// Rips persistence in dimensions `0..=max_dim`, restricted to simplices of
/// diameter at most `max_scale`.
pub fn rips_persistence<T: Scalar>(
    m: &DistanceMatrix<T>,
    max_dim: usize,
    max_scale: T,
) -> Result<PersistenceDiagram<T>> {
    rips_persistence_with(m, max_dim, max_scale, RipsOptions::default())
}

pub fn rips_persistence_with<T: Scalar>(
    m: &DistanceMatrix<T>,
    max_dim: usize,
    max_scale: T,
    opts: RipsOptions,
) -> Result<PersistenceDiagram<T>> {
    if max_scale.is_nan() || max_scale < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "max_scale must be non-negative, got {max_scale}"
        )));
    }
    let top = max_dim + 1;
    let required = count_simplices(m, top, max_scale);
    if required > opts.simplex_budget {
        return Err(Error::BudgetExceeded {
            required,
            allowed: opts.simplex_budget,
        });
    }

    let mut simplices = Vec::with_capacity(required);
    let n = m.len();
    for v in 0..n {
        let candidates: Vec<usize> = ((v + 1)..n).filter(|&u| m.get(v, u) <= max_scale).collect();
        extend_cliques(m, &mut vec![v], T::zero(), &candidates, top, max_scale, &mut |s| {
            simplices.push(s)
        });
    }
    simplices.sort_by(|a, b| {
        a.diameter
            .cmp_finite(&b.diameter)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });

    let index: HashMap<&[usize], usize> = simplices
        .iter()
        .enumerate()
        .map(|(idx, s)| (s.vertices.as_slice(), idx))
        .collect();

    // Column reduction over GF(2); columns are sorted row indices and the
    // pivot is the last entry.
    let mut pivot_owner: HashMap<usize, usize> = HashMap::new();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(simplices.len());
    let mut paired = vec![false; simplices.len()];
    let mut features = Vec::new();

    for (col_idx, s) in simplices.iter().enumerate() {
        let mut col = boundary(&s.vertices, &index);
        while let Some(&low) = col.last() {
            match pivot_owner.get(&low) {
                Some(&other) => col = symmetric_difference(&col, &columns[other]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_owner.insert(low, col_idx);
            paired[low] = true;
            paired[col_idx] = true;
            let creator = &simplices[low];
            if creator.diameter < s.diameter {
                features.push(PersistenceFeature::finite(
                    creator.vertices.len() - 1,
                    creator.diameter,
                    s.diameter,
                ));
            }
        }
        columns.push(col);
    }

    for (idx, s) in simplices.iter().enumerate() {
        let dim = s.vertices.len() - 1;
        if !paired[idx] && dim <= max_dim {
            features.push(PersistenceFeature::essential(dim, s.diameter));
        }
    }

    Ok(PersistenceDiagram::new(features, max_dim).sorted())
}

fn count_simplices<T: Scalar>(m: &DistanceMatrix<T>, top: usize, max_scale: T) -> usize {
    let n = m.len();
    let mut count = 0usize;
    for v in 0..n {
        let candidates: Vec<usize> = ((v + 1)..n).filter(|&u| m.get(v, u) <= max_scale).collect();
        count += count_cliques(m, &candidates, top, max_scale);
    }
    count
}

/// Number of cliques rooted at a vertex whose common neighbours (with larger
/// index) are `candidates`, including the vertex itself.
fn count_cliques<T: Scalar>(
    m: &DistanceMatrix<T>,
    candidates: &[usize],
    remaining: usize,
    max_scale: T,
) -> usize {
    let mut count = 1;
    if remaining == 0 {
        return count;
    }
    for (k, &u) in candidates.iter().enumerate() {
        let next: Vec<usize> = candidates[k + 1..]
            .iter()
            .copied()
            .filter(|&w| m.get(u, w) <= max_scale)
            .collect();
        count = count.saturating_add(count_cliques(m, &next, remaining - 1, max_scale));
    }
    count
}

fn extend_cliques<T: Scalar>(
    m: &DistanceMatrix<T>,
    current: &mut Vec<usize>,
    diameter: T,
    candidates: &[usize],
    remaining: usize,
    max_scale: T,
    emit: &mut impl FnMut(Simplex<T>),
) {
    emit(Simplex {
        vertices: current.clone(),
        diameter,
    });
    if remaining == 0 {
        return;
    }
    for (k, &u) in candidates.iter().enumerate() {
        let grown = current
            .iter()
            .map(|&v| m.get(v, u))
            .fold(diameter, |acc, d| if d > acc { d } else { acc });
        let next: Vec<usize> = candidates[k + 1..]
            .iter()
            .copied()
            .filter(|&w| m.get(u, w) <= max_scale)
            .collect();
        current.push(u);
        extend_cliques(m, current, grown, &next, remaining - 1, max_scale, emit);
        current.pop();
    }
}

fn boundary(vertices: &[usize], index: &HashMap<&[usize], usize>) -> Vec<usize> {
    if vertices.len() < 2 {
        return Vec::new();
    }
    let mut face = Vec::with_capacity(vertices.len() - 1);
    let mut col: Vec<usize> = (0..vertices.len())
        .map(|skip| {
            face.clear();
            face.extend(
                vertices
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v),
            );
            index[face.as_slice()]
        })
        .collect();
    col.sort_unstable();
    col
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
