//! Invariant structure alignment between an input cloud and its embedding.
//!
//! The loss compares the two distance matrices only on the entries selected
//! by the H0 persistence pairings (the MST edges) of each cloud:
//!
//! ```text
//! L = ½ Σ_{(i,j) ∈ γx} (Mx[i,j] − Mz[i,j])² + ½ Σ_{(i,j) ∈ γz} (Mz[i,j] − Mx[i,j])²
//! ```
//!
//! Pairings are piecewise constant in the coordinates, so the gradient treats
//! them as fixed and flows through the `Mz` entries only.

use crate::error::{Error, Result};
use crate::persistence::{h0_persistence, PersistencePairing};
use crate::pointcloud::{pairwise_distances, DistanceMatrix, PointCloud};
use crate::scalar::Scalar;

/// The four ingredients of the alignment loss.
#[derive(Debug, Clone, Copy)]
pub struct IsaContext<'a, T> {
    pub m_x: &'a DistanceMatrix<T>,
    pub m_z: &'a DistanceMatrix<T>,
    pub gamma_x: &'a PersistencePairing,
    pub gamma_z: &'a PersistencePairing,
}

impl<'a, T: Scalar> IsaContext<'a, T> {
    pub fn new(
        m_x: &'a DistanceMatrix<T>,
        m_z: &'a DistanceMatrix<T>,
        gamma_x: &'a PersistencePairing,
        gamma_z: &'a PersistencePairing,
    ) -> Result<Self> {
        let n = m_x.len();
        if m_z.len() != n {
            return Err(Error::SizeMismatch(format!(
                "input space has {n} points, latent space has {}",
                m_z.len()
            )));
        }
        for (i, j) in gamma_x.destroyer_edges().chain(gamma_z.destroyer_edges()) {
            if i >= j || j >= n {
                return Err(Error::IndexOutOfRange { i, j, n });
            }
        }
        Ok(Self {
            m_x,
            m_z,
            gamma_x,
            gamma_z,
        })
    }

    /// Context with the roles of the two spaces exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            m_x: self.m_z,
            m_z: self.m_x,
            gamma_x: self.gamma_z,
            gamma_z: self.gamma_x,
        }
    }

    fn selected(&self) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.gamma_x
            .destroyer_edges()
            .chain(self.gamma_z.destroyer_edges())
    }
}

pub fn isa_loss<T: Scalar>(ctx: &IsaContext<'_, T>) -> T {
    let half = T::lit(0.5);
    let term = |(i, j): (usize, usize)| {
        let diff = ctx.m_x.get(i, j) - ctx.m_z.get(i, j);
        diff * diff
    };
    let x_side = ctx.gamma_x.destroyer_edges().map(term).fold(T::zero(), |a, b| a + b);
    let z_side = ctx.gamma_z.destroyer_edges().map(term).fold(T::zero(), |a, b| a + b);
    half * (x_side + z_side)
}

/// Gradient of [`isa_loss`] with respect to the latent coordinates `z`,
/// row-major `n × l`. Selected edges whose latent endpoints coincide
/// contribute zero.
pub fn isa_loss_grad<T: Scalar>(ctx: &IsaContext<'_, T>, z: &PointCloud<T>) -> Result<Vec<T>> {
    let n = z.len();
    if n != ctx.m_z.len() {
        return Err(Error::SizeMismatch(format!(
            "latent cloud has {n} points, context has {}",
            ctx.m_z.len()
        )));
    }
    let l = z.dim();
    let mut grad = vec![T::zero(); n * l];
    for (i, j) in ctx.selected() {
        let dist = ctx.m_z.get(i, j);
        if dist == T::zero() {
            continue;
        }
        // d/dMz of ½(Mz − Mx)²
        let scale = (dist - ctx.m_x.get(i, j)) / dist;
        let (zi, zj) = (z.point(i), z.point(j));
        for k in 0..l {
            let g = scale * (zi[k] - zj[k]);
            grad[i * l + k] += g;
            grad[j * l + k] -= g;
        }
    }
    Ok(grad)
}

/// Alignment loss and latent gradient for a fixed input side. Recomputes the
/// latent distances and pairing from `z`.
pub fn isa_objective<T: Scalar>(
    m_x: &DistanceMatrix<T>,
    gamma_x: &PersistencePairing,
    z: &PointCloud<T>,
) -> Result<(T, Vec<T>)> {
    let m_z = pairwise_distances(z);
    let (_, gamma_z) = h0_persistence(&m_z);
    let ctx = IsaContext::new(m_x, &m_z, gamma_x, &gamma_z)?;
    Ok((isa_loss(&ctx), isa_loss_grad(&ctx, z)?))
}

/// Alignment loss between two clouds with freshly computed pairings.
pub fn structure_discrepancy<T: Scalar>(x: &PointCloud<T>, z: &PointCloud<T>) -> Result<T> {
    if x.len() != z.len() {
        return Err(Error::SizeMismatch(format!(
            "input cloud has {} points, latent cloud has {}",
            x.len(),
            z.len()
        )));
    }
    let m_x = pairwise_distances(x);
    let m_z = pairwise_distances(z);
    let (_, gamma_x) = h0_persistence(&m_x);
    let (_, gamma_z) = h0_persistence(&m_z);
    Ok(isa_loss(&IsaContext::new(&m_x, &m_z, &gamma_x, &gamma_z)?))
}
