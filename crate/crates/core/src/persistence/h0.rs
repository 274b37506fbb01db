use super::{
    sorted_edge_filtration, PersistenceDiagram, PersistenceFeature, PersistencePair,
    PersistencePairing, UnionFind,
};
use crate::pointcloud::DistanceMatrix;
use crate::scalar::Scalar;

/// Zero-dimensional Rips persistence by a Kruskal sweep.
///
/// Every merging edge yields a finite feature `(0, length)` paired with that
/// edge and the younger root (the larger vertex index). The destroyer edges
/// are the minimum spanning tree under the `(length, i, j)` order. One
/// essential feature closes the diagram.
pub fn h0_persistence<T: Scalar>(
    m: &DistanceMatrix<T>,
) -> (PersistenceDiagram<T>, PersistencePairing) {
    let n = m.len();
    let mut uf = UnionFind::new(n);
    let mut features = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n.saturating_sub(1));
    if n > 1 {
        for edge in sorted_edge_filtration(m) {
            if let Some((_, younger)) = uf.union(edge.i, edge.j) {
                features.push(PersistenceFeature::finite(0, T::zero(), edge.length));
                pairs.push(PersistencePair {
                    creator: younger,
                    destroyer: (edge.i, edge.j),
                });
                if pairs.len() == n - 1 {
                    break;
                }
            }
        }
    }
    if n > 0 {
        features.push(PersistenceFeature::essential(0, T::zero()));
    }
    (
        PersistenceDiagram::new(features, 0),
        PersistencePairing { pairs },
    )
}
