//! Bottleneck and p-Wasserstein distances between persistence diagrams.
//!
//! Both distances use the ∞-norm ground metric on `(birth, death)` and allow
//! features to be matched to the diagonal at cost `(death - birth) / 2`.
//! Essential features are ignored; callers compare one homology dimension at
//! a time (see [`PersistenceDiagram::finite_part`]).

pub mod assignment;

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;
use crate::scalar::Scalar;

use assignment::{hungarian, perfect_matching_below};

/// An optimal augmented bijection. `None` stands for the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramMatching<T> {
    pub pairs: Vec<(Option<usize>, Option<usize>)>,
    pub cost: T,
}

/// Augmented square cost matrix of size `n1 + n2`: rows are the features of
/// the first diagram followed by `n2` diagonal slots, columns the features of
/// the second followed by `n1` diagonal slots.
struct Augmented<T> {
    cost: Vec<T>,
    n1: usize,
    n2: usize,
}

impl<T: Scalar> Augmented<T> {
    fn new(a: &[(T, T)], b: &[(T, T)]) -> Self {
        let (n1, n2) = (a.len(), b.len());
        let size = n1 + n2;
        let two = T::lit(2.0);
        let mut cost = vec![T::zero(); size * size];
        for r in 0..size {
            for c in 0..size {
                cost[r * size + c] = match (r < n1, c < n2) {
                    (true, true) => {
                        let (pa, pb) = (a[r], b[c]);
                        (pa.0 - pb.0).abs().max((pa.1 - pb.1).abs())
                    }
                    (true, false) => (a[r].1 - a[r].0) / two,
                    (false, true) => (b[c].1 - b[c].0) / two,
                    (false, false) => T::zero(),
                };
            }
        }
        Self { cost, n1, n2 }
    }

    fn size(&self) -> usize {
        self.n1 + self.n2
    }

    fn pairs(&self, col_of_row: &[usize]) -> Vec<(Option<usize>, Option<usize>)> {
        col_of_row
            .iter()
            .enumerate()
            .filter_map(|(r, &c)| {
                let left = (r < self.n1).then_some(r);
                let right = (c < self.n2).then_some(c);
                (left.is_some() || right.is_some()).then_some((left, right))
            })
            .collect()
    }
}

fn finite<T: Scalar>(d: &PersistenceDiagram<T>) -> Vec<(T, T)> {
    d.features
        .iter()
        .filter(|f| !f.is_essential())
        .map(|f| (f.birth, f.death))
        .collect()
}

/// Optimal bottleneck matching. The optimum is one of the augmented cost
/// entries, so a binary search over the sorted distinct entries with a
/// perfect-matching feasibility test finds it exactly.
pub fn bottleneck_matching<T: Scalar>(
    d1: &PersistenceDiagram<T>,
    d2: &PersistenceDiagram<T>,
) -> DiagramMatching<T> {
    let aug = Augmented::new(&finite(d1), &finite(d2));
    let n = aug.size();
    if n == 0 {
        return DiagramMatching {
            pairs: Vec::new(),
            cost: T::zero(),
        };
    }
    let mut candidates = aug.cost.clone();
    candidates.sort_by(T::cmp_finite);
    candidates.dedup();

    let (mut lo, mut hi) = (0, candidates.len() - 1);
    let mut best = perfect_matching_below(&aug.cost, n, candidates[hi])
        .expect("every entry admissible gives a perfect matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching_below(&aug.cost, n, candidates[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    DiagramMatching {
        pairs: aug.pairs(&best),
        cost: candidates[lo],
    }
}

pub fn bottleneck_distance<T: Scalar>(d1: &PersistenceDiagram<T>, d2: &PersistenceDiagram<T>) -> T {
    bottleneck_matching(d1, d2).cost
}

/// Optimal p-Wasserstein matching by exact assignment on the `p`-th powers of
/// the augmented costs. `cost` is the distance, i.e. already raised to `1/p`.
pub fn wasserstein_matching<T: Scalar>(
    d1: &PersistenceDiagram<T>,
    d2: &PersistenceDiagram<T>,
    p: T,
) -> Result<DiagramMatching<T>> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Wasserstein order must be a finite p >= 1, got {p}"
        )));
    }
    let aug = Augmented::new(&finite(d1), &finite(d2));
    let powered: Vec<T> = aug.cost.iter().map(|&c| c.powf(p)).collect();
    let (col_of_row, total) = hungarian(&powered, aug.size());
    Ok(DiagramMatching {
        pairs: aug.pairs(&col_of_row),
        cost: total.max(T::zero()).powf(p.recip()),
    })
}

pub fn wasserstein_distance<T: Scalar>(
    d1: &PersistenceDiagram<T>,
    d2: &PersistenceDiagram<T>,
    p: T,
) -> Result<T> {
    wasserstein_matching(d1, d2, p).map(|m| m.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::PersistenceFeature;
    use proptest::prelude::*;

    fn diag(points: &[(f64, f64)]) -> PersistenceDiagram<f64> {
        PersistenceDiagram::new(
            points
                .iter()
                .map(|&(b, d)| PersistenceFeature::finite(0, b, d))
                .collect(),
            0,
        )
    }

    /// Enumerates every partial injection from `a` into `b`; unmatched
    /// features on either side go to the diagonal. Returns
    /// `(bottleneck, sum of p-th powers)` minima.
    fn exhaustive(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> (f64, f64) {
        fn linf(x: (f64, f64), y: (f64, f64)) -> f64 {
            (x.0 - y.0).abs().max((x.1 - y.1).abs())
        }
        fn to_diag(x: (f64, f64)) -> f64 {
            (x.1 - x.0) / 2.0
        }
        fn rec(
            k: usize,
            a: &[(f64, f64)],
            b: &[(f64, f64)],
            used: &mut Vec<bool>,
            costs: &mut Vec<f64>,
            p: f64,
            best: &mut (f64, f64),
        ) {
            if k == a.len() {
                let mut all = costs.clone();
                for (j, &y) in b.iter().enumerate() {
                    if !used[j] {
                        all.push(to_diag(y));
                    }
                }
                let max = all.iter().cloned().fold(0.0, f64::max);
                let sum: f64 = all.iter().map(|c| c.powf(p)).sum();
                best.0 = best.0.min(max);
                best.1 = best.1.min(sum);
                return;
            }
            costs.push(to_diag(a[k]));
            rec(k + 1, a, b, used, costs, p, best);
            costs.pop();
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    costs.push(linf(a[k], b[j]));
                    rec(k + 1, a, b, used, costs, p, best);
                    costs.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (f64::INFINITY, f64::INFINITY);
        rec(0, a, b, &mut vec![false; b.len()], &mut Vec::new(), p, &mut best);
        best
    }

    #[test]
    fn identical_diagrams_are_at_zero() {
        let d = diag(&[(0.0, 2.0), (0.5, 1.0)]);
        assert_eq!(bottleneck_distance(&d, &d), 0.0);
        assert_eq!(wasserstein_distance(&d, &d, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_feature_against_empty() {
        let a = diag(&[(0.0, 2.0)]);
        let e = diag(&[]);
        assert_eq!(exhaustive(&[(0.0, 2.0)], &[], 1.0), (1.0, 1.0));
        assert_eq!(bottleneck_distance(&a, &e), 1.0);
        assert_eq!(wasserstein_distance(&a, &e, 1.0).unwrap(), 1.0);
        let m = bottleneck_matching(&a, &e);
        assert_eq!(m.pairs, vec![(Some(0), None)]);
    }

    #[test]
    fn two_single_features() {
        // Oracle: direct match costs max(0, 2) = 2; via the diagonal the
        // costs are 1 and 2, so bottleneck 2 either way and W1 = min(2, 3).
        let (bott, w1) = exhaustive(&[(0.0, 2.0)], &[(0.0, 4.0)], 1.0);
        assert_eq!((bott, w1), (2.0, 2.0));
        let a = diag(&[(0.0, 2.0)]);
        let b = diag(&[(0.0, 4.0)]);
        assert_eq!(bottleneck_distance(&a, &b), 2.0);
        assert_eq!(wasserstein_distance(&a, &b, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn essentials_are_ignored() {
        let mut a = diag(&[(0.0, 2.0)]);
        a.features.push(PersistenceFeature::essential(0, 0.0));
        let b = diag(&[(0.0, 2.0)]);
        assert_eq!(bottleneck_distance(&a, &b), 0.0);
    }

    #[test]
    fn rejects_bad_order() {
        let a = diag(&[(0.0, 2.0)]);
        assert!(wasserstein_distance(&a, &a, 0.5).is_err());
        assert!(wasserstein_distance(&a, &a, f64::NAN).is_err());
    }

    #[test]
    fn matching_covers_every_feature_once() {
        let a = diag(&[(0.0, 1.0), (0.2, 3.0), (1.0, 1.1)]);
        let b = diag(&[(0.1, 2.9), (0.0, 0.4)]);
        for m in [bottleneck_matching(&a, &b), wasserstein_matching(&a, &b, 2.0).unwrap()] {
            let mut left: Vec<_> = m.pairs.iter().filter_map(|p| p.0).collect();
            let mut right: Vec<_> = m.pairs.iter().filter_map(|p| p.1).collect();
            left.sort_unstable();
            right.sort_unstable();
            assert_eq!(left, vec![0, 1, 2]);
            assert_eq!(right, vec![0, 1]);
        }
    }

    fn arb_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..5.0, 0.0f64..3.0).prop_map(|(b, l)| (b, b + l)), 0..6)
    }

    proptest! {
        #[test]
        fn agrees_with_exhaustive_oracle(a in arb_points(), b in arb_points(), p in 1.0f64..3.0) {
            let (bott, sum) = exhaustive(&a, &b, p);
            let (da, db) = (diag(&a), diag(&b));
            prop_assert!((bottleneck_distance(&da, &db) - bott).abs() <= 1e-9);
            let w = wasserstein_distance(&da, &db, p).unwrap();
            prop_assert!((w - sum.powf(1.0 / p)).abs() <= 1e-9);
        }

        #[test]
        fn symmetric_and_ordered(a in arb_points(), b in arb_points()) {
            let (da, db) = (diag(&a), diag(&b));
            let bab = bottleneck_distance(&da, &db);
            prop_assert!((bab - bottleneck_distance(&db, &da)).abs() <= 1e-9);
            let w = wasserstein_distance(&da, &db, 1.0).unwrap();
            prop_assert!((w - wasserstein_distance(&db, &da, 1.0).unwrap()).abs() <= 1e-9);
            prop_assert!(bab <= w + 1e-9);
        }

        #[test]
        fn triangle_inequality(a in arb_points(), b in arb_points(), c in arb_points()) {
            let (da, db, dc) = (diag(&a), diag(&b), diag(&c));
            prop_assert!(
                bottleneck_distance(&da, &dc)
                    <= bottleneck_distance(&da, &db) + bottleneck_distance(&db, &dc) + 1e-9
            );
            for p in [1.0, 2.0] {
                let ac = wasserstein_distance(&da, &dc, p).unwrap();
                let ab = wasserstein_distance(&da, &db, p).unwrap();
                let bc = wasserstein_distance(&db, &dc, p).unwrap();
                prop_assert!(ac <= ab + bc + 1e-9);
            }
        }
    }
}
