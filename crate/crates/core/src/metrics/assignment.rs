//! Exact assignment on small dense cost matrices.

use crate::scalar::Scalar;

/// Minimum-cost perfect assignment on an `n × n` row-major cost matrix
/// (Hungarian method with potentials, O(n³)). Returns `col_of_row` and the
/// total cost.
pub fn hungarian<T: Scalar>(cost: &[T], n: usize) -> (Vec<usize>, T) {
    assert_eq!(cost.len(), n * n, "cost matrix must be square");
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    let inf = T::infinity();
    // 1-based arrays; index 0 is the virtual column used to seed each row.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        row_of_col[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = row_of_col[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let reduced = cost[(r - 1) * n + (c - 1)] - u[r] - v[c];
                if reduced < minv[c] {
                    minv[c] = reduced;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[row_of_col[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of_col[col0] = row_of_col[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for c in 1..=n {
        col_of_row[row_of_col[c] - 1] = c - 1;
    }
    let total = col_of_row
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (r, &c)| acc + cost[r * n + c]);
    (col_of_row, total)
}

/// Perfect matching in the bipartite graph whose edges are the cost entries
/// `<= threshold`, by augmenting paths. Returns `col_of_row` if one exists.
pub fn perfect_matching_below<T: Scalar>(cost: &[T], n: usize, threshold: T) -> Option<Vec<usize>> {
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| (0..n).filter(|&c| cost[r * n + c] <= threshold).collect())
        .collect();
    let mut row_of_col: Vec<Option<usize>> = vec![None; n];

    fn augment(
        r: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        row_of_col: &mut [Option<usize>],
    ) -> bool {
        for &c in &adj[r] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if row_of_col[c].is_none_or(|other| augment(other, adj, seen, row_of_col)) {
                row_of_col[c] = Some(r);
                return true;
            }
        }
        false
    }

    let mut seen = vec![false; n];
    for r in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        if !augment(r, &adj, &mut seen, &mut row_of_col) {
            return None;
        }
    }
    let mut col_of_row = vec![0; n];
    for (c, r) in row_of_col.into_iter().enumerate() {
        col_of_row[r.expect("perfect matching covers every column")] = c;
    }
    Some(col_of_row)
}
