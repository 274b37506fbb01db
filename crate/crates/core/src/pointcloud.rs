//! Point clouds, dense distance matrices and CSV ingestion.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An ordered set of `n` points in `d`-dimensional Euclidean space, stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    coords: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> PointCloud<T> {
    /// Builds a cloud from row-major coordinates. Fails if the shape is
    /// inconsistent, empty, or any coordinate is not finite.
    pub fn new(coords: Vec<T>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Empty);
        }
        if coords.len() != n * d {
            return Err(Error::SizeMismatch(format!(
                "{} coordinates cannot form {n} points of dimension {d}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                line: pos / d + 1,
                column: pos % d + 1,
            });
        }
        Ok(Self { coords, n, d })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty)?.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * first);
        for (idx, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != first {
                return Err(Error::RaggedRow {
                    line: idx + 1,
                    expected: first,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, rows.len(), first)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false for a constructed cloud; present for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.d)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    /// Returns a new cloud with the given points, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::new(coords, indices.len(), self.d)
    }

    /// Applies `f` to every coordinate.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.coords.iter().map(|&c| f(c)).collect(), self.n, self.d)
    }
}

/// Dense symmetric `n × n` matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    entries: Vec<T>,
    n: usize,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Wraps a row-major matrix after checking symmetry, zero diagonal,
    /// and finite non-negative entries.
    pub fn from_entries(entries: Vec<T>, n: usize) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::SizeMismatch(format!(
                "{} entries do not form a {n}x{n} matrix",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != T::zero() {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let a = entries[i * n + j];
                if !a.is_finite() || a < T::zero() || a != entries[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) is negative, non-finite or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { entries, n })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            entries: self.entries.iter().map(|&e| e * c).collect(),
            n: self.n,
        }
    }
}

/// Euclidean distance between two equal-length coordinate slices.
#[inline]
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
        .sqrt()
}

pub fn pairwise_distances<T: Scalar>(cloud: &PointCloud<T>) -> DistanceMatrix<T> {
    let n = cloud.len();
    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = euclidean(cloud.point(i), cloud.point(j));
            entries[i * n + j] = dist;
            entries[j * n + i] = dist;
        }
    }
    DistanceMatrix { entries, n }
}

/// Parses comma-separated rows of numbers. Lines starting with `#` and blank
/// lines are skipped; positions in errors refer to physical lines.
pub fn parse_point_cloud<T: Scalar>(text: &str) -> Result<PointCloud<T>> {
    let mut coords = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::RaggedRow {
                    line: line_no,
                    expected: w,
                    found: fields.len(),
                })
            }
            Some(_) => {}
        }
        for (col, field) in fields.iter().enumerate() {
            let field = field.trim();
            let value: T = field.parse().map_err(|_| Error::NonNumeric {
                line: line_no,
                column: col + 1,
                field: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    line: line_no,
                    column: col + 1,
                });
            }
            coords.push(value);
        }
        rows += 1;
    }
    let d = width.ok_or(Error::Empty)?;
    PointCloud::new(coords, rows, d)
}

pub fn load_point_cloud<T: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_point_cloud(&text)
}

/// Writes a cloud in the same CSV dialect accepted by [`parse_point_cloud`].
pub fn format_point_cloud<T: Scalar>(cloud: &PointCloud<T>) -> String {
    let mut out = String::new();
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A numeric record of arbitrary shape, stored row-major. A scalar has an
/// empty shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T> Record<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::SizeMismatch(format!(
                "shape {shape:?} holds {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }
}

/// Flattens equally shaped records into one point each.
pub fn flatten_inputs<T: Scalar>(records: &[Record<T>]) -> Result<PointCloud<T>> {
    let first = records.first().ok_or(Error::Empty)?;
    let mut coords = Vec::with_capacity(records.len() * first.data.len());
    for (index, rec) in records.iter().enumerate() {
        if rec.shape != first.shape {
            return Err(Error::ShapeMismatch {
                index,
                expected: first.shape.clone(),
                found: rec.shape.clone(),
            });
        }
        coords.extend_from_slice(&rec.data);
    }
    PointCloud::new(coords, records.len(), first.data.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(rows: &[&[f64]]) -> PointCloud<f64> {
        PointCloud::from_rows(rows).unwrap()
    }

    #[test]
    fn parses_rows_in_order() {
        let c: PointCloud<f64> = parse_point_cloud("0,0\n1,0\n0,1").unwrap();
        assert_eq!((c.len(), c.dim()), (3, 2));
        assert_eq!(c.point(2), &[0.0, 1.0]);
    }

    #[test]
    fn parses_single_value() {
        let c: PointCloud<f64> = parse_point_cloud("5.0").unwrap();
        assert_eq!((c.len(), c.dim()), (1, 1));
    }

    #[test]
    fn header_comment_is_skipped() {
        let c: PointCloud<f64> = parse_point_cloud("# x,y\n1,2\n3,4\n").unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn reports_ragged_row() {
        let err = parse_point_cloud::<f64>("1,2\n3").unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 2, expected: 2, found: 1 }));
    }

    #[test]
    fn reports_non_numeric_position() {
        let err = parse_point_cloud::<f64>("1,2\n3,x").unwrap_err();
        assert!(matches!(err, Error::NonNumeric { line: 2, column: 2, .. }));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(parse_point_cloud::<f64>(""), Err(Error::Empty)));
        assert!(matches!(parse_point_cloud::<f64>("# only\n"), Err(Error::Empty)));
        assert!(matches!(
            parse_point_cloud::<f64>("1,NaN"),
            Err(Error::NonFinite { line: 1, column: 2 })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_point_cloud::<f64>("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn three_four_five() {
        let m = pairwise_distances(&cloud(&[&[0.0, 0.0], &[3.0, 4.0]]));
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 0), 5.0);
    }

    #[test]
    fn single_point_is_zero_matrix() {
        let m = pairwise_distances(&cloud(&[&[7.0, -1.0]]));
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn line_cloud_distances() {
        let m = pairwise_distances(&cloud(&[&[0.0], &[1.0], &[3.0]]));
        assert_eq!((m.get(0, 1), m.get(1, 2), m.get(0, 2)), (1.0, 2.0, 3.0));
    }

    #[test]
    fn works_in_single_precision() {
        let c = PointCloud::<f32>::from_rows(&[[0.0f32, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(pairwise_distances(&c).get(0, 1), 5.0f32);
    }

    #[test]
    fn flatten_shapes() {
        let two = vec![
            Record::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Record::new(vec![2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap(),
        ];
        let c = flatten_inputs(&two).unwrap();
        assert_eq!((c.len(), c.dim()), (2, 4));
        assert_eq!(c.point(1), &[5.0, 6.0, 7.0, 8.0]);

        let c = flatten_inputs(&[Record::scalar(3.0f64)]).unwrap();
        assert_eq!((c.len(), c.dim()), (1, 1));

        let mixed = vec![
            Record::new(vec![2, 2], vec![0.0; 4]).unwrap(),
            Record::new(vec![2, 3], vec![0.0; 6]).unwrap(),
        ];
        assert!(matches!(
            flatten_inputs(&mixed),
            Err(Error::ShapeMismatch { index: 1, .. })
        ));
    }

    fn arb_cloud() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (1usize..8, 1usize..5).prop_flat_map(|(n, d)| {
            (Just(n), Just(d), prop::collection::vec(-10.0f64..10.0, n * d))
        })
    }

    /// Random orthogonal matrix from Gram-Schmidt on a generated basis.
    fn orthonormalize(d: usize, raw: &[f64]) -> Option<Vec<f64>> {
        let mut q: Vec<Vec<f64>> = Vec::new();
        for r in 0..d {
            let mut v = raw[r * d..(r + 1) * d].to_vec();
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
        Some(q.concat())
    }

    proptest! {
        #[test]
        fn distances_are_a_metric((n, d, coords) in arb_cloud()) {
            let c = PointCloud::new(coords, n, d).unwrap();
            let m = pairwise_distances(&c);
            for i in 0..n {
                prop_assert_eq!(m.get(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                    for k in 0..n {
                        prop_assert!(m.get(i, k) <= m.get(i, j) + m.get(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn distances_invariant_under_rigid_motion(
            (n, d, coords) in arb_cloud(),
            raw in prop::collection::vec(-1.0f64..1.0, 16),
            shift in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let Some(rot) = orthonormalize(d, &raw) else { return Ok(()); };
            let c = PointCloud::new(coords, n, d).unwrap();
            let mut moved = Vec::with_capacity(n * d);
            for p in c.points() {
                for r in 0..d {
                    let v: f64 = (0..d).map(|k| rot[r * d + k] * p[k]).sum();
                    moved.push(v + shift[r]);
                }
            }
            let a = pairwise_distances(&c);
            let b = pairwise_distances(&PointCloud::new(moved, n, d).unwrap());
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn distances_scale_linearly((n, d, coords) in arb_cloud(), c in 0.01f64..100.0) {
            let cloud = PointCloud::new(coords, n, d).unwrap();
            let a = pairwise_distances(&cloud);
            let b = pairwise_distances(&cloud.map(|x| x * c).unwrap());
            for i in 0..n {
                for j in 0..n {
                    let expect = a.get(i, j) * c;
                    let err = (b.get(i, j) - expect).abs();
                    prop_assert!(err <= 1e-12 * expect.max(f64::MIN_POSITIVE) + 1e-300);
                }
            }
        }
    }
}
