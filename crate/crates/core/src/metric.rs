//! Finite metric spaces.
//!
//! A [`PointCloud`] is a finite set of points together with a metric: either
//! coordinates (dense or finitely supported) under the euclidean or ℓ¹ norm,
//! or an explicit distance matrix. Subsets of a cloud are [`Subset`]s, which
//! borrow the cloud and hold sorted point indices.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance applied on the permissive side of every comparison.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Explicit matrices up to this size get an exhaustive triangle check.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    L1,
    Matrix,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::L1 => "l1",
            Metric::Matrix => "matrix",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "l1" => Ok(Metric::L1),
            "matrix" => Ok(Metric::Matrix),
            other => Err(Error::param(format!("unknown metric `{other}`"))),
        }
    }
}

/// A finitely supported real sequence, stored as sorted `(index, value)`
/// pairs with no zero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn zero() -> Self {
        SparseVec::default()
    }

    /// `value · χ(index)`.
    pub fn unit(index: usize, value: f64) -> Self {
        SparseVec::from_entries([(index, value)])
    }

    /// Builds a vector from entries; later entries for the same index
    /// overwrite earlier ones and zero values are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (i, v) in entries {
            map.insert(i, v);
        }
        SparseVec { entries: map.into_iter().filter(|&(_, v)| v != 0.0).collect() }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// `self + value · χ(index)`.
    pub fn plus_unit(&self, index: usize, value: f64) -> SparseVec {
        let mut out = self.clone();
        match out.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => {
                out.entries[pos].1 += value;
                if out.entries[pos].1 == 0.0 {
                    out.entries.remove(pos);
                }
            }
            Err(pos) => {
                if value != 0.0 {
                    out.entries.insert(pos, (index, value));
                }
            }
        }
        out
    }

    pub fn norm_l1(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v.abs()).sum()
    }

    /// Sum of absolute differences over the union of supports.
    pub fn l1_distance(&self, other: &SparseVec) -> f64 {
        merge_fold(&self.entries, &other.entries, 0.0, |acc, d| acc + d.abs())
    }

    pub fn l2_distance(&self, other: &SparseVec) -> f64 {
        merge_fold(&self.entries, &other.entries, 0.0, |acc, d| acc + d * d).sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    fn from_dense(coords: &[f64]) -> Self {
        SparseVec { entries: coords.iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect() }
    }

    /// Bit-exact key, used for duplicate detection and lookups.
    pub(crate) fn key(&self) -> Vec<(usize, u64)> {
        self.entries.iter().map(|&(i, v)| (i, v.to_bits())).collect()
    }
}

fn merge_fold(a: &[(usize, f64)], b: &[(usize, f64)], init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, init);
    while i < a.len() || j < b.len() {
        let d = match (a.get(i), b.get(j)) {
            (Some(&(ia, va)), Some(&(ib, vb))) => match ia.cmp(&ib) {
                Ordering::Less => {
                    i += 1;
                    va
                }
                Ordering::Greater => {
                    j += 1;
                    -vb
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    va - vb
                }
            },
            (Some(&(_, va)), None) => {
                i += 1;
                va
            }
            (None, Some(&(_, vb))) => {
                j += 1;
                -vb
            }
            (None, None) => unreachable!(),
        };
        acc = f(acc, d);
    }
    acc
}

#[derive(Clone, Debug)]
enum Storage {
    Dense { dim: usize, coords: Vec<f64> },
    Sparse(Vec<SparseVec>),
    Matrix { n: usize, dist: Vec<f64> },
}

/// A borrowed view of one point's payload.
#[derive(Clone, Copy, Debug)]
pub enum PointRef<'a> {
    Dense(&'a [f64]),
    Sparse(&'a SparseVec),
    /// A point of an explicit-matrix cloud, known only by its index.
    Opaque(usize),
}

/// A finite metric space with distinct points.
#[derive(Clone, Debug)]
pub struct PointCloud {
    metric: Metric,
    storage: Storage,
    tol: f64,
}

impl PointCloud {
    /// Dense coordinate points under `metric` (euclidean or l1).
    pub fn from_coords(metric: Metric, points: Vec<Vec<f64>>) -> Result<Self> {
        if metric == Metric::Matrix {
            return Err(Error::InvalidCloud("coordinate points need the euclidean or l1 metric".into()));
        }
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidCloud("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCloud(format!("point {i} has {} coordinates, expected {dim}", p.len())));
            }
            if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidCloud(format!("point {i} has non-finite coordinate {bad}")));
            }
            // normalize -0.0 so equal points have equal bits
            coords.extend(p.iter().map(|&v| if v == 0.0 { 0.0 } else { v }));
        }
        let cloud = PointCloud { metric, storage: Storage::Dense { dim, coords }, tol: DEFAULT_TOL };
        cloud.reject_duplicates()?;
        Ok(cloud)
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        PointCloud::from_coords(Metric::Euclidean, points)
    }

    pub fn l1(points: Vec<Vec<f64>>) -> Result<Self> {
        PointCloud::from_coords(Metric::L1, points)
    }

    /// Points on the real line.
    pub fn on_line(values: &[f64]) -> Result<Self> {
        PointCloud::euclidean(values.iter().map(|&v| vec![v]).collect())
    }

    /// Finitely supported points under `metric` (euclidean or l1).
    pub fn from_sparse(metric: Metric, points: Vec<SparseVec>) -> Result<Self> {
        if metric == Metric::Matrix {
            return Err(Error::InvalidCloud("sparse points need the euclidean or l1 metric".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.entries.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(Error::InvalidCloud(format!("point {i} has a non-finite entry")));
            }
        }
        let cloud = PointCloud { metric, storage: Storage::Sparse(points), tol: DEFAULT_TOL };
        cloud.reject_duplicates()?;
        Ok(cloud)
    }

    /// An explicit distance matrix. The matrix must be square, finite,
    /// nonnegative, zero exactly on the diagonal, symmetric within the
    /// tolerance and satisfy the triangle inequality within the tolerance.
    /// The upper triangle is authoritative.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        PointCloud::from_matrix_with_tol(matrix, DEFAULT_TOL)
    }

    pub fn from_matrix_with_tol(matrix: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let n = matrix.len();
        let mut dist = vec![0.0; n * n];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidCloud(format!("matrix row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidCloud(format!("entry ({i},{j}) = {v} is not a distance")));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidCloud(format!("diagonal entry ({i},{i}) is nonzero")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (matrix[i][j], matrix[j][i]);
                if (a - b).abs() > tol {
                    return Err(Error::InvalidCloud(format!("matrix not symmetric at ({i},{j})")));
                }
                if a == 0.0 {
                    return Err(Error::DuplicatePoint(i, j));
                }
                dist[i * n + j] = a;
                dist[j * n + i] = a;
            }
        }
        let cloud = PointCloud { metric: Metric::Matrix, storage: Storage::Matrix { n, dist }, tol };
        cloud.check_triangle()?;
        Ok(cloud)
    }

    /// Replaces the comparison tolerance.
    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        self.tol = tol;
        Ok(self)
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Dense { dim, coords } => coords.len() / dim,
            Storage::Sparse(points) => points.len(),
            Storage::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of coordinates for dense clouds.
    pub fn dim(&self) -> Option<usize> {
        match &self.storage {
            Storage::Dense { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn point(&self, i: usize) -> Result<PointRef<'_>> {
        self.check_index(i)?;
        Ok(self.point_unchecked(i))
    }

    fn point_unchecked(&self, i: usize) -> PointRef<'_> {
        match &self.storage {
            Storage::Dense { dim, coords } => PointRef::Dense(&coords[i * dim..(i + 1) * dim]),
            Storage::Sparse(points) => PointRef::Sparse(&points[i]),
            Storage::Matrix { .. } => PointRef::Opaque(i),
        }
    }

    /// Coordinates of point `i` as a dense vector of length `dim`.
    pub fn coordinates(&self, i: usize, dim: usize) -> Result<Vec<f64>> {
        match self.point(i)? {
            PointRef::Dense(c) => {
                let mut v = c.to_vec();
                v.resize(dim.max(c.len()), 0.0);
                Ok(v)
            }
            PointRef::Sparse(s) => Ok(s.to_dense(dim.max(s.max_index().map_or(0, |m| m + 1)))),
            PointRef::Opaque(_) => Err(Error::IncompatibleMetric("explicit-matrix points have no coordinates".into())),
        }
    }

    /// The distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.d(i, j))
    }

    /// Unchecked distance; panics on out-of-range indices.
    #[inline]
    pub(crate) fn d(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense { dim: 1, coords } => (coords[i] - coords[j]).abs(),
            Storage::Dense { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                match self.metric {
                    Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
                    _ => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
                }
            }
            Storage::Sparse(points) => match self.metric {
                Metric::L1 => points[i].l1_distance(&points[j]),
                _ => points[i].l2_distance(&points[j]),
            },
            Storage::Matrix { n, dist } => dist[i * n + j],
        }
    }

    /// The coordinate of point `i` when the cloud lies on a line, where
    /// the diameter of any subset is `max - min`.
    #[inline]
    pub(crate) fn line_coord(&self, i: usize) -> Option<f64> {
        match &self.storage {
            Storage::Dense { dim: 1, coords } => Some(coords[i]),
            _ => None,
        }
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.len() })
        }
    }

    /// Closed ball `{j : d(center, j) ≤ radius + tol}`.
    pub fn closed_ball(&self, center: usize, radius: f64) -> Result<Subset<'_>> {
        self.check_index(center)?;
        check_radius(radius)?;
        Ok(Subset { cloud: self, indices: self.ball_indices(center, radius) })
    }

    pub(crate) fn ball_indices(&self, center: usize, radius: f64) -> Vec<usize> {
        let limit = radius + self.tol;
        (0..self.len()).filter(|&j| self.d(center, j) <= limit).collect()
    }

    /// Open ball `{j : d(center, j) < radius - tol}`. The center is always
    /// included.
    pub fn open_ball(&self, center: usize, radius: f64) -> Result<Subset<'_>> {
        self.check_index(center)?;
        check_radius(radius)?;
        let limit = radius - self.tol;
        Ok(Subset {
            cloud: self,
            indices: (0..self.len()).filter(|&j| j == center || self.d(center, j) < limit).collect(),
        })
    }

    pub fn all(&self) -> Subset<'_> {
        Subset { cloud: self, indices: (0..self.len()).collect() }
    }

    pub fn diameter(&self) -> f64 {
        self.all().diameter()
    }

    /// Smallest distance between two distinct points, or `None` for fewer
    /// than two points.
    pub fn min_gap(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        if self.line_coord(0).is_some() {
            let mut xs: Vec<f64> = (0..n).filter_map(|i| self.line_coord(i)).collect();
            xs.sort_by(f64::total_cmp);
            return xs.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(self.d(i, j));
            }
        }
        Some(best)
    }

    /// A new cloud made of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        for &i in indices {
            self.check_index(i)?;
        }
        let storage = match &self.storage {
            Storage::Dense { dim, coords } => Storage::Dense {
                dim: *dim,
                coords: indices.iter().flat_map(|&i| coords[i * dim..(i + 1) * dim].iter().copied()).collect(),
            },
            Storage::Sparse(points) => Storage::Sparse(indices.iter().map(|&i| points[i].clone()).collect()),
            Storage::Matrix { n, dist } => {
                let m = indices.len();
                let mut sub = vec![0.0; m * m];
                for (a, &i) in indices.iter().enumerate() {
                    for (b, &j) in indices.iter().enumerate() {
                        sub[a * m + b] = dist[i * n + j];
                    }
                }
                Storage::Matrix { n: m, dist: sub }
            }
        };
        let cloud = PointCloud { metric: self.metric, storage, tol: self.tol };
        cloud.reject_duplicates()?;
        Ok(cloud)
    }

    /// Dense coordinates of every point, padded to a common dimension;
    /// `None` for explicit-matrix clouds.
    pub fn dense_points(&self) -> Option<Vec<Vec<f64>>> {
        match &self.storage {
            Storage::Dense { dim, coords } => Some(coords.chunks(*dim).map(<[f64]>::to_vec).collect()),
            Storage::Sparse(points) => {
                let dim = points.iter().filter_map(SparseVec::max_index).max().map_or(1, |m| m + 1);
                Some(points.iter().map(|p| p.to_dense(dim)).collect())
            }
            Storage::Matrix { .. } => None,
        }
    }

    /// The full distance matrix for explicit-matrix clouds.
    pub fn matrix(&self) -> Option<Vec<Vec<f64>>> {
        match &self.storage {
            Storage::Matrix { n, dist } => Some(dist.chunks(*n.max(&1)).take(*n).map(<[f64]>::to_vec).collect()),
            _ => None,
        }
    }

    pub(crate) fn sparse_points(&self) -> Option<&[SparseVec]> {
        match &self.storage {
            Storage::Sparse(points) => Some(points),
            _ => None,
        }
    }

    fn reject_duplicates(&self) -> Result<()> {
        match &self.storage {
            Storage::Dense { dim, coords } => {
                let mut order: Vec<usize> = (0..self.len()).collect();
                let key = |i: usize| &coords[i * dim..(i + 1) * dim];
                order.sort_by(|&a, &b| {
                    key(a)
                        .iter()
                        .zip(key(b))
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(Ordering::Equal)
                        .then(a.cmp(&b))
                });
                for w in order.windows(2) {
                    if key(w[0]) == key(w[1]) {
                        return Err(Error::DuplicatePoint(w[0].min(w[1]), w[0].max(w[1])));
                    }
                }
            }
            Storage::Sparse(points) => {
                let mut seen = std::collections::HashMap::new();
                for (i, p) in points.iter().enumerate() {
                    if let Some(&j) = seen.get(&p.key()) {
                        return Err(Error::DuplicatePoint(j, i));
                    }
                    seen.insert(p.key(), i);
                }
            }
            Storage::Matrix { n, dist } => {
                for i in 0..*n {
                    for j in i + 1..*n {
                        if dist[i * n + j] == 0.0 {
                            return Err(Error::DuplicatePoint(i, j));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_triangle(&self) -> Result<()> {
        let n = self.len();
        let violated = |i: usize, j: usize, k: usize| self.d(i, k) > self.d(i, j) + self.d(j, k) + self.tol;
        let fail = |i, j, k| Err(Error::InvalidCloud(format!("triangle inequality fails for ({i},{j},{k})")));
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    for k in i + 1..n {
                        if violated(i, j, k) {
                            return fail(i, j, k);
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..10 * n {
                let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                if violated(i, j, k) {
                    return fail(i, j, k);
                }
            }
        }
        Ok(())
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("tolerance must be positive, got {tol}")))
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius >= 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("radius must be nonnegative, got {radius}")))
    }
}

fn cross_distance(metric: Metric, a: PointRef<'_>, b: PointRef<'_>) -> Result<f64> {
    let sparse = |p: PointRef<'_>| match p {
        PointRef::Dense(c) => Ok(SparseVec::from_dense(c)),
        PointRef::Sparse(s) => Ok(s.clone()),
        PointRef::Opaque(_) => {
            Err(Error::IncompatibleMetric("explicit-matrix clouds have no common ambient space".into()))
        }
    };
    match (a, b) {
        (PointRef::Dense(x), PointRef::Dense(y)) => Ok(match metric {
            Metric::L1 => x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum(),
            _ => x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt(),
        }),
        (a, b) => {
            let (x, y) = (sparse(a)?, sparse(b)?);
            Ok(match metric {
                Metric::L1 => x.l1_distance(&y),
                _ => x.l2_distance(&y),
            })
        }
    }
}

/// Hausdorff distance between two non-empty clouds in a common ambient
/// space: the larger of the two directed sup-inf distances.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("Hausdorff distance needs non-empty clouds"));
    }
    if a.metric != b.metric || a.metric == Metric::Matrix {
        return Err(Error::IncompatibleMetric(format!(
            "cannot compare a {} cloud with a {} cloud",
            a.metric, b.metric
        )));
    }
    if let (Some(da), Some(db)) = (a.dim(), b.dim()) {
        if da != db {
            return Err(Error::IncompatibleMetric(format!("dimension {da} does not match dimension {db}")));
        }
    }
    let directed = |from: &PointCloud, to: &PointCloud| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..from.len() {
            let mut nearest = f64::INFINITY;
            for j in 0..to.len() {
                nearest = nearest.min(cross_distance(a.metric, from.point_unchecked(i), to.point_unchecked(j))?);
            }
            worst = worst.max(nearest);
        }
        Ok(worst)
    };
    Ok(directed(a, b)?.max(directed(b, a)?))
}

/// A subset of a cloud: sorted, duplicate-free point indices.
#[derive(Clone, Debug)]
pub struct Subset<'a> {
    cloud: &'a PointCloud,
    indices: Vec<usize>,
}

impl<'a> Subset<'a> {
    /// Sorts and deduplicates `indices`; fails on out-of-range entries.
    pub fn new(cloud: &'a PointCloud, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            cloud.check_index(last)?;
        }
        Ok(Subset { cloud, indices })
    }

    pub(crate) fn from_sorted(cloud: &'a PointCloud, indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Subset { cloud, indices }
    }

    pub fn empty(cloud: &'a PointCloud) -> Self {
        Subset { cloud, indices: Vec::new() }
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset<'_>) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn intersect(&self, other: &Subset<'_>) -> Subset<'a> {
        Subset { cloud: self.cloud, indices: self.indices.iter().copied().filter(|&i| other.contains(i)).collect() }
    }

    /// Largest pairwise distance; zero for empty and singleton subsets.
    pub fn diameter(&self) -> f64 {
        let idx = &self.indices;
        if idx.len() < 2 {
            return 0.0;
        }
        if self.cloud.line_coord(idx[0]).is_some() {
            let (lo, hi) = idx
                .iter()
                .filter_map(|&i| self.cloud.line_coord(i))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            return hi - lo;
        }
        let mut best: f64 = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                best = best.max(self.cloud.d(i, j));
            }
        }
        best
    }

    /// The subset as a standalone cloud (points in index order).
    pub fn to_cloud(&self) -> Result<PointCloud> {
        self.cloud.select(&self.indices)
    }
}

/// Free-function form of [`PointCloud::distance`].
pub fn distance(cloud: &PointCloud, i: usize, j: usize) -> Result<f64> {
    cloud.distance(i, j)
}

/// Free-function form of [`Subset::diameter`].
pub fn diameter(subset: &Subset<'_>) -> f64 {
    subset.diameter()
}

/// Free-function form of [`PointCloud::closed_ball`].
pub fn closed_ball(cloud: &PointCloud, center: usize, radius: f64) -> Result<Subset<'_>> {
    cloud.closed_ball(center, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PointCloud {
        PointCloud::on_line(&(0..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn distance_basics() {
        let c = PointCloud::on_line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.distance(1, 1).unwrap(), 0.0);
        assert_eq!(c.distance(1, 2).unwrap(), 1.0);
        assert!(matches!(c.distance(0, 3), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn sparse_l1_distance_over_union_of_supports() {
        let x = SparseVec::unit(0, 0.5);
        let y = SparseVec::unit(3, 0.25);
        let c = PointCloud::from_sparse(Metric::L1, vec![x, y]).unwrap();
        assert_eq!(c.distance(0, 1).unwrap(), 0.75);
    }

    #[test]
    fn sparse_vec_arithmetic() {
        let v = SparseVec::zero().plus_unit(4, 0.5).plus_unit(1, 0.125);
        assert_eq!(v.entries(), &[(1, 0.125), (4, 0.5)]);
        assert_eq!(v.get(4), 0.5);
        assert_eq!(v.get(2), 0.0);
        assert_eq!(v.plus_unit(4, -0.5).support_len(), 1);
        assert_eq!(v.norm_l1(), 0.625);
        assert_eq!(v.to_dense(5), vec![0.0, 0.125, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn diameters() {
        let c = grid();
        assert_eq!(Subset::new(&c, vec![4]).unwrap().diameter(), 0.0);
        assert_eq!(Subset::empty(&c).diameter(), 0.0);
        assert_eq!(c.diameter(), 1.0);
        let both_ends =
            PointCloud::on_line(&[0.0, 1.0 / 9.0, 2.0 / 9.0, 1.0 / 3.0, 2.0 / 3.0, 7.0 / 9.0, 8.0 / 9.0, 1.0]).unwrap();
        assert_eq!(both_ends.diameter(), 1.0);
    }

    #[test]
    fn closed_ball_includes_boundary() {
        let c = grid();
        assert_eq!(c.closed_ball(5, 0.0).unwrap().indices(), &[5]);
        assert_eq!(c.closed_ball(5, 0.25).unwrap().indices(), &[3, 4, 5, 6, 7]);
        let mut pts: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
        pts.push(2.0);
        let e = PointCloud::on_line(&pts).unwrap();
        assert_eq!(e.closed_ball(257, 0.9).unwrap().indices(), &[257]);
        assert!(c.closed_ball(0, -1.0).is_err());
    }

    #[test]
    fn open_ball_excludes_boundary() {
        let c = grid();
        assert_eq!(c.open_ball(5, 0.2).unwrap().indices(), &[4, 5, 6]);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(PointCloud::on_line(&[0.0, 1.0, 0.0]), Err(Error::DuplicatePoint(0, 2))));
        assert!(matches!(PointCloud::on_line(&[0.0, -0.0]), Err(Error::DuplicatePoint(0, 1))));
        let s = vec![SparseVec::unit(1, 1.0), SparseVec::unit(1, 1.0)];
        assert!(PointCloud::from_sparse(Metric::L1, s).is_err());
        assert!(matches!(
            PointCloud::from_matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::DuplicatePoint(0, 1))
        ));
    }

    #[test]
    fn matrix_validation() {
        let ok = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
        let c = PointCloud::from_matrix(ok).unwrap();
        assert_eq!(c.distance(0, 2).unwrap(), 2.0);
        assert_eq!(c.metric(), Metric::Matrix);

        let triangle = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(PointCloud::from_matrix(triangle).is_err());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(PointCloud::from_matrix(asym).is_err());
        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(PointCloud::from_matrix(ragged).is_err());
        let negative = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert!(PointCloud::from_matrix(negative).is_err());
    }

    #[test]
    fn sampled_triangle_check_on_large_matrix() {
        // points on a line give a valid metric; the sampled path must accept it
        let n = EXHAUSTIVE_TRIANGLE_LIMIT + 5;
        let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
        assert_eq!(PointCloud::from_matrix(m).unwrap().len(), n);
    }

    #[test]
    fn hausdorff_examples() {
        let a = grid();
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let p = PointCloud::on_line(&[0.0]).unwrap();
        let q = PointCloud::on_line(&[0.0, 1.0]).unwrap();
        assert_eq!(hausdorff_distance(&p, &q).unwrap(), 1.0);
        let shifted = PointCloud::on_line(&(0..=10).map(|i| i as f64 / 10.0 + 0.03).collect::<Vec<_>>()).unwrap();
        // brute-force double loop
        let mut brute: f64 = 0.0;
        for i in 0..11 {
            let xi = i as f64 / 10.0;
            let to_b = (0..11).map(|j| (xi - (j as f64 / 10.0 + 0.03)).abs()).fold(f64::INFINITY, f64::min);
            let xj = i as f64 / 10.0 + 0.03;
            let to_a = (0..11).map(|j| (xj - j as f64 / 10.0).abs()).fold(f64::INFINITY, f64::min);
            brute = brute.max(to_b).max(to_a);
        }
        let h = hausdorff_distance(&a, &shifted).unwrap();
        assert_eq!(h, brute);
        assert!((h - 0.03).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_rejects_incompatible_clouds() {
        let a = grid();
        let b = PointCloud::l1(vec![vec![0.0]]).unwrap();
        assert!(matches!(hausdorff_distance(&a, &b), Err(Error::IncompatibleMetric(_))));
        let m = PointCloud::from_matrix(vec![vec![0.0]]).unwrap();
        assert!(hausdorff_distance(&m, &m).is_err());
        let empty = PointCloud::on_line(&[]).unwrap();
        assert!(hausdorff_distance(&a, &empty).is_err());
    }

    #[test]
    fn hausdorff_between_sparse_and_dense_l1() {
        let dense = PointCloud::l1(vec![vec![0.5, 0.0], vec![0.0, 0.25]]).unwrap();
        let sparse =
            PointCloud::from_sparse(Metric::L1, vec![SparseVec::unit(0, 0.5), SparseVec::unit(1, 0.25)]).unwrap();
        assert_eq!(hausdorff_distance(&dense, &sparse).unwrap(), 0.0);
    }

    #[test]
    fn select_and_min_gap() {
        let c = grid();
        let sub = c.select(&[2, 5, 9]).unwrap();
        assert_eq!(sub.len(), 3);
        assert!((sub.min_gap().unwrap() - 0.3).abs() < 1e-15);
        let m = PointCloud::from_matrix(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let ms = m.select(&[0, 2]).unwrap();
        assert_eq!(ms.distance(0, 1).unwrap(), 2.0);
        assert_eq!(ms.matrix().unwrap(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn subset_operations() {
        let c = grid();
        let s = Subset::new(&c, vec![5, 1, 5, 3]).unwrap();
        assert_eq!(s.indices(), &[1, 3, 5]);
        let t = Subset::new(&c, vec![3, 4, 5]).unwrap();
        assert_eq!(s.intersect(&t).indices(), &[3, 5]);
        assert!(Subset::new(&c, vec![11]).is_err());
    }
}
