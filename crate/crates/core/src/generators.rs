//! Deterministic example spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Metric, PointCloud, SparseVec, Subset};
use crate::regular::{Label, RegularFamily};

fn check_range(name: &str, v: u32, lo: u32, hi: u32) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be in {lo}..={hi}, got {v}")))
    }
}

/// Left endpoints of the level-`level` intervals of the middle-thirds
/// construction: `m / 3^level` with every base-3 digit of `m` in `{0, 2}`.
pub fn cantor_cloud(level: u32) -> Result<PointCloud> {
    check_range("cantor level", level, 1, 14)?;
    let denom = 3f64.powi(level as i32);
    let values: Vec<f64> = (0u64..1 << level)
        .map(|bits| {
            let m = (0..level).fold(0u64, |acc, i| {
                let digit = (bits >> (level - 1 - i)) & 1;
                acc * 3 + 2 * digit
            });
            m as f64 / denom
        })
        .collect();
    PointCloud::on_line(&values)
}

/// `{i / 2^resolution : 0 ≤ i ≤ 2^resolution}`.
pub fn dyadic_interval_cloud(resolution: u32) -> Result<PointCloud> {
    check_range("resolution", resolution, 1, 16)?;
    PointCloud::on_line(&dyadic_values(resolution))
}

fn dyadic_values(resolution: u32) -> Vec<f64> {
    let n = 1u32 << resolution;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// The dyadic grid on `[0, 1]` followed by the isolated point `2`.
pub fn interval_plus_point_cloud(resolution: u32) -> Result<PointCloud> {
    check_range("resolution", resolution, 1, 16)?;
    let mut values = dyadic_values(resolution);
    values.push(2.0);
    PointCloud::on_line(&values)
}

/// The discrete space `{y_s : s ∈ 2^{≤depth}}` with
/// `y_s = Σ_{i<|s|} (2s(i) - 1)·2^{-2i-1}`, and the label of each point.
#[derive(Clone, Debug)]
pub struct PolarizedCloud {
    pub cloud: PointCloud,
    /// `labels[i]` is the sequence whose value is point `i`; points are in
    /// label storage order, so point 0 is `y_∅ = 0`.
    pub labels: Vec<Label>,
    pub depth: u32,
}

impl PolarizedCloud {
    /// The labeling `s ↦ y_s` as a (2,2) family of full depth.
    pub fn natural_family(&self) -> RegularFamily {
        let mut next = 0..self.labels.len();
        RegularFamily::from_fn(2, 2, self.depth, false, |_| next.next().unwrap())
            .expect("label count matches the family shape")
    }
}

pub fn polarized_example_cloud(depth: u32) -> Result<PolarizedCloud> {
    check_range("polarized depth", depth, 1, 12)?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for n in 0..=depth {
        for rank in 0u32..1 << n {
            let digits: Vec<u32> = (0..n).map(|i| (rank >> (n - 1 - i)) & 1).collect();
            let y = digits
                .iter()
                .enumerate()
                .map(|(i, &c)| (2.0 * c as f64 - 1.0) * 2f64.powi(-2 * i as i32 - 1))
                .sum::<f64>();
            values.push(y);
            labels.push(Label(digits));
        }
    }
    let cloud = PointCloud::on_line(&values)?;
    Ok(PolarizedCloud { cloud, labels, depth })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct UnionCloud {
    pub cloud: PointCloud,
    /// Which input each point came from. Points of `A` come first.
    pub origin: Vec<Origin>,
}

/// `A ∪ (B + offset·e₀)`. Both clouds must be coordinate clouds with the
/// same metric and dimension, and the union must have no repeated point.
pub fn union_cloud(a: &PointCloud, b: &PointCloud, offset: f64) -> Result<UnionCloud> {
    if !offset.is_finite() {
        return Err(Error::param("offset must be finite"));
    }
    if a.metric() != b.metric() {
        return Err(Error::IncompatibleMetric(format!("{} and {}", a.metric(), b.metric())));
    }
    if a.metric() == Metric::Matrix {
        return Err(Error::IncompatibleMetric("matrix clouds cannot be translated".into()));
    }
    let origin: Vec<Origin> =
        std::iter::repeat_n(Origin::A, a.len()).chain(std::iter::repeat_n(Origin::B, b.len())).collect();
    let cloud = if a.is_sparse() || b.is_sparse() {
        let dim = a.dim().unwrap_or(0).max(b.dim().unwrap_or(0));
        let points = sparse_or_dense(a, dim)?
            .into_iter()
            .chain(sparse_or_dense(b, dim)?.into_iter().map(|p| p.plus_unit(0, offset)))
            .collect();
        PointCloud::from_sparse(a.metric(), points)?
    } else {
        if a.dim() != b.dim() && !a.is_empty() && !b.is_empty() {
            return Err(Error::IncompatibleMetric(format!("dimensions {:?} and {:?} differ", a.dim(), b.dim())));
        }
        let mut points = a.dense_points().unwrap_or_default();
        points.extend(b.dense_points().unwrap_or_default().into_iter().map(|mut p| {
            p[0] += offset;
            p
        }));
        PointCloud::from_coords(a.metric(), points)?
    }
    .with_tol(a.tol().max(b.tol()))?;
    Ok(UnionCloud { cloud, origin })
}

fn sparse_or_dense(c: &PointCloud, dim: usize) -> Result<Vec<SparseVec>> {
    if let Some(points) = c.sparse_points() {
        return Ok(points.to_vec());
    }
    (0..c.len()).map(|i| Ok(SparseVec::from_entries(c.coordinates(i, dim)?.into_iter().enumerate()))).collect()
}

/// `V_1 = U(center, ε)` and `V_{n+1} = U(V_n, ε^{n+1})` inside the cloud,
/// with open balls; returns `V_depth`, which contains every earlier `V_n`.
pub fn neighborhood_cascade(cloud: &PointCloud, center: usize, epsilon: f64, depth: u32) -> Result<Subset<'_>> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::param(format!("epsilon must be in (0, 1/2), got {epsilon}")));
    }
    if depth < 1 {
        return Err(Error::param("cascade depth must be at least 1"));
    }
    let mut member = vec![false; cloud.len()];
    let mut v = cloud.open_ball(center, epsilon)?.into_indices();
    for &i in &v {
        member[i] = true;
    }
    let mut radius = epsilon;
    for _ in 1..depth {
        radius *= epsilon;
        let mut added = Vec::new();
        for &x in &v {
            for y in cloud.open_ball(x, radius)?.into_indices() {
                if !member[y] {
                    member[y] = true;
                    added.push(y);
                }
            }
        }
        v.extend(added);
    }
    Subset::new(cloud, v)
}

/// A serializable description of a generated cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Cantor { level: u32 },
    DyadicGrid { resolution: u32 },
    IntervalPlusPoint { resolution: u32 },
    Polarized { depth: u32 },
    Union { a: Box<GeneratorSpec>, b: Box<GeneratorSpec>, offset: f64 },
    Cascade { base: Box<GeneratorSpec>, center: usize, epsilon: f64, depth: u32 },
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<PointCloud> {
        match self {
            GeneratorSpec::Cantor { level } => cantor_cloud(*level),
            GeneratorSpec::DyadicGrid { resolution } => dyadic_interval_cloud(*resolution),
            GeneratorSpec::IntervalPlusPoint { resolution } => interval_plus_point_cloud(*resolution),
            GeneratorSpec::Polarized { depth } => Ok(polarized_example_cloud(*depth)?.cloud),
            GeneratorSpec::Union { a, b, offset } => Ok(union_cloud(&a.build()?, &b.build()?, *offset)?.cloud),
            GeneratorSpec::Cascade { base, center, epsilon, depth } => {
                let cloud = base.build()?;
                neighborhood_cascade(&cloud, *center, *epsilon, *depth)?.to_cloud()
            }
        }
    }
}
