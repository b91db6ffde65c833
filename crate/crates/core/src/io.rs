//! File formats: point clouds, certificates and reports as JSON, point
//! clouds from CSV.
//!
//! All JSON is written pretty-printed with every float in scientific
//! notation with 17 significant digits, so equal values always produce
//! identical bytes and parse back bit-exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::metric::{Metric, PointCloud, DEFAULT_TOL};

/// Pretty formatter that prints floats as `{:.16e}`.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` in the canonical JSON style, with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// On-disk form of a point cloud. Sparse clouds are written densely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudFile {
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl CloudFile {
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        let tol = (cloud.tol() != DEFAULT_TOL).then_some(cloud.tol());
        match cloud.metric() {
            Metric::Matrix => CloudFile { metric: Metric::Matrix, points: None, matrix: cloud.matrix(), tol },
            metric => {
                let points = cloud.dense_points().unwrap_or_else(|| {
                    let dim = (0..cloud.len())
                        .filter_map(|i| match cloud.point(i) {
                            Ok(crate::metric::PointRef::Sparse(s)) => s.max_index().map(|m| m + 1),
                            _ => None,
                        })
                        .max()
                        .unwrap_or(1);
                    (0..cloud.len()).map(|i| cloud.coordinates(i, dim).unwrap()).collect()
                });
                CloudFile { metric, points: Some(points), matrix: None, tol }
            }
        }
    }

    pub fn into_cloud(self) -> Result<PointCloud> {
        let cloud = match (self.metric, self.points, self.matrix) {
            (Metric::Matrix, None, Some(m)) => PointCloud::from_matrix_with_tol(m, self.tol.unwrap_or(DEFAULT_TOL))?,
            (Metric::Matrix, _, _) => {
                return Err(Error::InvalidCloud("a matrix cloud needs `matrix` and no `points`".into()))
            }
            (metric, Some(points), None) => PointCloud::from_coords(metric, points)?,
            (metric, _, _) => {
                return Err(Error::InvalidCloud(format!("an {metric} cloud needs `points` and no `matrix`")))
            }
        };
        match self.tol {
            Some(t) if cloud.metric() != Metric::Matrix => cloud.with_tol(t),
            _ => Ok(cloud),
        }
    }
}

pub fn cloud_to_json(cloud: &PointCloud) -> Result<String> {
    to_json_string(&CloudFile::from_cloud(cloud))
}

pub fn cloud_from_json(text: &str) -> Result<PointCloud> {
    serde_json::from_str::<CloudFile>(text)?.into_cloud()
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    read_json::<CloudFile>(path)?.into_cloud()
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_json(path, &CloudFile::from_cloud(cloud))
}

/// Reads one point per row. A first row that does not parse as numbers is
/// taken as a header.
pub fn cloud_from_csv<R: io::Read>(input: R, metric: Metric) -> Result<PointCloud> {
    if metric == Metric::Matrix {
        return Err(Error::InvalidCloud("CSV import is for coordinate clouds".into()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) => points.push(p),
            Err(_) if row == 0 => {}
            Err(e) => return Err(Error::InvalidCloud(format!("row {}: {e}", row + 1))),
        }
    }
    PointCloud::from_coords(metric, points)
}

pub fn read_cloud_csv(path: &Path, metric: Metric) -> Result<PointCloud> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    cloud_from_csv(file, metric)
}
