//! Scale-window estimates of the lower dimension and certified lower bounds
//! for the modified lower dimension.
//!
//! For a finite cloud the true lower dimension is 0, so every estimate here
//! is relative to an explicit [`ScaleWindow`] and is reported with it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::covering::{covering_number_with, Mode, DEFAULT_EXACT_CUTOFF};
use crate::error::{Error, Result};
use crate::metric::PointCloud;
use crate::regular::{search_regular, RegularFamily, SearchOutcome, SearchStatus};

/// Label carried by every estimate report.
pub const ESTIMATE_QUANTITY: &str = "scale-window lower dimension";

/// Geometric grid of radii `r_min·ratio^i ≤ r_max`, restricted to pairs
/// `r < R` with `R/r ≥ min_gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub min_gap: f64,
}

impl Default for ScaleWindow {
    fn default() -> Self {
        ScaleWindow { r_min: 2f64.powi(-6), r_max: 0.5, ratio: 2.0, min_gap: 4.0 }
    }
}

const GRID_SLACK: f64 = 1e-9;

impl ScaleWindow {
    pub fn new(r_min: f64, r_max: f64, ratio: f64, min_gap: f64) -> Result<Self> {
        let w = ScaleWindow { r_min, r_max, ratio, min_gap };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_min, self.r_max, self.ratio, self.min_gap].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidWindow("all fields must be finite".into()));
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return Err(Error::InvalidWindow(format!(
                "need 0 < r_min < r_max, got r_min={}, r_max={}",
                self.r_min, self.r_max
            )));
        }
        if self.ratio <= 1.0 {
            return Err(Error::InvalidWindow(format!("ratio must exceed 1, got {}", self.ratio)));
        }
        if self.min_gap < self.ratio {
            return Err(Error::InvalidWindow(format!("min_gap {} is below ratio {}", self.min_gap, self.ratio)));
        }
        Ok(())
    }

    /// The radii of the grid, increasing.
    pub fn scales(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0;
        loop {
            let s = self.r_min * self.ratio.powi(i);
            if s > self.r_max * (1.0 + GRID_SLACK) {
                break;
            }
            out.push(s);
            i += 1;
        }
        out
    }

    /// Pairs `(R, r, ln(R/r))` with `R ≤ r_cap`, ordered by decreasing `R`
    /// and then increasing `r`.
    fn pairs(&self, r_cap: f64) -> Vec<(f64, f64, f64)> {
        let scales = self.scales();
        let step = self.ratio.ln();
        let mut out = Vec::new();
        for j in (0..scales.len()).rev() {
            if scales[j] > r_cap {
                continue;
            }
            for i in 0..j {
                let gap = (j - i) as i32;
                if self.ratio.powi(gap) >= self.min_gap * (1.0 - GRID_SLACK) {
                    out.push((scales[j], scales[i], gap as f64 * step));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub center: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub count: usize,
    /// `ln count / ln(R/r)`.
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Argmin {
    pub center: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub quantity: &'static str,
    pub window: ScaleWindow,
    pub mode: Mode,
    /// True when every count in the table is exact.
    pub exact: bool,
    pub alpha_hat: f64,
    pub argmin: Option<Argmin>,
    pub table: Vec<TableRow>,
}

impl EstimateReport {
    /// Writes the table as CSV with header `center,R,r,count,exponent`.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["center", "R", "r", "count", "exponent"])?;
        for row in &self.table {
            w.write_record([
                row.center.to_string(),
                format!("{:.16e}", row.big_r),
                format!("{:.16e}", row.r),
                row.count.to_string(),
                format!("{:.16e}", row.exponent),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// [`lower_dim_estimate_with`] using the default exact cutoff.
pub fn lower_dim_estimate(cloud: &PointCloud, window: &ScaleWindow, mode: Mode) -> Result<EstimateReport> {
    lower_dim_estimate_with(cloud, window, mode, DEFAULT_EXACT_CUTOFF)
}

/// `α̂ = min ln N_r(B(x,R)) / ln(R/r)` over all centers and window pairs
/// with `R` at most the diameter; 0 when there is no such pair.
pub fn lower_dim_estimate_with(
    cloud: &PointCloud,
    window: &ScaleWindow,
    mode: Mode,
    cutoff: usize,
) -> Result<EstimateReport> {
    if cloud.is_empty() {
        return Err(Error::InvalidCloud("cannot estimate on an empty cloud".into()));
    }
    window.validate()?;
    let pairs = window.pairs(cloud.diameter() + cloud.tol());
    let mut table = Vec::with_capacity(pairs.len() * cloud.len());
    let mut exact = true;
    let mut best: Option<(f64, usize)> = None;
    for center in 0..cloud.len() {
        for &(big_r, r, log_ratio) in &pairs {
            let ball = cloud.closed_ball(center, big_r)?;
            let cover = covering_number_with(&ball, r, mode, cutoff)?;
            exact &= cover.exact;
            let exponent = (cover.count as f64).ln() / log_ratio;
            // strict comparison keeps the first row among ties
            if best.is_none_or(|(b, _)| exponent < b) {
                best = Some((exponent, table.len()));
            }
            table.push(TableRow { center, big_r, r, count: cover.count, exponent });
        }
    }
    let (alpha_hat, argmin) = match best {
        Some((a, row)) => (a, Some(Argmin { center: table[row].center, big_r: table[row].big_r, r: table[row].r })),
        None => (0.0, None),
    };
    Ok(EstimateReport { quantity: ESTIMATE_QUANTITY, window: *window, mode, exact, alpha_hat, argmin, table })
}

/// `log₂ l / k`, the bound certified by a (k,l)-regular family.
pub fn dimension_bound(k: u32, l: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::param("k must be at least 1"));
    }
    if l < 2 {
        return Err(Error::param(format!("l must be at least 2, got {l}")));
    }
    Ok((l as f64).log2() / k as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamAttempt {
    pub k: u32,
    pub l: u32,
    pub status: SearchStatus,
    pub expansions: u64,
}

#[derive(Clone, Debug)]
pub struct MldBound {
    /// Largest certified bound, 0 when nothing was found.
    pub bound: f64,
    pub family: Option<RegularFamily>,
    pub attempts: Vec<ParamAttempt>,
}

impl MldBound {
    /// True if some search ran out of budget, so a larger bound may exist.
    pub fn exhausted(&self) -> bool {
        self.attempts.iter().any(|a| a.status == SearchStatus::BudgetExhausted)
    }
}

/// Runs a strong certificate search of the given depth for each `(k, l)` and
/// keeps the family with the largest bound; the earliest parameter pair wins
/// ties. Each search gets its own `budget`.
pub fn mod_lower_dim_bound(cloud: &PointCloud, params: &[(u32, u32)], depth: u32, budget: u64) -> Result<MldBound> {
    if depth < 1 {
        return Err(Error::param("depth must be at least 1"));
    }
    let mut best = MldBound { bound: 0.0, family: None, attempts: Vec::with_capacity(params.len()) };
    for &(k, l) in params {
        let SearchOutcome { family, exhausted, expansions } = search_regular(cloud, k, l, depth, true, budget)?;
        let status = SearchOutcome { family: family.clone(), exhausted, expansions }.status();
        best.attempts.push(ParamAttempt { k, l, status, expansions });
        if let Some(f) = family {
            let b = f.bound();
            if b > best.bound {
                best.bound = b;
                best.family = Some(f);
            }
        }
    }
    Ok(best)
}
