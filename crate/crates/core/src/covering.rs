//! Covering and packing numbers of finite subsets.
//!
//! `N_r(E)` is the least number of sets of diameter at most `r` needed to
//! cover `E`. Exact answers come from a branch-and-bound minimum clique
//! cover on the graph joining points at distance `≤ r + tol`; greedy answers
//! are upper bounds. Packings (separated families) give lower bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{PointCloud, Subset};

/// Default largest subset handed to the exact solvers.
pub const DEFAULT_EXACT_CUTOFF: usize = 20;

/// Hard ceiling on the exact solvers (bitmask width).
pub const MAX_EXACT_CUTOFF: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Greedy,
    /// Exact within the cutoff, greedy above it.
    Auto,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Greedy => "greedy",
            Mode::Auto => "auto",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "greedy" => Ok(Mode::Greedy),
            "auto" => Ok(Mode::Auto),
            other => Err(Error::param(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoverResult<'a> {
    pub count: usize,
    pub parts: Vec<Subset<'a>>,
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct PackResult<'a> {
    pub count: usize,
    pub witnesses: Subset<'a>,
    pub exact: bool,
}

/// Distance predicate that every pair inside one greedy group satisfies.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Within {
    AtMost(f64),
    Below(f64),
}

impl Within {
    #[inline]
    fn holds(self, d: f64) -> bool {
        match self {
            Within::AtMost(x) => d <= x,
            Within::Below(x) => d < x,
        }
    }
}

/// Greedy grouping: seed at the first ungrouped item, then scan the rest in
/// order and add every item whose distance to all members satisfies `within`.
pub(crate) fn greedy_groups(cloud: &PointCloud, items: &[usize], within: Within) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut pending: Vec<usize> = items.to_vec();
    let mut rest = Vec::with_capacity(pending.len());
    while let Some((&seed, tail)) = pending.split_first() {
        let mut members = vec![seed];
        match cloud.line_coord(seed) {
            Some(x) => {
                let (mut lo, mut hi) = (x, x);
                for &j in tail {
                    let y = cloud.line_coord(j).unwrap_or(f64::NAN);
                    let (nlo, nhi) = (lo.min(y), hi.max(y));
                    if within.holds(nhi - nlo) {
                        lo = nlo;
                        hi = nhi;
                        members.push(j);
                    } else {
                        rest.push(j);
                    }
                }
            }
            None => {
                for &j in tail {
                    if members.iter().all(|&m| within.holds(cloud.d(j, m))) {
                        members.push(j);
                    } else {
                        rest.push(j);
                    }
                }
            }
        }
        groups.push(members);
        std::mem::swap(&mut pending, &mut rest);
        rest.clear();
    }
    groups
}

/// Number of greedy groups only; same grouping as [`greedy_groups`].
pub(crate) fn greedy_group_count(cloud: &PointCloud, items: &[usize], within: Within) -> usize {
    greedy_groups(cloud, items, within).len()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive, got {v}")))
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if (1..=MAX_EXACT_CUTOFF).contains(&cutoff) {
        Ok(())
    } else {
        Err(Error::param(format!("exact cutoff must be between 1 and {MAX_EXACT_CUTOFF}, got {cutoff}")))
    }
}

fn use_exact(mode: Mode, len: usize, cutoff: usize) -> Result<bool> {
    check_cutoff(cutoff)?;
    match mode {
        Mode::Greedy => Ok(false),
        Mode::Auto => Ok(len <= cutoff),
        Mode::Exact if len <= cutoff => Ok(true),
        Mode::Exact => Err(Error::ExactCutoff { len, cutoff }),
    }
}

/// `N_r(subset)` with the default exact cutoff.
pub fn covering_number<'a>(subset: &Subset<'a>, r: f64, mode: Mode) -> Result<CoverResult<'a>> {
    covering_number_with(subset, r, mode, DEFAULT_EXACT_CUTOFF)
}

pub fn covering_number_with<'a>(subset: &Subset<'a>, r: f64, mode: Mode, cutoff: usize) -> Result<CoverResult<'a>> {
    check_positive("radius", r)?;
    let exact = use_exact(mode, subset.len(), cutoff)?;
    let cloud = subset.cloud();
    let within = Within::AtMost(r + cloud.tol());
    let greedy = greedy_groups(cloud, subset.indices(), within);
    let groups = if exact { ExactCover::new(cloud, subset.indices(), r).solve(greedy) } else { greedy };
    let parts = groups
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            Subset::from_sorted(cloud, g)
        })
        .collect::<Vec<_>>();
    Ok(CoverResult { count: parts.len(), parts, exact })
}

/// Minimum clique cover by branch and bound. Vertices are placed in index
/// order, each into an existing compatible part or a new one.
struct ExactCover<'c> {
    items: &'c [usize],
    compat: Vec<u128>,
    parts: Vec<u128>,
    best: Vec<u128>,
}

impl<'c> ExactCover<'c> {
    fn new(cloud: &PointCloud, items: &'c [usize], r: f64) -> Self {
        let limit = r + cloud.tol();
        let n = items.len();
        let mut compat = vec![0u128; n];
        for a in 0..n {
            for b in a + 1..n {
                if cloud.d(items[a], items[b]) <= limit {
                    compat[a] |= 1 << b;
                    compat[b] |= 1 << a;
                }
            }
        }
        ExactCover { items, compat, parts: Vec::new(), best: Vec::new() }
    }

    fn solve(mut self, greedy: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        let pos = |i: usize| self.items.binary_search(&i).expect("greedy part outside subset");
        let incumbent: Vec<u128> = greedy.iter().map(|g| g.iter().fold(0u128, |m, &i| m | 1 << pos(i))).collect();
        let upper = incumbent.len();
        self.best = incumbent;
        if self.items.len() > 1 && self.lower_bound(0) < upper {
            self.branch(0);
        }
        let items = self.items;
        self.best
            .iter()
            .map(|&mask| (0..items.len()).filter(|&b| mask >> b & 1 == 1).map(|b| items[b]).collect())
            .collect()
    }

    /// Parts in use plus a set of pairwise incompatible unplaced vertices
    /// that fit no current part; each of those needs its own new part.
    fn lower_bound(&self, next: usize) -> usize {
        let mut lonely: Vec<usize> = Vec::new();
        for v in next..self.items.len() {
            let fits = self.parts.iter().any(|&p| p & !self.compat[v] == 0);
            if !fits && lonely.iter().all(|&u| self.compat[u] >> v & 1 == 0) {
                lonely.push(v);
            }
        }
        self.parts.len() + lonely.len()
    }

    fn branch(&mut self, v: usize) {
        if v == self.items.len() {
            if self.parts.len() < self.best.len() {
                self.best = self.parts.clone();
            }
            return;
        }
        if self.lower_bound(v) >= self.best.len() {
            return;
        }
        for p in 0..self.parts.len() {
            if self.parts[p] & !self.compat[v] == 0 {
                self.parts[p] |= 1 << v;
                self.branch(v + 1);
                self.parts[p] &= !(1 << v);
            }
        }
        if self.parts.len() + 1 < self.best.len() {
            self.parts.push(1 << v);
            self.branch(v + 1);
            self.parts.pop();
        }
    }
}

/// Largest `sep`-separated subfamily (pairwise distances `≥ sep - tol`),
/// with the default exact cutoff.
pub fn packing_number<'a>(subset: &Subset<'a>, sep: f64, mode: Mode) -> Result<PackResult<'a>> {
    packing_number_with(subset, sep, mode, DEFAULT_EXACT_CUTOFF)
}

pub fn packing_number_with<'a>(subset: &Subset<'a>, sep: f64, mode: Mode, cutoff: usize) -> Result<PackResult<'a>> {
    check_positive("separation", sep)?;
    let exact = use_exact(mode, subset.len(), cutoff)?;
    let cloud = subset.cloud();
    let chosen = if exact {
        max_separated(cloud, subset.indices(), sep)
    } else {
        greedy_separated(cloud, subset.indices().iter().copied(), sep)
    };
    let mut chosen = chosen;
    chosen.sort_unstable();
    Ok(PackResult { count: chosen.len(), witnesses: Subset::from_sorted(cloud, chosen), exact })
}

pub(crate) fn separated(cloud: &PointCloud, a: usize, b: usize, sep: f64) -> bool {
    cloud.d(a, b) >= sep - cloud.tol()
}

fn greedy_separated(cloud: &PointCloud, order: impl IntoIterator<Item = usize>, sep: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for j in order {
        if chosen.iter().all(|&c| separated(cloud, j, c, sep)) {
            chosen.push(j);
        }
    }
    chosen
}

/// Maximum independent set of the conflict graph (`d < sep - tol`).
fn max_separated(cloud: &PointCloud, items: &[usize], sep: f64) -> Vec<usize> {
    let n = items.len();
    let mut conflict = vec![0u128; n];
    for a in 0..n {
        for b in a + 1..n {
            if !separated(cloud, items[a], items[b], sep) {
                conflict[a] |= 1 << b;
                conflict[b] |= 1 << a;
            }
        }
    }
    fn go(conflict: &[u128], cand: u128, cur: u128, best: &mut u128) {
        if cand == 0 {
            if cur.count_ones() > best.count_ones() {
                *best = cur;
            }
            return;
        }
        if cur.count_ones() + cand.count_ones() <= best.count_ones() {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        let bit = 1u128 << v;
        go(conflict, cand & !bit & !conflict[v], cur | bit, best);
        go(conflict, cand & !bit, cur, best);
    }
    let all = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut best = 0u128;
    go(&conflict, all, 0, &mut best);
    (0..n).filter(|&b| best >> b & 1 == 1).map(|b| items[b]).collect()
}

/// Greedy maximal `sep`-separated family containing `seed`: the seed first,
/// then the remaining points scanned in index order.
pub fn maximal_separated_family<'a>(subset: &Subset<'a>, sep: f64, seed: usize) -> Result<Subset<'a>> {
    check_positive("separation", sep)?;
    if !subset.contains(seed) {
        return Err(Error::param(format!("seed {seed} is not in the subset")));
    }
    let order = std::iter::once(seed).chain(subset.indices().iter().copied().filter(|&i| i != seed));
    Subset::new(subset.cloud(), greedy_separated(subset.cloud(), order, sep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PointCloud {
        PointCloud::on_line(&(0..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn covering_examples() {
        let one = PointCloud::on_line(&[0.3]).unwrap();
        assert_eq!(covering_number(&one.all(), 0.01, Mode::Exact).unwrap().count, 1);
        let two = PointCloud::on_line(&[0.0, 1.0]).unwrap();
        assert_eq!(covering_number(&two.all(), 0.5, Mode::Exact).unwrap().count, 2);
        let g = grid();
        let res = covering_number(&g.all(), 0.35, Mode::Exact).unwrap();
        assert_eq!(res.count, 3);
        assert!(res.exact);
        for part in &res.parts {
            assert!(part.diameter() <= 0.35 + g.tol());
        }
    }

    #[test]
    fn covering_errors() {
        let g = grid();
        assert!(covering_number(&g.all(), 0.0, Mode::Greedy).is_err());
        assert!(covering_number(&g.all(), -1.0, Mode::Greedy).is_err());
        let big = PointCloud::on_line(&(0..30).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            covering_number(&big.all(), 1.0, Mode::Exact),
            Err(Error::ExactCutoff { len: 30, cutoff: 20 })
        ));
        let auto = covering_number(&big.all(), 1.0, Mode::Auto).unwrap();
        assert!(!auto.exact);
        assert_eq!(auto.count, 15);
    }

    #[test]
    fn exact_beats_greedy_on_adversarial_order() {
        // greedy pairs 0 with 1 and strands -1 and 2 in singleton parts
        let line = PointCloud::on_line(&[0.0, 1.0, -1.0, 2.0]).unwrap();
        let plane =
            PointCloud::euclidean(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        for c in [line, plane] {
            let greedy = covering_number(&c.all(), 1.0, Mode::Greedy).unwrap();
            let exact = covering_number(&c.all(), 1.0, Mode::Exact).unwrap();
            assert_eq!(greedy.count, 3);
            assert_eq!(exact.count, 2);
            let covered: usize = exact.parts.iter().map(Subset::len).sum();
            assert_eq!(covered, 4);
        }
    }

    #[test]
    fn packing_examples() {
        let one = PointCloud::on_line(&[0.0]).unwrap();
        assert_eq!(packing_number(&one.all(), 3.0, Mode::Exact).unwrap().count, 1);
        let g = grid();
        let exact = packing_number(&g.all(), 0.25, Mode::Exact).unwrap();
        assert_eq!(exact.count, 4);
        let greedy = packing_number(&g.all(), 0.25, Mode::Greedy).unwrap();
        assert_eq!(greedy.count, 4);
        let two = PointCloud::on_line(&[0.0, 1.0]).unwrap();
        assert_eq!(packing_number(&two.all(), 2.0, Mode::Exact).unwrap().count, 1);
        assert!(packing_number(&two.all(), 0.0, Mode::Exact).is_err());
    }

    #[test]
    fn maximal_family_examples() {
        let g = grid();
        let single = Subset::new(&g, vec![3]).unwrap();
        assert_eq!(maximal_separated_family(&single, 0.5, 3).unwrap().indices(), &[3]);
        let fam = maximal_separated_family(&g.all(), 0.25, 0).unwrap();
        assert_eq!(fam.indices(), &[0, 3, 6, 9]);
        let two = PointCloud::on_line(&[0.0, 1.0]).unwrap();
        assert_eq!(maximal_separated_family(&two.all(), 0.4, 0).unwrap().len(), 2);
        assert!(maximal_separated_family(&single, 0.5, 4).is_err());
    }

    #[test]
    fn seeded_family_differs_from_index_order() {
        let g = grid();
        let fam = maximal_separated_family(&g.all(), 0.25, 5).unwrap();
        assert_eq!(fam.indices(), &[0, 5, 8]);
    }

    #[test]
    fn mode_round_trips_through_strings() {
        for m in [Mode::Exact, Mode::Greedy, Mode::Auto] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }
}
