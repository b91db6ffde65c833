//! (k,l)-regular families and their verification and search.
//!
//! A family assigns a point `y_s` to every label `s ∈ l^{≤D}` such that
//!
//! * (child) `ρ(y_s, y_t) ≤ 2^{-kn-1}` when `t` extends `s ∈ l^n` by one symbol,
//! * (sep) `ρ(y_s, y_t) ≥ 2^{-kn+2}` for distinct `s, t ∈ l^n`,
//! * (strong, optional) `y_{s⌢0} = y_s`.
//!
//! A verified family of depth `D` is a finite certificate for the lower
//! bound `log l / (k log 2)` on the modified lower dimension.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::covering::{self, greedy_group_count, separated, Mode, Within, DEFAULT_EXACT_CUTOFF};
use crate::error::{Error, Result};
use crate::metric::{PointCloud, Subset};

/// Default number of node expansions allowed to one search.
pub const DEFAULT_BUDGET: u64 = 100_000;

/// `2^{-kn-1}`: largest parent-to-child distance below level `n`.
pub fn child_radius(k: u32, n: u32) -> f64 {
    2f64.powi(-((k * n) as i32) - 1)
}

/// `2^{-kn+2}`: smallest distance between distinct level-`n` points.
pub fn level_separation(k: u32, n: u32) -> f64 {
    2f64.powi(-((k * n) as i32) + 2)
}

/// A finite sequence over `{0, …, l-1}`; `Display` joins symbols with dots
/// and the empty label prints as the empty string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub Vec<u32>);

impl Label {
    pub fn root() -> Self {
        Label(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, c: u32) -> Label {
        let mut v = self.0.clone();
        v.push(c);
        Label(v)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Ok(Label::root());
        }
        s.split('.')
            .map(|p| p.parse::<u32>().map_err(|_| Error::InvalidCertificate(format!("bad label `{s}`"))))
            .collect::<Result<Vec<_>>>()
            .map(Label)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Number of labels of length `n` or less.
fn node_count(l: u32, depth: u32) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for _ in 0..=depth {
        total = total.checked_add(level)?;
        level = level.checked_mul(l as usize)?;
    }
    Some(total)
}

/// A depth-`D` family `{y_s}`, stored level by level with labels in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularFamily {
    k: u32,
    l: u32,
    depth: u32,
    strong: bool,
    assign: Vec<usize>,
}

impl RegularFamily {
    /// `assign` lists point indices for all labels, shortest first and
    /// lexicographic within a length.
    pub fn new(k: u32, l: u32, depth: u32, strong: bool, assign: Vec<usize>) -> Result<Self> {
        if k < 2 || l < 2 {
            return Err(Error::param(format!("need k ≥ 2 and l ≥ 2, got k={k}, l={l}")));
        }
        let expected = node_count(l, depth).ok_or_else(|| Error::param("family too large"))?;
        if assign.len() != expected {
            return Err(Error::param(format!(
                "a ({k},{l}) family of depth {depth} has {expected} labels, got {}",
                assign.len()
            )));
        }
        Ok(RegularFamily { k, l, depth, strong, assign })
    }

    /// Builds a family by evaluating `f` on each label in storage order.
    pub fn from_fn(k: u32, l: u32, depth: u32, strong: bool, mut f: impl FnMut(&Label) -> usize) -> Result<Self> {
        let count = node_count(l, depth).ok_or_else(|| Error::param("family too large"))?;
        let mut assign = Vec::with_capacity(count);
        for n in 0..=depth {
            for s in labels_of_len(l, n) {
                assign.push(f(&s));
            }
        }
        RegularFamily::new(k, l, depth, strong, assign)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn strong(&self) -> bool {
        self.strong
    }

    /// The same assignment with a different strong flag.
    pub fn with_strong(&self, strong: bool) -> Self {
        RegularFamily { strong, ..self.clone() }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assign
    }

    pub fn assignments_mut(&mut self) -> &mut [usize] {
        &mut self.assign
    }

    /// The lower bound `log l / (k log 2)` this family certifies.
    pub fn bound(&self) -> f64 {
        (self.l as f64).log2() / self.k as f64
    }

    fn offset(&self, n: u32) -> usize {
        node_count(self.l, n).unwrap() - (self.l as usize).pow(n)
    }

    fn position(&self, s: &[u32]) -> Option<usize> {
        if s.len() > self.depth as usize || s.iter().any(|&c| c >= self.l) {
            return None;
        }
        let rank = s.iter().fold(0usize, |acc, &c| acc * self.l as usize + c as usize);
        Some(self.offset(s.len() as u32) + rank)
    }

    /// The point assigned to `s`, if `s` is a label of this family.
    pub fn get(&self, s: &[u32]) -> Option<usize> {
        self.position(s).map(|p| self.assign[p])
    }

    /// Points of level `n` in label order.
    pub fn level(&self, n: u32) -> &[usize] {
        assert!(n <= self.depth, "level {n} beyond depth {}", self.depth);
        let start = self.offset(n);
        &self.assign[start..start + (self.l as usize).pow(n)]
    }

    /// Labels of length `n` in storage order.
    pub fn labels(&self, n: u32) -> impl Iterator<Item = Label> {
        labels_of_len(self.l, n)
    }

    /// The restriction to labels of length at most `depth`.
    pub fn truncate(&self, depth: u32) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::param(format!("cannot extend depth {} to {depth}", self.depth)));
        }
        let keep = node_count(self.l, depth).unwrap();
        RegularFamily::new(self.k, self.l, depth, self.strong, self.assign[..keep].to_vec())
    }

    /// Parses the certificate JSON format.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn labels_of_len(l: u32, n: u32) -> impl Iterator<Item = Label> {
    let total = (l as usize).pow(n);
    (0..total).map(move |mut rank| {
        let mut digits = vec![0u32; n as usize];
        for d in digits.iter_mut().rev() {
            *d = (rank % l as usize) as u32;
            rank /= l as usize;
        }
        Label(digits)
    })
}

impl Serialize for RegularFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Assign<'a>(&'a RegularFamily);
        impl Serialize for Assign<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let f = self.0;
                let mut map = s.serialize_map(Some(f.assign.len()))?;
                let mut it = f.assign.iter();
                for n in 0..=f.depth {
                    for label in f.labels(n) {
                        map.serialize_entry(&label.to_string(), it.next().unwrap())?;
                    }
                }
                map.end()
            }
        }
        let mut st = s.serialize_struct("RegularFamily", 5)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("l", &self.l)?;
        st.serialize_field("depth", &self.depth)?;
        st.serialize_field("strong", &self.strong)?;
        st.serialize_field("assign", &Assign(self))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RegularFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            k: u32,
            l: u32,
            depth: u32,
            strong: bool,
            assign: HashMap<String, usize>,
        }
        let raw = Raw::deserialize(d)?;
        let total = node_count(raw.l, raw.depth).ok_or_else(|| de::Error::custom("family too large"))?;
        if raw.k < 2 || raw.l < 2 {
            return Err(de::Error::custom("need k ≥ 2 and l ≥ 2"));
        }
        let mut slots: Vec<Option<usize>> = vec![None; total];
        let shape = RegularFamily { k: raw.k, l: raw.l, depth: raw.depth, strong: raw.strong, assign: Vec::new() };
        for (key, idx) in raw.assign {
            let label: Label = key.parse().map_err(de::Error::custom)?;
            let pos =
                shape.position(&label.0).ok_or_else(|| de::Error::custom(format!("label `{key}` outside l^≤D")))?;
            slots[pos] = Some(idx);
        }
        let assign = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or(i))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| de::Error::custom("assignment is not total on l^≤D"))?;
        Ok(RegularFamily { assign, ..shape })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Child,
    Sep,
    Strong,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub s: Label,
    pub t: Label,
    pub measured: f64,
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Checks every constraint of the family against the cloud and reports all
/// violations. Inequalities are relaxed by the cloud tolerance.
pub fn verify_regular(cloud: &PointCloud, family: &RegularFamily) -> Result<RegularityReport> {
    for &i in &family.assign {
        cloud.check_index(i)?;
    }
    let tol = cloud.tol();
    let k = family.k;
    let mut violations = Vec::new();
    for n in 0..family.depth {
        let limit = child_radius(k, n);
        let parents = family.level(n);
        let children = family.level(n + 1);
        for (rank, (s, &ys)) in family.labels(n).zip(parents).enumerate() {
            for c in 0..family.l {
                let yt = children[rank * family.l as usize + c as usize];
                let d = cloud.d(ys, yt);
                if d > limit + tol {
                    violations.push(Violation {
                        constraint: Constraint::Child,
                        s: s.clone(),
                        t: s.child(c),
                        measured: d,
                        required: limit,
                    });
                }
            }
            if family.strong {
                let y0 = children[rank * family.l as usize];
                if y0 != ys {
                    violations.push(Violation {
                        constraint: Constraint::Strong,
                        s: s.clone(),
                        t: s.child(0),
                        measured: cloud.d(ys, y0),
                        required: 0.0,
                    });
                }
            }
        }
    }
    for n in 0..=family.depth {
        let required = level_separation(k, n);
        let points = family.level(n);
        let labels: Vec<Label> = family.labels(n).collect();
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                let d = cloud.d(points[a], points[b]);
                if d < required - tol {
                    violations.push(Violation {
                        constraint: Constraint::Sep,
                        s: labels[a].clone(),
                        t: labels[b].clone(),
                        measured: d,
                        required,
                    });
                }
            }
        }
    }
    Ok(RegularityReport { ok: violations.is_empty(), violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Found,
    /// Exhaustive search within budget: no such family exists.
    Absent,
    /// The budget ran out; nothing is known about existence.
    BudgetExhausted,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStatus::Found => "found",
            SearchStatus::Absent => "absent",
            SearchStatus::BudgetExhausted => "budget exhausted",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub family: Option<RegularFamily>,
    pub exhausted: bool,
    /// Node expansions spent.
    pub expansions: u64,
}

impl SearchOutcome {
    pub fn status(&self) -> SearchStatus {
        match (&self.family, self.exhausted) {
            (Some(_), _) => SearchStatus::Found,
            (None, true) => SearchStatus::BudgetExhausted,
            (None, false) => SearchStatus::Absent,
        }
    }
}

#[derive(Clone, Debug)]
enum NodeState {
    Unknown,
    Infeasible,
    Feasible(Vec<usize>),
}

struct Exhausted;

/// Depth-first search for a family. Whether a point can carry the subtree
/// below level `n` does not depend on its ancestors (cross-branch
/// separation follows from the child and parent constraints), so results
/// are memoized per `(point, level)`.
struct Search<'c> {
    cloud: &'c PointCloud,
    k: u32,
    l: usize,
    depth: u32,
    strong: bool,
    budget: u64,
    used: u64,
    states: Vec<Vec<NodeState>>,
}

impl<'c> Search<'c> {
    fn tick(&mut self) -> std::result::Result<(), Exhausted> {
        if self.used >= self.budget {
            return Err(Exhausted);
        }
        self.used += 1;
        Ok(())
    }

    fn feasible(&mut self, p: usize, n: u32) -> std::result::Result<bool, Exhausted> {
        if n == self.depth {
            return Ok(true);
        }
        match self.states[n as usize][p] {
            NodeState::Infeasible => return Ok(false),
            NodeState::Feasible(_) => return Ok(true),
            NodeState::Unknown => {}
        }
        self.tick()?;
        if self.strong && !self.feasible(p, n + 1)? {
            self.states[n as usize][p] = NodeState::Infeasible;
            return Ok(false);
        }
        let sep = level_separation(self.k, n + 1);
        let mut cands: Vec<usize> = std::iter::once(p)
            .chain(self.cloud.ball_indices(p, child_radius(self.k, n)).into_iter().filter(|&q| q != p))
            .collect();
        loop {
            let next = &self.states[n as usize + 1];
            cands.retain(|&q| !matches!(next[q], NodeState::Infeasible));
            let Some(chosen) = self.find_family(&cands, sep)? else {
                self.states[n as usize][p] = NodeState::Infeasible;
                return Ok(false);
            };
            let mut all_ok = true;
            for &q in &chosen {
                if !self.feasible(q, n + 1)? {
                    all_ok = false;
                    break;
                }
            }
            if all_ok {
                self.states[n as usize][p] = NodeState::Feasible(chosen);
                return Ok(true);
            }
        }
    }

    /// The lexicographically first `l`-element separated family of `cands`
    /// (in the given order); with `strong`, its first member is `cands[0]`.
    fn find_family(&mut self, cands: &[usize], sep: f64) -> std::result::Result<Option<Vec<usize>>, Exhausted> {
        self.tick()?;
        let mut greedy: Vec<usize> = Vec::with_capacity(self.l);
        for &q in cands {
            if greedy.len() == self.l {
                break;
            }
            if greedy.iter().all(|&c| separated(self.cloud, q, c, sep)) {
                greedy.push(q);
            }
        }
        if greedy.len() == self.l {
            return Ok(Some(greedy));
        }
        let mut chosen = Vec::with_capacity(self.l);
        if self.extend(&mut chosen, cands, sep, self.strong)? {
            Ok(Some(chosen))
        } else {
            Ok(None)
        }
    }

    fn extend(
        &mut self,
        chosen: &mut Vec<usize>,
        pool: &[usize],
        sep: f64,
        first_forced: bool,
    ) -> std::result::Result<bool, Exhausted> {
        let need = self.l - chosen.len();
        if need == 0 {
            return Ok(true);
        }
        if pool.len() < need {
            return Ok(false);
        }
        // at most one member of a separated family per mutually close group
        let groups = greedy_group_count(self.cloud, pool, Within::Below(sep - self.cloud.tol()));
        if groups < need {
            return Ok(false);
        }
        let branches = if first_forced { 1 } else { pool.len() };
        for i in 0..branches {
            if pool.len() - i < need {
                break;
            }
            self.tick()?;
            let q = pool[i];
            let rest: Vec<usize> =
                pool[i + 1..].iter().copied().filter(|&x| separated(self.cloud, q, x, sep)).collect();
            chosen.push(q);
            if self.extend(chosen, &rest, sep, false)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    fn assemble(&self, root: usize) -> Result<RegularFamily> {
        let mut assign = vec![root];
        let mut frontier = vec![root];
        for n in 0..self.depth {
            let mut next = Vec::with_capacity(frontier.len() * self.l);
            for &p in &frontier {
                match &self.states[n as usize][p] {
                    NodeState::Feasible(children) => next.extend_from_slice(children),
                    _ => unreachable!("assembling an unproved subtree"),
                }
            }
            assign.extend_from_slice(&next);
            frontier = next;
        }
        RegularFamily::new(self.k, self.l as u32, self.depth, self.strong, assign)
    }
}

/// Searches `cloud` for a (strongly, if `strong`) (k,l)-regular family of
/// depth `depth`, trying roots in index order and at most `budget` node
/// expansions. A family is returned only after [`verify_regular`] accepts it.
pub fn search_regular(
    cloud: &PointCloud,
    k: u32,
    l: u32,
    depth: u32,
    strong: bool,
    budget: u64,
) -> Result<SearchOutcome> {
    if k < 2 || l < 2 {
        return Err(Error::param(format!("need k ≥ 2 and l ≥ 2, got k={k}, l={l}")));
    }
    if budget == 0 {
        return Err(Error::param("budget must be at least 1"));
    }
    if (k as u64) * (depth as u64 + 1) > 1000 {
        return Err(Error::param("k·depth too large for floating-point radii"));
    }
    let absent = SearchOutcome { family: None, exhausted: false, expansions: 0 };
    // level-D points are pairwise separated, hence distinct
    match (l as usize).checked_pow(depth) {
        Some(need) if need <= cloud.len() => {}
        _ => return Ok(absent),
    }
    let mut search = Search {
        cloud,
        k,
        l: l as usize,
        depth,
        strong,
        budget,
        used: 0,
        states: vec![vec![NodeState::Unknown; cloud.len()]; depth as usize + 1],
    };
    for root in 0..cloud.len() {
        match search.feasible(root, 0) {
            Ok(true) => {
                let family = search.assemble(root)?;
                if verify_regular(cloud, &family)?.ok {
                    return Ok(SearchOutcome { family: Some(family), exhausted: false, expansions: search.used });
                }
            }
            Ok(false) => {}
            Err(Exhausted) => return Ok(SearchOutcome { family: None, exhausted: true, expansions: search.used }),
        }
    }
    Ok(SearchOutcome { expansions: search.used, ..absent })
}

/// The smallest `k ≥ 5` for which `l = ⌊C·2^{(k-4)β}⌋` satisfies `l ≥ 2` and
/// `log l / (k log 2) > α`, with that `l`.
pub fn choose_parameters(c: f64, beta: f64, alpha: f64) -> Result<(u32, u64)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("C must be positive, got {c}")));
    }
    if !(alpha >= 0.0 && beta > alpha && beta.is_finite()) {
        return Err(Error::param(format!("need β > α ≥ 0, got β={beta}, α={alpha}")));
    }
    // beyond 2^53 the floor is no longer an exact integer
    const MAX_L: f64 = 9_007_199_254_740_992.0;
    for k in 5u32.. {
        let l = (c * 2f64.powf((k - 4) as f64 * beta)).floor();
        if l > MAX_L {
            return Err(Error::param(format!("no admissible k before l exceeds 2^53 (C={c}, β={beta}, α={alpha})")));
        }
        if l >= 2.0 && l.log2() / k as f64 > alpha {
            return Ok((k, l as u64));
        }
    }
    unreachable!()
}

/// Distinct points assigned at level `n`.
pub fn level_points<'a>(cloud: &'a PointCloud, family: &RegularFamily, n: u32) -> Result<Subset<'a>> {
    if n > family.depth {
        return Err(Error::param(format!("level {n} beyond depth {}", family.depth)));
    }
    Subset::new(cloud, family.level(n).to_vec())
}

/// One instance of the counting inequality `N_r(B(x,R) ∩ K) ≥ l^m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub center: usize,
    pub n: u32,
    pub m: u32,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub required: u64,
    /// A proven lower bound on the covering number (exact when `exact`).
    pub lower_bound: usize,
    pub exact: bool,
}

impl ScalingCheck {
    pub fn holds(&self) -> bool {
        self.lower_bound as u64 >= self.required
    }
}

/// Evaluates the covering inequality behind the dimension bound on the
/// deepest level `K = {y_s : |s| = D}`: for every `x ∈ K` and every `n ≥ 1`,
/// `m ≥ 0` with `n + m + 1 ≤ D`, the ball `B(x, 2^{-kn+1}) ∩ K` needs at least
/// `l^m` sets of diameter `2^{-k(n+m)+1}` to cover. These radii are the
/// extreme ends of the brackets, so the inequality holds for every pair
/// `(R, r)` inside them. Counts come from the exact solver up to `cutoff`
/// points and from a separated family above it.
pub fn scaling_checks(cloud: &PointCloud, family: &RegularFamily, cutoff: usize) -> Result<Vec<ScalingCheck>> {
    let report = verify_regular(cloud, family)?;
    if !report.ok {
        return Err(Error::UnverifiedFamily(report.violations.len()));
    }
    let (k, d) = (family.k, family.depth);
    let top = level_points(cloud, family, d)?;
    let tol = cloud.tol();
    let mut checks = Vec::new();
    for n in 1..d {
        for m in 0..d - n {
            let big_r = 2f64.powi(-((k * n) as i32) + 1);
            let r = 2f64.powi(-((k * (n + m)) as i32) + 1);
            let required = (family.l as u64).pow(m);
            for &x in top.indices() {
                let ball = cloud.closed_ball(x, big_r)?.intersect(&top);
                let (lower_bound, exact) = if ball.len() <= cutoff {
                    (covering::covering_number_with(&ball, r, Mode::Exact, cutoff)?.count, true)
                } else {
                    // each part of diameter ≤ r + tol holds at most one of these
                    let sep = r + 3.0 * tol;
                    (covering::packing_number(&ball, sep, Mode::Greedy)?.count, false)
                };
                checks.push(ScalingCheck { center: x, n, m, big_r, r, required, lower_bound, exact });
            }
        }
    }
    Ok(checks)
}

/// True iff every [`scaling_checks`] instance holds. Fails on families that
/// do not verify.
pub fn certificate_scaling_check(cloud: &PointCloud, family: &RegularFamily) -> Result<bool> {
    Ok(scaling_checks(cloud, family, DEFAULT_EXACT_CUTOFF)?.iter().all(ScalingCheck::holds))
}
