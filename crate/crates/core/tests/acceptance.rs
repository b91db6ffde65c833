//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each, and exits non-zero if any fails or overruns its time limit.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracdim::covering::{covering_number_with, packing_number_with, Mode, MAX_EXACT_CUTOFF};
use fracdim::generators::{
    cantor_cloud, dyadic_interval_cloud, interval_plus_point_cloud, polarized_example_cloud, union_cloud,
};
use fracdim::io::{cloud_to_json, to_json_string, write_cloud};
use fracdim::lowerdim::{dimension_bound, lower_dim_estimate_with, mod_lower_dim_bound};
use fracdim::metric::{hausdorff_distance, PointCloud, PointRef};
use fracdim::regular::{
    certificate_scaling_check, choose_parameters, verify_regular, Constraint, RegularFamily, DEFAULT_BUDGET,
};
use fracdim::tree::{branch_family, max_regular_depth, phi_bar, FiniteTree};
use fracdim::ScaleWindow;

const TOL: f64 = 1e-12;
const SEED: u64 = 0x5eed;

/// Criterion 1: how many clouds, and the largest size.
const ORACLE_CLOUDS: usize = 200;
const ORACLE_MAX_N: usize = 12;
/// Criterion 3: accepted range for the Cantor estimate.
const CANTOR_RANGE: (f64, f64) = (0.58, 0.64);
/// Criterion 4: largest accepted estimate on the interval plus a point.
const IPP_MAX_ALPHA: f64 = 0.05;
/// Criterion 5: search parameters shared by every cloud.
const STABILITY_PARAMS: [(u32, u32); 3] = [(6, 16), (4, 2), (2, 2)];
const STABILITY_DEPTH: u32 = 2;

type Check = Result<String, String>;
type Criterion = (u8, &'static str, u64, fn(&mut Shared) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Families produced along the way, reused by later criteria.
#[derive(Default)]
struct Shared {
    certified: Vec<(String, PointCloud, RegularFamily)>,
}

// ---- criterion 1 -------------------------------------------------------

/// A random metric: shortest paths over random edge weights in {1/8, …, 1}.
#[allow(clippy::needless_range_loop)]
fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.random_range(1..=8) as f64 / 8.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Minimum partition into parts of diameter ≤ r, by subset dynamic programming.
fn oracle_cover(d: &[Vec<f64>], r: f64) -> usize {
    let n = d.len();
    let full = (1usize << n) - 1;
    let mut clique = vec![true; 1 << n];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clique[mask] = clique[rest] && (0..n).all(|j| rest >> j & 1 == 0 || d[low][j] <= r + TOL);
    }
    let mut best = vec![usize::MAX; 1 << n];
    best[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let others = mask ^ low;
        let mut sub = others;
        loop {
            let part = sub | low;
            if clique[part] {
                best[mask] = best[mask].min(best[mask ^ part] + 1);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    best[full]
}

/// Largest subset with all pairwise distances ≥ sep.
fn oracle_pack(d: &[Vec<f64>], sep: f64) -> usize {
    let n = d.len();
    let mut indep = vec![true; 1 << n];
    let mut best = 0;
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        indep[mask] = indep[rest] && (0..n).all(|j| rest >> j & 1 == 0 || d[low][j] >= sep - TOL);
        if indep[mask] {
            best = best.max(mask.count_ones() as usize);
        }
    }
    best
}

fn criterion_1(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut instances = 0;
    let mut strict = 0;
    for cloud_no in 0..ORACLE_CLOUDS {
        let n = rng.random_range(1..=ORACLE_MAX_N);
        let d = random_metric(&mut rng, n);
        let cloud = PointCloud::from_matrix(d.clone()).map_err(e)?;
        let mut dists: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[i][j]).collect();
        dists.push(1.0);
        let radii = [
            dists[rng.random_range(0..dists.len())],
            dists[rng.random_range(0..dists.len())],
            rng.random_range(0.05..2.0),
        ];
        for r in radii {
            instances += 1;
            let all = cloud.all();
            let exact = covering_number_with(&all, r, Mode::Exact, ORACLE_MAX_N).map_err(e)?;
            let greedy = covering_number_with(&all, r, Mode::Greedy, ORACLE_MAX_N).map_err(e)?;
            let truth = oracle_cover(&d, r);
            ensure(exact.count == truth, || {
                format!("cloud {cloud_no}, r={r}: exact {} vs oracle {truth}", exact.count)
            })?;
            ensure(greedy.count >= exact.count, || format!("cloud {cloud_no}, r={r}: greedy below exact"))?;
            strict += usize::from(greedy.count > exact.count);
            let sep = r + 4.0 * TOL;
            let pack = packing_number_with(&all, sep, Mode::Exact, ORACLE_MAX_N).map_err(e)?;
            let pack_truth = oracle_pack(&d, sep);
            ensure(pack.count == pack_truth, || {
                format!("cloud {cloud_no}, sep={sep}: packing {} vs oracle {pack_truth}", pack.count)
            })?;
            ensure(pack.count <= exact.count, || format!("cloud {cloud_no}, r={r}: packing exceeds covering"))?;
        }
    }
    Ok(format!(
        "{instances} instances on {ORACLE_CLOUDS} clouds agree with the oracle; greedy strictly worse on {strict}"
    ))
}

// ---- criterion 2 -------------------------------------------------------

fn criterion_2(_: &mut Shared) -> Check {
    let mut gaps = Vec::new();
    for depth in 1..=6 {
        let p = polarized_example_cloud(depth).map_err(e)?;
        let f = p.natural_family();
        let plain = verify_regular(&p.cloud, &f).map_err(e)?;
        ensure(plain.ok, || format!("depth {depth}: natural family has {} violations", plain.violations.len()))?;
        let strong = verify_regular(&p.cloud, &f.with_strong(true)).map_err(e)?;
        ensure(!strong.ok, || format!("depth {depth}: strong check passed"))?;
        let first = &strong.violations[0];
        ensure(first.constraint == Constraint::Strong && first.s.is_empty(), || {
            format!("depth {depth}: first violation is {:?} at `{}`", first.constraint, first.s)
        })?;
        let gap = p.cloud.min_gap().unwrap();
        let floor = 2f64.powi(-2 * depth as i32 - 1);
        ensure(gap >= floor, || format!("depth {depth}: gap {gap} below {floor}"))?;
        gaps.push(format!("{gap:.3e}"));
    }
    Ok(format!("depths 1..6 verify, strong fails at the root; min gaps {}", gaps.join(" ")))
}

// ---- criterion 3 -------------------------------------------------------

fn cantor_window() -> ScaleWindow {
    ScaleWindow::new(3f64.powi(-5), 1.0 / 3.0, 3.0, 3.0).unwrap()
}

fn run_3() -> Result<(f64, String), String> {
    let c = cantor_cloud(7).map_err(e)?;
    let rep = lower_dim_estimate_with(&c, &cantor_window(), Mode::Exact, MAX_EXACT_CUTOFF).map_err(e)?;
    ensure(rep.exact, || "some count was not exact".into())?;
    Ok((rep.alpha_hat, to_json_string(&rep).map_err(e)?))
}

fn criterion_3(_: &mut Shared) -> Check {
    let (alpha, _) = run_3()?;
    let (lo, hi) = CANTOR_RANGE;
    ensure((lo..=hi).contains(&alpha), || format!("alpha_hat {alpha} outside [{lo}, {hi}]"))?;
    let target = 2f64.ln() / 3f64.ln();
    Ok(format!("alpha_hat = {alpha:.6} (log2/log3 = {target:.6})"))
}

// ---- criterion 4 -------------------------------------------------------

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracdim")).env_remove("FRACDIM_CONFIG").args(args).output().expect("run fracdim")
}

struct Run4 {
    alpha: f64,
    family: RegularFamily,
    cloud: PointCloud,
    json: Vec<String>,
}

fn run_4() -> Result<Run4, String> {
    let cloud = interval_plus_point_cloud(12).map_err(e)?;
    let rep = lower_dim_estimate_with(&cloud, &ScaleWindow::default(), Mode::Auto, 20).map_err(e)?;
    let dir = tempfile::tempdir().map_err(e)?;
    let cloud_path = dir.path().join("ipp.json");
    let cert_path = dir.path().join("cert.json");
    write_cloud(&cloud_path, &cloud).map_err(e)?;
    let out = cli(&[
        "certify",
        cloud_path.to_str().unwrap(),
        "-k",
        "6",
        "-l",
        "16",
        "-D",
        "2",
        "--strong",
        "-o",
        cert_path.to_str().unwrap(),
    ]);
    ensure(out.status.code() == Some(0), || {
        format!("certify exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(e)?;
    let bound = summary["bound"].as_f64().ok_or("no bound in certify output")?;
    let exact = dimension_bound(6, 16).map_err(e)?;
    ensure(bound.to_bits() == exact.to_bits() && exact == 2.0 / 3.0, || format!("bound {bound} is not 2/3"))?;
    let text = std::fs::read_to_string(&cert_path).map_err(e)?;
    let family = RegularFamily::from_json(&text).map_err(e)?;
    ensure(verify_regular(&cloud, &family).map_err(e)?.ok, || "certificate does not verify".into())?;
    let far = cloud.len() - 1;
    ensure(!family.assignments().contains(&far), || "certificate uses the isolated point".into())?;
    Ok(Run4 {
        alpha: rep.alpha_hat,
        family,
        cloud,
        json: vec![to_json_string(&rep).map_err(e)?, String::from_utf8_lossy(&out.stdout).into_owned(), text],
    })
}

fn criterion_4(shared: &mut Shared) -> Check {
    let r = run_4()?;
    ensure(r.alpha <= IPP_MAX_ALPHA, || format!("alpha_hat {} above {IPP_MAX_ALPHA}", r.alpha))?;
    shared.certified.push(("interval+point (6,16)".into(), r.cloud, r.family));
    Ok(format!("alpha_hat = {}; certify exit 0 with bound 2/3 exactly", r.alpha))
}

// ---- criterion 5 -------------------------------------------------------

struct Case {
    name: &'static str,
    clouds: [PointCloud; 3],
    expected: [f64; 3],
}

fn stability_cases() -> Result<Vec<Case>, String> {
    let grid = dyadic_interval_cloud(12).map_err(e)?;
    let point = PointCloud::on_line(&[0.0]).map_err(e)?;
    let grid_union = union_cloud(&grid, &point, 2.0).map_err(e)?.cloud;
    let cantor = cantor_cloud(8).map_err(e)?;
    let pair = PointCloud::on_line(&[0.0, 1.0]).map_err(e)?;
    let cantor_union = union_cloud(&cantor, &pair, 3.0).map_err(e)?.cloud;
    Ok(vec![
        Case { name: "grid + point", clouds: [grid, point, grid_union], expected: [2.0 / 3.0, 0.0, 2.0 / 3.0] },
        Case { name: "cantor8 + pair", clouds: [cantor, pair, cantor_union], expected: [0.25, 0.0, 0.25] },
    ])
}

type Run5 = (Vec<String>, Vec<(String, PointCloud, RegularFamily)>, Vec<[f64; 3]>);

fn run_5() -> Result<Run5, String> {
    let mut json = Vec::new();
    let mut families = Vec::new();
    let mut bounds = Vec::new();
    for case in stability_cases()? {
        let mut b = [0.0; 3];
        for (slot, cloud) in case.clouds.iter().enumerate() {
            let res = mod_lower_dim_bound(cloud, &STABILITY_PARAMS, STABILITY_DEPTH, DEFAULT_BUDGET).map_err(e)?;
            ensure(!res.exhausted(), || format!("{}: a search ran out of budget", case.name))?;
            b[slot] = res.bound;
            json.push(
                to_json_string(
                    &serde_json::json!({"bound": res.bound, "family": res.family, "attempts": res.attempts}),
                )
                .map_err(e)?,
            );
            if let Some(f) = res.family {
                families.push((format!("{} #{slot}", case.name), cloud.clone(), f));
            }
        }
        ensure(b == case.expected, || format!("{}: bounds {b:?}, expected {:?}", case.name, case.expected))?;
        bounds.push(b);
    }
    Ok((json, families, bounds))
}

fn criterion_5(shared: &mut Shared) -> Check {
    let (_, families, bounds) = run_5()?;
    for b in &bounds {
        ensure(b[2] == b[0].max(b[1]), || format!("union bound {} is not max({}, {})", b[2], b[0], b[1]))?;
    }
    shared.certified.extend(families);
    Ok(format!(
        "union = max on both pairs: grid {:.4}/{:.4}/{:.4}, cantor {:.4}/{:.4}/{:.4}",
        bounds[0][0], bounds[0][1], bounds[0][2], bounds[1][0], bounds[1][1], bounds[1][2]
    ))
}

// ---- criterion 6 -------------------------------------------------------

fn admissible(c: f64, beta: f64, alpha: f64, k: u32) -> Option<u64> {
    let l = (c * 2f64.powf((k - 4) as f64 * beta)).floor();
    (l >= 2.0 && l.log2() / k as f64 > alpha).then_some(l as u64)
}

fn criterion_6(_: &mut Shared) -> Check {
    let hand = [((1.0, 1.0, 1.0 / 3.0), (7, 8)), ((1.0, 0.9, 0.5), (10, 42)), ((16.0, 1.0, 0.5), (5, 32))];
    for ((c, b, a), want) in hand {
        let got = choose_parameters(c, b, a).map_err(e)?;
        ensure(got == want, || format!("({c}, {b}, {a}) gave {got:?}, expected {want:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut largest_k = 0;
    for _ in 0..50 {
        let c = rng.random_range(1.0..16.0);
        let alpha = rng.random_range(0.0..0.75);
        let beta = alpha + rng.random_range(0.25..1.0);
        let (k, l) = choose_parameters(c, beta, alpha).map_err(e)?;
        ensure(k >= 5, || format!("k = {k}"))?;
        ensure(admissible(c, beta, alpha, k) == Some(l), || {
            format!("({c}, {beta}, {alpha}) -> ({k}, {l}) inadmissible")
        })?;
        for smaller in 5..k {
            ensure(admissible(c, beta, alpha, smaller).is_none(), || {
                format!("({c}, {beta}, {alpha}): k = {smaller} already works")
            })?;
        }
        largest_k = largest_k.max(k);
    }
    Ok(format!("hand examples match; 50 random triples minimal and admissible (largest k = {largest_k})"))
}

// ---- criterion 7 -------------------------------------------------------

fn criterion_7(shared: &mut Shared) -> Check {
    ensure(!shared.certified.is_empty(), || "no families from criteria 4 and 5".into())?;
    for (name, cloud, family) in &shared.certified {
        ensure(certificate_scaling_check(cloud, family).map_err(e)?, || format!("{name}: counting inequality fails"))?;
    }
    Ok(format!("{} families pass", shared.certified.len()))
}

// ---- criterion 8 -------------------------------------------------------

fn tree_suite() -> Vec<(String, FiniteTree)> {
    let mut trees: Vec<(String, FiniteTree)> = (0..=4).map(|b| (format!("T_{b}"), FiniteTree::branch(b))).collect();
    trees.push(("bushy(2,3)".into(), FiniteTree::full(2, 3)));
    trees
}

/// Coordinate chosen at each level, read off by decreasing magnitude.
fn level_keys(cloud: &PointCloud, i: usize) -> Vec<usize> {
    let PointRef::Sparse(x) = cloud.point(i).unwrap() else { unreachable!() };
    let mut entries = x.entries().to_vec();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    entries.into_iter().map(|(key, _)| key).collect()
}

fn run_8() -> Result<(Vec<String>, Vec<String>), String> {
    let mut json = Vec::new();
    let mut notes = Vec::new();
    for (name, tree) in tree_suite() {
        let emb = phi_bar(&tree).map_err(e)?;
        let expected: usize = tree.nodes().iter().map(|u| 1usize << u.len()).sum();
        ensure(emb.cloud.len() == expected, || format!("{name}: {} points, expected {expected}", emb.cloud.len()))?;
        let nodes = tree.nodes();
        let mut pairs = 0;
        for i in 0..emb.cloud.len() {
            for j in i + 1..emb.cloud.len() {
                let (u, v) = (&nodes[emb.node_of[i]], &nodes[emb.node_of[j]]);
                if let Some(k) = (0..u.len().min(v.len())).find(|&k| u[k] != v[k]) {
                    pairs += 1;
                    let d = emb.cloud.distance(i, j).map_err(e)?;
                    let floor = 2f64.powi(-2 * k as i32);
                    ensure(d >= floor - TOL, || format!("{name}: points {i},{j} split at {k} are {d} apart"))?;
                }
            }
        }
        let levels: Vec<Vec<usize>> = (0..emb.cloud.len()).map(|i| level_keys(&emb.cloud, i)).collect();
        let mut index_pairs = 0;
        for i in 0..levels.len() {
            for j in i + 1..levels.len() {
                if let Some(k) = levels[i].iter().zip(&levels[j]).position(|(a, b)| a != b) {
                    index_pairs += 1;
                    let d = emb.cloud.distance(i, j).map_err(e)?;
                    ensure(d >= 2f64.powi(-2 * k as i32) - TOL, || {
                        format!("{name}: points {i},{j} differ at level {k}, {d} apart")
                    })?;
                }
            }
        }
        let h = tree.height() as u32;
        let fam = branch_family(&emb, tree.longest_node(), h).map_err(e)?;
        ensure(verify_regular(&emb.cloud, &fam).map_err(e)?.ok, || format!("{name}: branch family fails"))?;
        let depth = max_regular_depth(&emb.cloud, 2, 2, h + 2, DEFAULT_BUDGET).map_err(e)?;
        ensure(depth == (h, false), || format!("{name}: max depth {depth:?}, expected ({h}, false)"))?;
        notes.push(format!(
            "{name}: {} pts, {pairs} node-split and {index_pairs} index-split pairs, depth {h}",
            emb.cloud.len()
        ));
        json.push(cloud_to_json(&emb.cloud).map_err(e)?);
        json.push(to_json_string(&fam).map_err(e)?);
    }
    Ok((json, notes))
}

fn criterion_8(_: &mut Shared) -> Check {
    let (_, notes) = run_8()?;
    Ok(notes.join("; "))
}

// ---- criterion 9 -------------------------------------------------------

fn criterion_9(shared: &mut Shared) -> Check {
    let (_, base, family) = shared
        .certified
        .iter()
        .find(|(name, _, f)| name.starts_with("grid") && (f.k(), f.l(), f.depth()) == (6, 16, 2))
        .ok_or("no (6,16,2) grid family available")?
        .clone();
    let coords: Vec<f64> = base.dense_points().unwrap().into_iter().map(|p| p[0]).collect();

    let mut verified = 0;
    let mut last = f64::INFINITY;
    for i in 5..=20 {
        let delta = 2f64.powi(-i);
        let moved = PointCloud::on_line(&coords.iter().map(|x| x + delta).collect::<Vec<_>>()).map_err(e)?;
        let h = hausdorff_distance(&moved, &base).map_err(e)?;
        ensure(h <= delta + TOL && h <= last, || format!("i={i}: Hausdorff distance {h} does not shrink"))?;
        last = h;
        if verify_regular(&moved, &family).map_err(e)?.ok {
            verified += 1;
        }
    }
    ensure(verify_regular(&base, &family).map_err(e)?.ok || verified == 0, || "limit family fails".into())?;

    Ok(format!("{verified}/16 translated families verify; Hausdorff distance shrinks to {last:.1e}"))
}

// ---- criterion 10 ------------------------------------------------------

fn outputs() -> Result<Vec<String>, String> {
    let mut all = vec![run_3()?.1];
    all.extend(run_4()?.json);
    all.extend(run_5()?.0);
    all.extend(run_8()?.0);
    Ok(all)
}

fn criterion_10(_: &mut Shared) -> Check {
    let first = outputs()?;
    let second = outputs()?;
    ensure(first.len() == second.len(), || "different number of outputs".into())?;
    for (n, (a, b)) in first.iter().zip(&second).enumerate() {
        ensure(a == b, || format!("output {n} differs between runs"))?;
    }
    let bytes: usize = first.iter().map(String::len).sum();
    Ok(format!("{} JSON documents ({bytes} bytes) identical across two runs", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "covering/packing oracle", 60, criterion_1),
        (2, "verifier vs formula", 5, criterion_2),
        (3, "cantor window estimate", 120, criterion_3),
        (4, "dim_L vs MLdim gap", 120, criterion_4),
        (5, "union stability", 180, criterion_5),
        (6, "parameter law", 5, criterion_6),
        (7, "counting inequality", 60, criterion_7),
        (8, "tree embedding", 120, criterion_8),
        (9, "Hausdorff closedness", 30, criterion_9),
        (10, "determinism", 600, criterion_10),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let result = f(&mut shared);
        let took = start.elapsed();
        let verdict = match result {
            Ok(detail) if took <= Duration::from_secs(limit) => format!("PASS {detail}"),
            Ok(detail) => format!("FAIL over time limit: {detail}"),
            Err(why) => format!("FAIL {why}"),
        };
        if verdict.starts_with("FAIL") {
            failed += 1;
        }
        println!("criterion {id:>2} [{name}] {verdict} ({:.2}s of {limit}s)", took.as_secs_f64());
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
