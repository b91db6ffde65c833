//! Command-line front end.
//!
//! Commands that produce an artifact (cloud, report, certificate) write it to
//! `--output` when given and print a short JSON summary on stdout; without
//! `--output` the artifact itself goes to stdout and the summary to stderr.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 certificate not
//! found, 4 verification failed, 5 I/O error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fracdim::generators::GeneratorSpec;
use fracdim::io::{read_cloud, read_cloud_csv, read_json, to_json_string};
use fracdim::lowerdim::lower_dim_estimate_with;
use fracdim::regular::{scaling_checks, search_regular, verify_regular, RegularFamily, SearchStatus};
use fracdim::tree::{max_regular_depth, phi_bar, FiniteTree};
use fracdim::{Metric, Mode, PointCloud};

use config::{config_path, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "fracdim",
    version,
    about = "Lower-dimension estimates and regular-set certificates for finite metric spaces"
)]
struct Cli {
    /// JSON config file (default: $FRACDIM_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Distance tolerance applied to every loaded cloud
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Largest subset size handed to the exact covering solver
    #[arg(long, global = true)]
    exact_cutoff: Option<usize>,

    /// Node expansions allowed per certificate search
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Metric for clouds read from CSV files
    #[arg(long, global = true, default_value = "euclidean")]
    csv_metric: Metric,

    /// Where to write the command's artifact
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an example cloud
    Generate(GenerateArgs),
    /// Scale-window lower-dimension estimate
    Estimate(EstimateArgs),
    /// Search for a (k,l)-regular family and write it as a certificate
    Certify(CertifyArgs),
    /// Check a certificate against a cloud
    Verify(VerifyArgs),
    /// Embed a finite tree into l1
    Embed(EmbedArgs),
    /// Describe a cloud, or print the effective configuration
    Info(InfoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Cantor,
    DyadicGrid,
    IntervalPlusPoint,
    Polarized,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator kind; union and cascade need --spec
    kind: Option<Kind>,
    /// Cantor construction level
    #[arg(long)]
    level: Option<u32>,
    /// Grid step is 2^-resolution
    #[arg(long)]
    resolution: Option<u32>,
    /// Depth of the polarized example
    #[arg(long)]
    depth: Option<u32>,
    /// JSON generator spec file
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Cloud file: JSON, or CSV when the extension is .csv
    cloud: PathBuf,
    /// Smallest scale in the window
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest scale in the window
    #[arg(long)]
    r_max: Option<f64>,
    /// Ratio between consecutive scales
    #[arg(long)]
    ratio: Option<f64>,
    /// Smallest R/r considered
    #[arg(long)]
    min_gap: Option<f64>,
    /// Covering solver: exact, greedy or auto
    #[arg(long, default_value = "auto")]
    mode: Mode,
    /// Also write the table as CSV
    #[arg(long)]
    table_csv: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Cloud file: JSON, or CSV when the extension is .csv
    cloud: PathBuf,
    /// Scale exponent step k
    #[arg(short, long)]
    k: u32,
    /// Branching l
    #[arg(short, long)]
    l: u32,
    /// Family depth D
    #[arg(short = 'D', long)]
    depth: u32,
    /// Require y_{s0} = y_s
    #[arg(long)]
    strong: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Cloud file: JSON, or CSV when the extension is .csv
    cloud: PathBuf,
    /// Certificate written by certify
    certificate: PathBuf,
    /// Also check the covering-count inequality at every admissible scale pair
    #[arg(long)]
    scaling: bool,
}

#[derive(Args)]
struct EmbedArgs {
    /// JSON array of nodes, each given as its path of child indices from the root
    tree: PathBuf,
    /// Report the deepest (2,2) family found in the embedding
    #[arg(long)]
    depth_scan: bool,
    /// Largest depth tried by the scan (default: tree height + 2)
    #[arg(long)]
    cap: Option<u32>,
}

#[derive(Args)]
struct InfoArgs {
    /// Cloud file: JSON, or CSV when the extension is .csv
    cloud: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    NotFound(String),
    Verify,
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let io = e
            .chain()
            .any(|c| c.downcast_ref::<fracdim::Error>().is_some_and(fracdim::Error::is_io) || c.is::<std::io::Error>());
        if io {
            Failure::Io(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<fracdim::Error> for Failure {
    fn from(e: fracdim::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    csv_metric: Metric,
}

impl Ctx {
    fn load_cloud(&self, path: &Path) -> Result<PointCloud, Failure> {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let cloud = if is_csv { read_cloud_csv(path, self.csv_metric)? } else { read_cloud(path)? };
        Ok(match self.cfg.tol {
            Some(t) => cloud.with_tol(t)?,
            None => cloud,
        })
    }

    /// Sends the artifact and summary to their destinations.
    fn emit<A: Serialize + ?Sized, S: Serialize>(&self, artifact: &A, summary: &S) -> Outcome {
        let summary = to_json_string(summary)?;
        match &self.cfg.output {
            Some(path) => {
                fracdim::io::write_json(path, artifact)?;
                print!("{summary}");
            }
            None => {
                print!("{}", to_json_string(artifact)?);
                eprint!("{summary}");
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::NotFound(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
        Err(Failure::Verify) => ExitCode::from(4),
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(5)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut flags = Overrides {
        tol: cli.tol,
        exact_cutoff: cli.exact_cutoff,
        budget: cli.budget,
        output: cli.output.clone(),
        ..Overrides::default()
    };
    if let Command::Estimate(a) = &cli.command {
        flags.r_min = a.r_min;
        flags.r_max = a.r_max;
        flags.ratio = a.ratio;
        flags.min_gap = a.min_gap;
    }
    let text = match config_path(cli.config.as_deref()) {
        Some(path) => Some(
            std::fs::read_to_string(&path).map_err(|e| Failure::Io(fracdim::Error::Io { path, source: e }.into()))?,
        ),
        None => None,
    };
    let cfg = RunConfig::resolve(text.as_deref(), &flags)?;
    let ctx = Ctx { cfg, csv_metric: cli.csv_metric };
    match cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Estimate(a) => estimate(&ctx, a),
        Command::Certify(a) => certify(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Embed(a) => embed(&ctx, a),
        Command::Info(a) => info(&ctx, a),
    }
}

fn require(v: Option<u32>, flag: &str, kind: &str) -> Result<u32, Failure> {
    v.ok_or_else(|| Failure::Usage(anyhow::anyhow!("{kind} needs --{flag}")))
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Outcome {
    let spec = match (a.kind, &a.spec) {
        (_, Some(path)) => read_json::<GeneratorSpec>(path)?,
        (Some(Kind::Cantor), None) => GeneratorSpec::Cantor { level: require(a.level, "level", "cantor")? },
        (Some(Kind::DyadicGrid), None) => {
            GeneratorSpec::DyadicGrid { resolution: require(a.resolution, "resolution", "dyadic-grid")? }
        }
        (Some(Kind::IntervalPlusPoint), None) => {
            GeneratorSpec::IntervalPlusPoint { resolution: require(a.resolution, "resolution", "interval-plus-point")? }
        }
        (Some(Kind::Polarized), None) => GeneratorSpec::Polarized { depth: require(a.depth, "depth", "polarized")? },
        (None, None) => return Err(Failure::Usage(anyhow::anyhow!("give a generator kind or --spec"))),
    };
    let cloud = spec.build()?;
    let cloud = match ctx.cfg.tol {
        Some(t) => cloud.with_tol(t)?,
        None => cloud,
    };
    let summary = json!({
        "spec": spec,
        "points": cloud.len(),
        "diameter": cloud.diameter(),
    });
    ctx.emit(&fracdim::io::CloudFile::from_cloud(&cloud), &summary)
}

fn estimate(ctx: &Ctx, a: EstimateArgs) -> Outcome {
    let cloud = ctx.load_cloud(&a.cloud)?;
    let report = lower_dim_estimate_with(&cloud, &ctx.cfg.window, a.mode, ctx.cfg.exact_cutoff)?;
    if let Some(path) = &a.table_csv {
        let file = std::fs::File::create(path).map_err(|e| fracdim::Error::Io { path: path.clone(), source: e })?;
        report.write_table_csv(file)?;
    }
    let summary = json!({
        "quantity": report.quantity,
        "alpha_hat": report.alpha_hat,
        "argmin": report.argmin,
        "exact": report.exact,
    });
    ctx.emit(&report, &summary)
}

fn certify(ctx: &Ctx, a: CertifyArgs) -> Outcome {
    let cloud = ctx.load_cloud(&a.cloud)?;
    let out = search_regular(&cloud, a.k, a.l, a.depth, a.strong, ctx.cfg.budget)?;
    let status = out.status();
    let summary = json!({
        "status": status,
        "k": a.k,
        "l": a.l,
        "depth": a.depth,
        "strong": a.strong,
        "bound": out.family.as_ref().map(RegularFamily::bound),
        "expansions": out.expansions,
    });
    match (&out.family, status) {
        (Some(family), _) => ctx.emit(family, &summary),
        (None, SearchStatus::BudgetExhausted) => {
            print!("{}", to_json_string(&summary)?);
            Err(Failure::NotFound(format!(
                "budget exhausted after {} expansions; existence is undecided",
                out.expansions
            )))
        }
        (None, _) => {
            print!("{}", to_json_string(&summary)?);
            Err(Failure::NotFound(format!(
                "absent: no {}({},{}) family of depth {} exists in this cloud",
                if a.strong { "strongly " } else { "" },
                a.k,
                a.l,
                a.depth
            )))
        }
    }
}

fn verify(ctx: &Ctx, a: VerifyArgs) -> Outcome {
    let cloud = ctx.load_cloud(&a.cloud)?;
    let family: RegularFamily = read_json(&a.certificate)?;
    let report = verify_regular(&cloud, &family)?;
    let mut ok = report.ok;
    let mut out = json!({
        "ok": report.ok,
        "bound": family.bound(),
        "violations": report.violations,
    });
    if a.scaling && report.ok {
        let checks = scaling_checks(&cloud, &family, ctx.cfg.exact_cutoff)?;
        let holds = checks.iter().all(|c| c.holds());
        ok &= holds;
        out["ok"] = json!(ok);
        out["scaling"] = json!({ "ok": holds, "checks": checks });
    }
    print!("{}", to_json_string(&out)?);
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn embed(ctx: &Ctx, a: EmbedArgs) -> Outcome {
    let tree: FiniteTree = read_json(&a.tree)?;
    let emb = phi_bar(&tree)?;
    let mut summary = json!({
        "nodes": tree.len(),
        "height": tree.height(),
        "points": emb.cloud.len(),
    });
    if a.depth_scan {
        let cap = a.cap.unwrap_or(tree.height() as u32 + 2);
        let (depth, exhausted) = max_regular_depth(&emb.cloud, 2, 2, cap, ctx.cfg.budget)?;
        summary["max_regular_depth"] = json!(depth);
        summary["exhausted"] = json!(exhausted);
    }
    ctx.emit(&fracdim::io::CloudFile::from_cloud(&emb.cloud), &summary)
}

fn info(ctx: &Ctx, a: InfoArgs) -> Outcome {
    let out = match &a.cloud {
        Some(path) => {
            let cloud = ctx.load_cloud(path)?;
            json!({
                "points": cloud.len(),
                "metric": cloud.metric(),
                "dim": cloud.dim(),
                "diameter": cloud.diameter(),
                "min_gap": cloud.min_gap(),
                "tol": cloud.tol(),
            })
        }
        None => json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": ctx.cfg,
        }),
    };
    print!("{}", to_json_string(&out)?);
    Ok(())
}
