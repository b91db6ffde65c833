use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use fracdim::covering::{DEFAULT_EXACT_CUTOFF, MAX_EXACT_CUTOFF};
use fracdim::regular::DEFAULT_BUDGET;
use fracdim::ScaleWindow;

pub const CONFIG_ENV: &str = "FRACDIM_CONFIG";

/// Settings shared by all commands. Command-line flags override the config
/// file, which overrides the defaults.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RunConfig {
    /// `None` keeps the tolerance stored in each cloud file.
    pub tol: Option<f64>,
    pub exact_cutoff: usize,
    pub budget: u64,
    pub window: ScaleWindow,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: None,
            exact_cutoff: DEFAULT_EXACT_CUTOFF,
            budget: DEFAULT_BUDGET,
            window: ScaleWindow::default(),
            output: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    tol: Option<f64>,
    exact_cutoff: Option<usize>,
    budget: Option<u64>,
    window: Option<WindowFile>,
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowFile {
    r_min: Option<f64>,
    r_max: Option<f64>,
    ratio: Option<f64>,
    min_gap: Option<f64>,
}

/// Flag values; unset flags are `None`.
#[derive(Debug, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub exact_cutoff: Option<usize>,
    pub budget: Option<u64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub ratio: Option<f64>,
    pub min_gap: Option<f64>,
    pub output: Option<PathBuf>,
}

/// `--config` wins over the environment variable.
pub fn config_path(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

impl RunConfig {
    pub fn resolve(file_text: Option<&str>, flags: &Overrides) -> anyhow::Result<Self> {
        let file: ConfigFile = match file_text {
            Some(text) => serde_json::from_str(text).context("invalid config file")?,
            None => ConfigFile::default(),
        };
        let window_file = file.window.unwrap_or_default();
        let d = RunConfig::default();
        let cfg = RunConfig {
            tol: flags.tol.or(file.tol),
            exact_cutoff: flags.exact_cutoff.or(file.exact_cutoff).unwrap_or(d.exact_cutoff),
            budget: flags.budget.or(file.budget).unwrap_or(d.budget),
            window: ScaleWindow {
                r_min: flags.r_min.or(window_file.r_min).unwrap_or(d.window.r_min),
                r_max: flags.r_max.or(window_file.r_max).unwrap_or(d.window.r_max),
                ratio: flags.ratio.or(window_file.ratio).unwrap_or(d.window.ratio),
                min_gap: flags.min_gap.or(window_file.min_gap).unwrap_or(d.window.min_gap),
            },
            output: flags.output.clone().or(file.output),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                bail!("tol must be positive, got {t}");
            }
        }
        if !(4..=MAX_EXACT_CUTOFF).contains(&self.exact_cutoff) {
            bail!("exact_cutoff must be in 4..={MAX_EXACT_CUTOFF}, got {}", self.exact_cutoff);
        }
        if self.budget < 1 {
            bail!("budget must be at least 1");
        }
        self.window.validate()?;
        Ok(())
    }
}
