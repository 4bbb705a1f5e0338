//! Run configuration: TOML file merged with command-line overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use matsl::direct::DirectOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_GRID_M: usize = 256;
pub const DEFAULT_N_BINS: usize = 64;

/// Keys accepted in the `[tolerances]` table.
pub const TOLERANCE_KEYS: &[&str] = &["rank_tol", "refine_tol", "merge_tol"];

/// Contents of a `--config` file. Every field is optional; flags win over the file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid_m: Option<usize>,
    pub n_bins: Option<usize>,
    pub lambda_max: Option<f64>,
    pub scan_step: Option<f64>,
    pub seed: Option<u64>,
    pub richardson: Option<bool>,
    pub verify_bins: Option<bool>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// The settings a run actually used; embedded in every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub grid_m: usize,
    pub n_bins: usize,
    pub lambda_max: f64,
    pub scan_step: f64,
    pub seed: u64,
    pub richardson: bool,
    pub verify_bins: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub threads: Option<usize>,
    pub binning_rule: &'static str,
    pub version: &'static str,
}

/// Flag values; `None` means "not given on the command line".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub grid_m: Option<usize>,
    pub n_bins: Option<usize>,
    pub lambda_max: Option<f64>,
    pub scan_step: Option<f64>,
    pub seed: Option<u64>,
    pub richardson: Option<bool>,
    pub verify_bins: Option<bool>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// `grid_fallback` is the grid of an input file, used when neither flag nor file sets it.
    pub fn resolve(
        file: &FileConfig,
        flags: &Overrides,
        grid_fallback: Option<usize>,
        richardson_default: bool,
    ) -> Result<Self, CliError> {
        let defaults = DirectOptions::default();
        let grid_m = flags.grid_m.or(file.grid_m).or(grid_fallback).unwrap_or(DEFAULT_GRID_M);
        let lambda_max_given = flags.lambda_max.or(file.lambda_max);
        let n_bins_given = flags.n_bins.or(file.n_bins);
        // λ_max and n_bins describe the same truncation: λ_max = π(n_bins + ½)
        let n_bins = match (n_bins_given, lambda_max_given) {
            (Some(n), Some(l)) if (PI * (n as f64 + 0.5) - l).abs() > 1e-9 * l.abs().max(1.0) => {
                return Err(CliError::Usage(format!(
                    "lambda_max = {l} disagrees with n_bins = {n} (expected pi*(n_bins + 1/2) = {})",
                    PI * (n as f64 + 0.5)
                )))
            }
            (Some(n), _) => n,
            (None, Some(l)) => {
                if !(l >= PI) {
                    return Err(CliError::Usage(format!("lambda_max must be at least pi, got {l}")));
                }
                ((l / PI - 0.5).floor() as usize).max(1)
            }
            (None, None) => DEFAULT_N_BINS,
        };
        let mut tolerances = BTreeMap::from([
            ("rank_tol".to_string(), defaults.rank_tol),
            ("refine_tol".to_string(), defaults.refine_tol),
            ("merge_tol".to_string(), defaults.merge_tol),
        ]);
        for (k, v) in &file.tolerances {
            if !TOLERANCE_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown tolerance '{k}' (known: {})",
                    TOLERANCE_KEYS.join(", ")
                )));
            }
            tolerances.insert(k.clone(), *v);
        }
        let cfg = Self {
            grid_m,
            n_bins,
            lambda_max: PI * (n_bins as f64 + 0.5),
            scan_step: flags.scan_step.or(file.scan_step).unwrap_or(defaults.scan_step),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            richardson: flags.richardson.or(file.richardson).unwrap_or(richardson_default),
            verify_bins: flags.verify_bins.or(file.verify_bins).unwrap_or(false),
            tolerances,
            threads: flags.threads,
            binning_rule: matsl::spectral::BINNING_RULE,
            version: env!("CARGO_PKG_VERSION"),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.grid_m == 0 || self.n_bins == 0 {
            return Err(CliError::Usage("grid_m and n_bins must be positive".into()));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(CliError::Usage(format!("tolerance {k} must be positive, got {v}")));
        }
        self.direct_options()
            .check()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn direct_options(&self) -> DirectOptions {
        DirectOptions {
            scan_step: self.scan_step,
            rank_tol: self.tolerances["rank_tol"],
            refine_tol: self.tolerances["refine_tol"],
            merge_tol: self.tolerances["merge_tol"],
            verify_bins: self.verify_bins,
            ..DirectOptions::default()
        }
    }
}
