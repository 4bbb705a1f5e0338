use std::path::Path;

use log::info;
use matsl::accelerant::prepend_identity_at_zero;
use matsl::direct::spectral_data_report;
use matsl::io;
use matsl::pipeline::{self, RoundtripOptions};
use matsl::synth::{fourier_tau, FourierSpec};
use matsl::validation::{check_a1, check_conditions, Verdict};
use matsl::{GridSpec, MatrixGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{FileConfig, Overrides, RunConfig};
use crate::CliError;

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

/// τ from file, moved onto the configured grid when it differs.
fn load_tau(path: &Path, cfg: &RunConfig) -> Result<MatrixGrid, CliError> {
    let tau = io::load_matrix_grid(path)?;
    let spec = GridSpec::new(cfg.grid_m)?;
    Ok(if tau.spec() == spec { tau } else { tau.resample(spec) })
}

fn grid_of(path: &Path) -> Result<usize, CliError> {
    Ok(io::load_matrix_grid(path)?.spec().m())
}

pub fn direct(tau_path: &Path, file: &FileConfig, flags: &Overrides, out: &Path) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(file, flags, Some(grid_of(tau_path)?), false)?;
    let tau = load_tau(tau_path, &cfg)?;
    let report = spectral_data_report(&tau, cfg.n_bins, &cfg.direct_options())?;
    io::save_spectral_data(&out.join("spectral_data.json"), &report.data)?;
    let eigenvalues: Vec<_> = report
        .records
        .iter()
        .map(|r| json!({ "lambda": r.lambda, "multiplicity": r.multiplicity }))
        .collect();
    let diagnostics = json!({
        "config": cfg,
        "input": tau_path.display().to_string(),
        "r": tau.r(),
        "n_bins": report.n_bins,
        "lambda_max": report.lambda_max,
        "identity_residual": report.identity_residual,
        "max_alpha_hermitian_defect": report.max_alpha_hermitian_defect,
        "bin_ranks": report.bin_ranks,
        "eigenvalues": eigenvalues,
        "a1": check_a1(&report.data, report.n_bins),
        "warnings": report.warnings,
    });
    write_json(&out.join("direct_diagnostics.json"), &diagnostics)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(0)
}

pub fn inverse(data_path: &Path, file: &FileConfig, flags: &Overrides, out: &Path) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(file, flags, None, false)?;
    let data = io::load_spectral_data(data_path)?;
    let spec = GridSpec::new(cfg.grid_m)?;
    let rec = pipeline::inverse(&data, spec, cfg.n_bins, cfg.richardson)?;
    io::save_matrix_grid(&out.join("tau.json"), &rec.tau)?;
    io::save_tagged_matrix_grid(&out.join("sigma.json"), &rec.sigma.sigma, "potential_primitive")?;
    let diagnostics = json!({
        "config": cfg,
        "input": data_path.display().to_string(),
        "diagnostics": rec.diagnostics,
    });
    write_json(&out.join("inverse_diagnostics.json"), &diagnostics)?;
    Ok(0)
}

pub fn validate(data_path: &Path, file: &FileConfig, flags: &Overrides, out: &Path) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(file, flags, None, false)?;
    let data = io::load_spectral_data(data_path)?;
    let prepended_zero = !data.includes_zero();
    let data = if prepended_zero {
        prepend_identity_at_zero(&data)?
    } else {
        data
    };
    let report = check_conditions(&data, GridSpec::new(cfg.grid_m)?, cfg.n_bins)?;
    let overall = report.overall;
    write_json(
        &out.join("conditions.json"),
        &json!({
            "config": cfg,
            "input": data_path.display().to_string(),
            "prepended_zero": prepended_zero,
            "report": report,
        }),
    )?;
    Ok(match overall {
        Verdict::Pass => 0,
        Verdict::Fail => 5,
        Verdict::Inconclusive => 6,
    })
}

pub fn roundtrip(
    tau_path: &Path,
    file: &FileConfig,
    flags: &Overrides,
    convergence: bool,
    out: &Path,
) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(file, flags, Some(grid_of(tau_path)?), true)?;
    let tau = load_tau(tau_path, &cfg)?;
    let opts = RoundtripOptions {
        direct: cfg.direct_options(),
        richardson: cfg.richardson,
        rederive: true,
        convergence,
    };
    let (report, art) = pipeline::roundtrip(&tau, cfg.n_bins, &opts)?;
    io::save_matrix_grid(&out.join("tau_hat.json"), &art.inverse.tau)?;
    write_json(
        &out.join("roundtrip.json"),
        &json!({
            "config": cfg,
            "input": tau_path.display().to_string(),
            "report": report,
        }),
    )?;
    Ok(0)
}

pub fn synth(
    r: usize,
    order: usize,
    scale: f64,
    file: &FileConfig,
    flags: &Overrides,
    out: &Path,
) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(file, flags, None, false)?;
    let spec = FourierSpec {
        r,
        order,
        scale,
        seed: cfg.seed,
    };
    let tau = fourier_tau(GridSpec::new(cfg.grid_m)?, &spec)?;
    io::save_matrix_grid(&out.join("tau.json"), &tau)?;
    write_json(&out.join("synth.json"), &json!({ "config": cfg, "fourier": spec }))?;
    Ok(0)
}
