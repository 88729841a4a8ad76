//! Shared plumbing for the subcommands.

pub mod cv;
pub mod fit;
pub mod pipeline;
pub mod simulate;

use std::path::Path;

use rrr_core::io::{read_csv_matrix, split_missing, to_dense};
use rrr_core::{
    DenseMatrix, FitResult, HuberParam, Method, ObservationMask, PenaltyFamily, PenaltySpec,
};
use serde_json::json;

use crate::errors::{io_err, CliError, Result};

pub fn read_design(path: &Path) -> Result<DenseMatrix> {
    let raw = read_csv_matrix(path)?;
    Ok(to_dense(&raw, path)?)
}

pub fn read_response(path: &Path) -> Result<(DenseMatrix, ObservationMask)> {
    let raw = read_csv_matrix(path)?;
    Ok(split_missing(&raw)?)
}

pub fn parse_tau(s: &str) -> Result<HuberParam> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(HuberParam::infinite());
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::InvalidArgs(format!("--tau: '{s}' is not a number or 'inf'")))?;
    Ok(HuberParam::new(v)?)
}

pub fn parse_taus(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part.eq_ignore_ascii_case("inf") || part.eq_ignore_ascii_case("infinity") {
            out.push(f64::INFINITY);
        } else {
            let v: f64 = part.parse().map_err(|_| {
                CliError::InvalidArgs(format!("--taus: '{part}' is not a number or 'inf'"))
            })?;
            if !(v > 0.0) {
                return Err(CliError::InvalidArgs(format!(
                    "--taus: {v} is not positive"
                )));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(CliError::InvalidArgs("--taus: empty list".into()));
    }
    Ok(out)
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse::<Method>()?);
    }
    if out.is_empty() {
        return Err(CliError::InvalidArgs("--methods: empty list".into()));
    }
    Ok(out)
}

pub fn parse_penalty(family: &str, lambda: f64, eta: Option<f64>) -> Result<PenaltySpec> {
    let family: PenaltyFamily = family.parse()?;
    let eta = eta.unwrap_or(match family {
        PenaltyFamily::Mcp => rrr_core::penalty::DEFAULT_MCP_ETA,
        PenaltyFamily::Scad => rrr_core::penalty::DEFAULT_SCAD_ETA,
        PenaltyFamily::Nuclear => 0.0,
    });
    Ok(PenaltySpec::new(family, lambda, eta)?)
}

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Write the standard fit artifacts: coefficient matrix, spectrum, objective
/// trace, and a JSON summary embedding the manifest.
pub fn write_fit_artifacts(
    out_dir: &Path,
    fit: &FitResult,
    manifest: &crate::manifest::RunManifest,
    warnings: &[String],
) -> Result<()> {
    rrr_core::io::write_matrix_csv(&out_dir.join("b_hat.csv"), &fit.b_hat, "b")?;
    rrr_core::io::write_vector_csv(
        &out_dir.join("singular_values.csv"),
        "singular_value",
        &fit.singular_values,
    )?;
    rrr_core::io::write_vector_csv(
        &out_dir.join("objective_trace.csv"),
        "objective",
        &fit.objective_trace,
    )?;
    let summary = json!({
        "converged": fit.converged,
        "iterations": fit.iterations,
        "rank": fit.rank,
        "objective_final": fit.objective_trace.last(),
        "singular_values": fit.singular_values,
        "warnings": warnings,
        "manifest": manifest.to_value(),
    });
    write_json(&out_dir.join("summary.json"), &summary)
}
