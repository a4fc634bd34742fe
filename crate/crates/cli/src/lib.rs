//! Command implementations behind the `lempert` binary: config ingestion,
//! report assembly, and the exit-code contract.
//!
//! Exit codes: 0 success, 2 parse error (unreadable or invalid input files),
//! 3 numerical indeterminacy (undetermined valuations, Gram-Schmidt
//! breakdown), 4 precondition violation (parameter ranges, degenerate
//! configurations).

pub mod report;

use lempert::disk::{DiskError, RationalDisk, COEFF_TOL, POLE_HIT_TOL};
use lempert::extreal::ExtReal;
use lempert::indicator::{estimate_offset, ElementaryIndicator, IndicatorError};
use lempert::polesys::{
    check_admissible, check_admissible_old, functional, green_bidisk_s, lower_bound_check,
    GreenFormula, PolesysError,
};
use lempert::search::{
    build_example_disk, convergence_sweep, ExampleError, SweepConfig, SweepError,
};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical indeterminacy: {0}")]
    Indeterminate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Indeterminate(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<DiskError> for CliError {
    fn from(e: DiskError) -> Self {
        match e {
            DiskError::UndeterminedValuation { .. } => CliError::Indeterminate(e.to_string()),
            DiskError::WindingUnresolved { .. } => CliError::Indeterminate(e.to_string()),
            other => CliError::Precondition(other.to_string()),
        }
    }
}

impl From<IndicatorError> for CliError {
    fn from(e: IndicatorError) -> Self {
        match e {
            IndicatorError::GramSchmidtBreakdown { .. } | IndicatorError::NoMatching => {
                CliError::Indeterminate(e.to_string())
            }
            other => CliError::Precondition(other.to_string()),
        }
    }
}

impl From<PolesysError> for CliError {
    fn from(e: PolesysError) -> Self {
        match e {
            PolesysError::Disk(d) => d.into(),
            PolesysError::Indicator(i) => i.into(),
            other => CliError::Precondition(other.to_string()),
        }
    }
}

impl From<ExampleError> for CliError {
    fn from(e: ExampleError) -> Self {
        match e {
            ExampleError::ParameterRange { .. } => CliError::Precondition(e.to_string()),
            ExampleError::Disk(d) => d.into(),
            ExampleError::Polesys(p) => p.into(),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::BadEpsList | SweepError::GammaRange { .. } => {
                CliError::Precondition(e.to_string())
            }
            SweepError::Inconsistency { .. } => CliError::Internal(e.to_string()),
            SweepError::Example(inner) => inner.into(),
            SweepError::Collision(inner) => CliError::Precondition(inner.to_string()),
            SweepError::Polesys(inner) => inner.into(),
        }
    }
}

/// Reads and deserializes a JSON config file.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_hit: Option<f64>,
    pub tol_coeff: Option<f64>,
    pub green_formula: Option<GreenFormula>,
}

fn default_offset_radii() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

fn default_lelong_radii() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

fn default_samples_per_radius() -> usize {
    10_000
}

fn default_tol_hit() -> f64 {
    POLE_HIT_TOL
}

fn default_tol_coeff() -> f64 {
    COEFF_TOL
}

fn default_boundary_samples() -> usize {
    2048
}

#[derive(Debug, Deserialize)]
pub struct IndicatorConfig {
    pub psi: ElementaryIndicator,
    #[serde(default)]
    pub psi2: Option<ElementaryIndicator>,
    #[serde(default)]
    pub eval_points: Vec<Vec<Complex64>>,
    #[serde(default = "default_offset_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples_per_radius")]
    pub samples_per_radius: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Evaluation grid, mass, orthonormalized form, and offset estimates.
pub fn run_indicator(mut cfg: IndicatorConfig, over: &Overrides) -> Result<Value, CliError> {
    if let Some(seed) = over.seed {
        cfg.seed = seed;
    }
    let mass = cfg.psi.mass().tau;
    let mut evaluations = Vec::new();
    for point in &cfg.eval_points {
        let value = cfg.psi.eval(point)?;
        evaluations.push(json!({
            "z": point,
            "value": value,
        }));
    }
    let ortho = cfg.psi.orthonormalize()?;
    let ortho_offset = estimate_offset(
        &ortho.indicator,
        &cfg.psi,
        &cfg.radii,
        cfg.samples_per_radius,
        cfg.seed,
    )?;
    let offset = match &cfg.psi2 {
        Some(psi2) => Some(estimate_offset(
            &cfg.psi,
            psi2,
            &cfg.radii,
            cfg.samples_per_radius,
            cfg.seed,
        )?),
        None => None,
    };
    Ok(json!({
        "mass": mass,
        "evaluations": evaluations,
        "orthonormalized": {
            "indicator": ortho.indicator,
            "permutation": ortho.permutation,
        },
        "ortho_offset": ortho_offset,
        "offset": offset,
    }))
}

#[derive(Debug, Deserialize)]
pub struct MultiplicityConfig {
    pub disk: RationalDisk,
    pub alpha: Complex64,
    pub pole: Vec<Complex64>,
    pub psi: ElementaryIndicator,
    #[serde(default = "default_lelong_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_tol_hit")]
    pub tol_hit: f64,
    #[serde(default = "default_tol_coeff")]
    pub tol_coeff: f64,
}

/// Per-direction valuations, the closed-form multiplicity, and the sampling
/// oracle with their agreement delta.
pub fn run_multiplicity(mut cfg: MultiplicityConfig, over: &Overrides) -> Result<Value, CliError> {
    if let Some(tol) = over.tol_hit {
        cfg.tol_hit = tol;
    }
    if let Some(tol) = over.tol_coeff {
        cfg.tol_coeff = tol;
    }
    let shifted = cfg.disk.shifted_by_pole(&cfg.pole)?;
    let mut valuations = Vec::new();
    for v in &cfg.psi.basis {
        let nu = shifted.valuation_with(cfg.alpha, v, cfg.tol_coeff)?;
        valuations.push(match nu {
            lempert::disk::Valuation::Finite(k) => json!(k),
            lempert::disk::Valuation::Infinite => json!("inf"),
        });
    }
    let tau = cfg.psi.mass().tau;
    let multiplicity = cfg
        .disk
        .multiplicity_with(cfg.alpha, &cfg.pole, &cfg.psi, cfg.tol_hit, cfg.tol_coeff)?
        .value;
    let oracle = cfg
        .disk
        .numeric_lelong(cfg.alpha, &cfg.pole, &cfg.psi, &cfg.radii)?;
    let truncated = oracle.estimate.min(tau);
    Ok(json!({
        "valuations": valuations,
        "tau": tau,
        "multiplicity": multiplicity,
        "lelong": {
            "estimate": oracle.estimate,
            "per_radius": oracle.per_radius,
            "truncated": truncated,
        },
        "agreement_delta": (multiplicity - truncated).abs(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct ReproduceConfig {
    pub a: f64,
    pub gamma: f64,
    #[serde(default = "default_boundary_samples")]
    pub boundary_samples: usize,
    #[serde(default = "default_tol_hit")]
    pub tol_hit: f64,
    #[serde(default)]
    pub green_formula: GreenFormula,
}

/// Rebuilds the extremal two-pole example: preimages, admissibility, the
/// functional against the Green value, and the old-sense full-mass failure
/// at the simple preimages.
pub fn run_reproduce_distinct(
    mut cfg: ReproduceConfig,
    over: &Overrides,
) -> Result<(Value, String), CliError> {
    if let Some(tol) = over.tol_hit {
        cfg.tol_hit = tol;
    }
    if let Some(formula) = over.green_formula {
        cfg.green_formula = formula;
    }
    let ex = build_example_disk(cfg.a, cfg.gamma)?;
    let admissibility = check_admissible(&ex.system, &ex.z, &ex.assignment, cfg.tol_hit)?;
    let value = functional(&ex.system, &ex.assignment, cfg.tol_hit)?;
    let green = green_bidisk_s(
        [ex.z[0], ex.z[1]],
        Complex64::new(cfg.a, 0.0),
        Complex64::new(-cfg.a, 0.0),
        cfg.green_formula,
    );
    let bound_ok = lower_bound_check(value.value, green);
    let range = ex.assignment.disk.range_check(1.0, cfg.boundary_samples);
    let old_at_zeta1 = check_admissible_old(
        &ex.system,
        &ex.z,
        &ex.assignment.disk,
        &[ex.zeta1, ex.zeta2],
        cfg.tol_hit,
    )?;
    let old_at_zeta4 = check_admissible_old(
        &ex.system,
        &ex.z,
        &ex.assignment.disk,
        &[ex.zeta4, ex.zeta2],
        cfg.tol_hit,
    )?;
    let product_identity = (ex.zeta1 * ex.zeta4 + Complex64::new(cfg.a, 0.0)).norm();
    let triple_identity = ((ex.zeta1 * ex.zeta2 * ex.zeta4).norm() - cfg.a.powf(1.5)).abs();
    let functional_value = value.value;
    let full_mass_fails =
        !old_at_zeta1.per_pole[0].full_mass && !old_at_zeta4.per_pole[0].full_mass;
    let report = json!({
        "a": cfg.a,
        "gamma": cfg.gamma,
        "zeta1": ex.zeta1,
        "zeta2": ex.zeta2,
        "zeta4": ex.zeta4,
        "identity_product_residual": product_identity,
        "identity_triple_residual": triple_identity,
        "admissibility": admissibility,
        "functional": value,
        "green": green,
        "lower_bound_ok": bound_ok,
        "range": range,
        "old_admissibility": {
            "at_zeta1": old_at_zeta1,
            "at_zeta4": old_at_zeta4,
        },
        "summary": {
            "functional_equals_green": matches!(
                (functional_value, green),
                (ExtReal::Finite(f), ExtReal::Finite(g)) if (f - g).abs() <= 1e-9
            ),
            "full_mass_fails_at_simple_preimages": full_mass_fails,
        },
    });
    let mut csv = String::from("a,gamma,zeta1,zeta2,zeta4,functional,green\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        report::format_sig15(cfg.a),
        report::format_sig15(cfg.gamma),
        report::format_sig15(ex.zeta1.re),
        report::format_sig15(ex.zeta2.re),
        report::format_sig15(ex.zeta4.re),
        report::format_sig15(functional_value.finite().unwrap_or(f64::NEG_INFINITY)),
        report::format_sig15(green.finite().unwrap_or(f64::NEG_INFINITY)),
    ));
    Ok((report, csv))
}

/// Runs the collision convergence sweep; returns the JSON summary and the
/// CSV table. Failed cells are marked, not fatal.
pub fn run_sweep(mut cfg: SweepConfig, over: &Overrides) -> Result<(Value, String), CliError> {
    if let Some(seed) = over.seed {
        cfg.seed = seed;
    }
    if let Some(formula) = over.green_formula {
        cfg.green_formula = formula;
    }
    let table = convergence_sweep(&cfg)?;
    let csv = table.to_csv();
    let report = json!({
        "base_kind": table.base_kind,
        "rows": table.rows,
        "csv_columns": "eps,upper_bound,green_eps,limit_upper,limit_green,sup_P,eta,seed",
    });
    Ok((report, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
        assert_eq!(CliError::Indeterminate("x".into()).exit_code(), 3);
        assert_eq!(CliError::Precondition("x".into()).exit_code(), 4);
        assert_eq!(CliError::Internal("x".into()).exit_code(), 1);
    }

    #[test]
    fn undetermined_valuation_maps_to_indeterminacy() {
        let err: CliError = DiskError::UndeterminedValuation { cap: 64 }.into();
        assert_eq!(err.exit_code(), 3);
    }
}
