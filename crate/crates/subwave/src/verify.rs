//! Invariant battery: every matrix-structure and landscape property the
//! capacitance theory guarantees, checked over ensembles of seeded random
//! configurations. Used by the `verify` subcommand and the acceptance suite.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacitance::{capacitance_matrix_with, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{gen_random_cube, gen_random_planar, Configuration, GeneratorOptions};
use crate::landscape::{landscape, verify_inequalities};
use crate::spectral::eigendecompose;

/// Relative pre-symmetrization asymmetry ceiling.
pub const ASYMMETRY_LIMIT: f64 = 1e-8;
/// Off-diagonal entries may exceed zero by at most this times `max |C|`.
pub const OFFDIAG_SLACK: f64 = 1e-10;
/// Inverse entries may fall below zero by at most this times `max |C^-1|`.
pub const INVERSE_SLACK: f64 = 1e-10;
/// Eigenpair residual ceiling relative to the largest eigenvalue.
pub const EIGEN_RESIDUAL_LIMIT: f64 = 1e-9;
/// Landscape slack floor (mirrors `landscape::SLACK_TOLERANCE`).
pub const SLACK_FLOOR: f64 = -1e-9;
/// Bound profiles at each eigenvector's argmax must reach this.
pub const ARGMAX_FLOOR: f64 = 1.0 - 1e-9;

/// Which generator produced a battery configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConfigKind {
    Planar,
    Cube,
}

impl std::fmt::Display for ConfigKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigKind::Planar => write!(f, "planar"),
            ConfigKind::Cube => write!(f, "cube"),
        }
    }
}

/// Outcome of the full check list on one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigCheck {
    pub kind: ConfigKind,
    pub seed: u64,
    pub n: usize,
    pub order: usize,
    pub asymmetry: f64,
    pub boundary_residual: f64,
    pub min_eigenvalue: f64,
    pub eigen_residual: f64,
    pub worst_offdiag: f64,
    pub worst_inverse_entry: f64,
    pub min_slack_lower: f64,
    pub min_slack_upper: f64,
    pub min_argmax_profile: f64,
    /// Empty iff every invariant held.
    pub failures: Vec<String>,
    /// True when a failure was a solver/numerical error rather than a
    /// violated theorem.
    pub numerical_error: bool,
}

impl ConfigCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Aggregated battery report, serializable for the `verify` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub order: usize,
    pub config_count: usize,
    pub passed: bool,
    pub checks: Vec<ConfigCheck>,
}

impl BatteryReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConfigCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn any_numerical_error(&self) -> bool {
        self.checks.iter().any(|c| c.numerical_error)
    }

    /// Theorem-level failure: an invariant was violated by finite data.
    pub fn any_violation(&self) -> bool {
        self.checks
            .iter()
            .any(|c| !c.passed() && !c.numerical_error)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Run every invariant check on one configuration at the given order.
pub fn check_configuration(
    config: &Configuration,
    kind: ConfigKind,
    seed: u64,
    options: &SolverOptions,
) -> ConfigCheck {
    let mut check = ConfigCheck {
        kind,
        seed,
        n: config.len(),
        order: options.order,
        asymmetry: f64::NAN,
        boundary_residual: f64::NAN,
        min_eigenvalue: f64::NAN,
        eigen_residual: f64::NAN,
        worst_offdiag: f64::NAN,
        worst_inverse_entry: f64::NAN,
        min_slack_lower: f64::NAN,
        min_slack_upper: f64::NAN,
        min_argmax_profile: f64::NAN,
        failures: Vec::new(),
        numerical_error: false,
    };
    let cap = match capacitance_matrix_with(config, options) {
        Ok(cap) => cap,
        Err(err) => {
            check.failures.push(format!("solver failed: {err}"));
            check.numerical_error = true;
            return check;
        }
    };
    let c = &cap.entries;
    let n = cap.n();
    let scale = c.amax();
    check.asymmetry = cap.asymmetry;
    check.boundary_residual = cap.residual;
    if cap.asymmetry > ASYMMETRY_LIMIT {
        check
            .failures
            .push(format!("asymmetry {} above {ASYMMETRY_LIMIT}", cap.asymmetry));
    }

    // Sign pattern and diagonal dominance.
    let mut worst_offdiag = f64::NEG_INFINITY;
    for i in 0..n {
        if !(c[(i, i)] > 0.0) {
            check
                .failures
                .push(format!("diagonal entry {i} not positive: {}", c[(i, i)]));
        }
        let mut off_sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            worst_offdiag = worst_offdiag.max(c[(i, j)]);
            if c[(i, j)] > OFFDIAG_SLACK * scale {
                check.failures.push(format!(
                    "off-diagonal entry ({i},{j}) positive: {}",
                    c[(i, j)]
                ));
            }
            off_sum += c[(i, j)].abs();
        }
        if !(c[(i, i)] > off_sum) {
            check.failures.push(format!(
                "row {i} not strictly diagonally dominant: {} vs {off_sum}",
                c[(i, i)]
            ));
        }
    }
    check.worst_offdiag = if n > 1 { worst_offdiag } else { 0.0 };

    // Spectrum: positivity and eigenpair residual.
    let spectrum = match eigendecompose(&cap) {
        Ok(s) => s,
        Err(err) => {
            check.failures.push(format!("eigensolver failed: {err}"));
            check.numerical_error = true;
            return check;
        }
    };
    check.min_eigenvalue = spectrum.eigenvalues[0];
    check.eigen_residual = spectrum.max_residual;
    let lambda_max = *spectrum.eigenvalues.last().unwrap();
    if !(spectrum.eigenvalues[0] > 0.0) {
        check.failures.push(format!(
            "smallest eigenvalue not positive: {}",
            spectrum.eigenvalues[0]
        ));
    }
    if spectrum.max_residual > EIGEN_RESIDUAL_LIMIT * lambda_max {
        check.failures.push(format!(
            "eigen residual {} above {}",
            spectrum.max_residual,
            EIGEN_RESIDUAL_LIMIT * lambda_max
        ));
    }

    // Inverse positivity.
    match c.clone().try_inverse() {
        Some(inv) => {
            let inv_scale = inv.amax();
            let worst = inv.iter().copied().fold(f64::INFINITY, f64::min);
            check.worst_inverse_entry = worst;
            if worst < -INVERSE_SLACK * inv_scale {
                check
                    .failures
                    .push(format!("inverse has negative entry {worst}"));
            }
        }
        None => {
            check.failures.push("matrix not invertible".into());
            check.numerical_error = true;
            return check;
        }
    }

    // Landscape bounds for every eigenpair.
    let land = match landscape(&cap) {
        Ok(l) => l,
        Err(err) => {
            check.failures.push(format!("landscape solve failed: {err}"));
            check.numerical_error = true;
            return check;
        }
    };
    if let Some(bad) = land.u.iter().find(|&&x| !(x > 0.0)) {
        check
            .failures
            .push(format!("landscape vector has non-positive entry {bad}"));
    }
    if let Some(bad) = land.u_hat.iter().find(|&&x| !(x > 0.0)) {
        check
            .failures
            .push(format!("upper landscape has non-positive entry {bad}"));
    }
    if !(land.mu > lambda_max) {
        check.failures.push(format!(
            "shift mu = {} does not exceed lambda_max = {lambda_max}",
            land.mu
        ));
    }
    match verify_inequalities(&spectrum, &land) {
        Ok(report) => {
            check.min_slack_lower = report
                .modes
                .iter()
                .map(|m| m.min_slack_lower)
                .fold(f64::INFINITY, f64::min);
            check.min_slack_upper = report
                .modes
                .iter()
                .map(|m| m.min_slack_upper)
                .fold(f64::INFINITY, f64::min);
            check.min_argmax_profile = report
                .modes
                .iter()
                .map(|m| m.lower_at_argmax.min(m.upper_at_argmax))
                .fold(f64::INFINITY, f64::min);
            if check.min_slack_lower < SLACK_FLOOR || check.min_slack_upper < SLACK_FLOOR {
                check.failures.push(format!(
                    "landscape slack below tolerance: lower {}, upper {}",
                    check.min_slack_lower, check.min_slack_upper
                ));
            }
            if check.min_argmax_profile < ARGMAX_FLOOR {
                check.failures.push(format!(
                    "bound profile at an argmax entry below 1: {}",
                    check.min_argmax_profile
                ));
            }
        }
        Err(err @ Error::TheoremViolation { .. }) => {
            check.failures.push(err.to_string());
        }
        Err(err) => {
            check.failures.push(format!("verification failed: {err}"));
            check.numerical_error = true;
        }
    }
    check
}

/// Standard battery ensemble: for every seed and size, one planar and one
/// cube configuration with unit radius and the default gap.
pub fn battery_ensemble(seeds: &[u64], sizes: &[usize]) -> Vec<(ConfigKind, u64, usize)> {
    let mut jobs = Vec::new();
    for &seed in seeds {
        for &n in sizes {
            jobs.push((ConfigKind::Planar, seed, n));
            jobs.push((ConfigKind::Cube, seed, n));
        }
    }
    jobs
}

/// Generate the battery configuration for one job.
pub fn battery_config(kind: ConfigKind, seed: u64, n: usize) -> Result<Configuration> {
    let options = GeneratorOptions::default();
    match kind {
        ConfigKind::Planar => gen_random_planar(n, 1.0, 10.0, seed, 0.5, &options),
        ConfigKind::Cube => gen_random_cube(n, 1.0, 20.0, seed, 0.5, &options),
    }
}

/// Run the battery over the ensemble in parallel. Order of the report is
/// deterministic (the job list order), independent of scheduling.
pub fn run_battery(seeds: &[u64], sizes: &[usize], options: &SolverOptions) -> BatteryReport {
    let jobs = battery_ensemble(seeds, sizes);
    let checks: Vec<ConfigCheck> = jobs
        .par_iter()
        .map(|&(kind, seed, n)| match battery_config(kind, seed, n) {
            Ok(config) => check_configuration(&config, kind, seed, options),
            Err(err) => ConfigCheck {
                kind,
                seed,
                n,
                order: options.order,
                asymmetry: f64::NAN,
                boundary_residual: f64::NAN,
                min_eigenvalue: f64::NAN,
                eigen_residual: f64::NAN,
                worst_offdiag: f64::NAN,
                worst_inverse_entry: f64::NAN,
                min_slack_lower: f64::NAN,
                min_slack_upper: f64::NAN,
                min_argmax_profile: f64::NAN,
                failures: vec![format!("generator failed: {err}")],
                numerical_error: true,
            },
        })
        .collect();
    BatteryReport {
        order: options.order,
        config_count: checks.len(),
        passed: checks.iter().all(|c| c.passed()),
        checks,
    }
}

/// The inverse-positivity check in matrix form, reusable by tests.
pub fn min_inverse_entry(matrix: &DMatrix<f64>) -> Option<f64> {
    matrix
        .clone()
        .try_inverse()
        .map(|inv| inv.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_passes() {
        let options = SolverOptions::with_order(6);
        let report = run_battery(&[0, 1], &[2, 5], &options);
        assert_eq!(report.config_count, 8);
        for check in &report.checks {
            assert!(
                check.passed(),
                "{} seed {} n {}: {:?}",
                check.kind,
                check.seed,
                check.n,
                check.failures
            );
        }
        assert!(report.passed);
        assert!(!report.any_violation());
        assert!(!report.any_numerical_error());
    }

    #[test]
    fn report_serializes() {
        let options = SolverOptions::with_order(4);
        let report = run_battery(&[3], &[2], &options);
        let json = report.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["config_count"], 2);
        assert!(value["passed"].as_bool().unwrap());
    }
}
