//! Landscape and upper-landscape vectors bounding the eigenvectors of a
//! capacitance matrix, with per-eigenpair verification and focus-site
//! prediction.
//!
//! For a capacitance matrix `C` (positive diagonal, nonpositive off-diagonal,
//! strictly diagonally dominant) the landscape vector `u` solves `C u = 1`
//! and every eigenpair `(lambda, v)` obeys the entrywise bound
//! `|v_i| / |v|_inf <= lambda u_i`. The bound is tight at the bottom of the
//! spectrum. For the top of the spectrum, take `mu = 2 max_i C_ii`, form the
//! comparison matrix of `mu I - C` and solve it against the ones vector to
//! get the upper landscape `u_hat`, which obeys
//! `|v_i| / |v|_inf <= (mu - lambda) u_hat_i`.
//!
//! Both constructions apply verbatim to the generalised (row-scaled) matrix:
//! row scaling by positive weights preserves the sign pattern, the diagonal
//! dominance and the entrywise nonnegativity of the inverse. The inequalities
//! are proved for the symmetric case, so for the generalised matrix the
//! verification here is part of the contract rather than a formality; any
//! violation beyond tolerance is reported as a hard error.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::capacitance::{CapMatrix, GenCapMatrix};
use crate::error::{Error, Result};
use crate::spectral::{Source, Spectrum};

/// Tolerance on linear-solve residuals for the landscape systems.
pub const SOLVE_RESIDUAL_LIMIT: f64 = 1e-10;

/// Slack below this threshold counts as a theorem violation.
pub const SLACK_TOLERANCE: f64 = -1e-9;

/// Landscape data for one matrix: the landscape vector, the shift, and the
/// upper landscape vector.
#[derive(Debug, Clone)]
pub struct Landscape {
    /// Solution of `M u = 1`; entrywise positive.
    pub u: DVector<f64>,
    /// Shift `mu = 2 max_i M_ii`.
    pub mu: f64,
    /// Solution of `(mu I - M)# u_hat = 1`; entrywise positive.
    pub u_hat: DVector<f64>,
    pub source: Source,
}

impl Landscape {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// The bound profile for an eigenvalue: `lambda u` (lower spectrum) or
    /// `(mu - lambda) u_hat` (upper spectrum).
    pub fn bound_profile(&self, lambda: f64, which: Bound) -> DVector<f64> {
        match which {
            Bound::LowerSpectrum => &self.u * lambda,
            Bound::UpperSpectrum => &self.u_hat * (self.mu - lambda),
        }
    }
}

/// Which landscape inequality a profile or prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// `lambda u`: tightest for the lowest eigenvalues.
    LowerSpectrum,
    /// `(mu - lambda) u_hat`: tightest for the highest eigenvalues.
    UpperSpectrum,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::LowerSpectrum => write!(f, "lower"),
            Bound::UpperSpectrum => write!(f, "upper"),
        }
    }
}

/// Per-eigenpair slack summary for both inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSlack {
    /// 1-based mode index (ascending eigenvalues).
    pub n: usize,
    pub lambda: f64,
    /// Minimum over entries of `lambda u_i - |v_i| / |v|_inf`.
    pub min_slack_lower: f64,
    /// Minimum over entries of `(mu - lambda) u_hat_i - |v_i| / |v|_inf`.
    pub min_slack_upper: f64,
    /// Bound profiles evaluated at the eigenvector's argmax entry; both are
    /// at least 1 up to solver roundoff.
    pub lower_at_argmax: f64,
    pub upper_at_argmax: f64,
    /// 0-based argmax entry of `|v|`.
    pub argmax_index: usize,
    /// Eigenvalue sits in a near-degenerate cluster; the eigenbasis within
    /// the cluster is arbitrary, though the bounds hold per vector.
    pub clustered: bool,
}

/// Verification report: slack tables for every eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct SlackReport {
    pub mu: f64,
    pub source: Source,
    pub modes: Vec<ModeSlack>,
}

impl SlackReport {
    /// Worst slack over all modes and both bounds.
    pub fn min_slack(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.min_slack_lower.min(m.min_slack_upper))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn has_violation(&self) -> bool {
        self.min_slack() < SLACK_TOLERANCE
    }
}

/// Focus-site prediction from a bound profile.
#[derive(Debug, Clone, Serialize)]
pub struct FocusPrediction {
    /// 1-based mode index when the prediction was made for a specific mode.
    pub eigen_index: Option<usize>,
    pub lambda: f64,
    pub which_bound: Bound,
    pub threshold: f64,
    /// Sites (0-based) where the bound profile reaches the threshold. At
    /// threshold 1 this is a certified superset of the argmax locations of
    /// any eigenvector with this eigenvalue.
    pub candidate_sites: Vec<usize>,
    pub bound_profile: Vec<f64>,
    /// True when the threshold makes the superset property a theorem
    /// (threshold at most 1, eigenvalue actual).
    pub certified: bool,
}

/// Solve `M x = b` by LU with one step of iterative refinement, enforcing
/// the crate-wide residual limit.
fn refined_solve(matrix: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = matrix.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
    let mut residual = b - matrix * &x;
    if residual.amax() > SOLVE_RESIDUAL_LIMIT * b.amax().max(1.0) {
        if let Some(correction) = lu.solve(&residual) {
            x += correction;
            residual = b - matrix * &x;
        }
    }
    if residual.amax() > SOLVE_RESIDUAL_LIMIT * b.amax().max(1.0) {
        return Err(Error::IllConditioned {
            cond: residual.amax() / SOLVE_RESIDUAL_LIMIT,
        });
    }
    Ok(x)
}

/// Landscape vector: solution of `C u = 1`.
pub fn landscape_vector(cap: &CapMatrix) -> Result<DVector<f64>> {
    solve_ones(&cap.entries)
}

fn solve_ones(matrix: &DMatrix<f64>) -> Result<DVector<f64>> {
    let ones = DVector::from_element(matrix.nrows(), 1.0);
    refined_solve(matrix, &ones)
}

/// Comparison matrix: absolute values on the diagonal, negated absolute
/// values off it.
pub fn comparison_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = if i == j {
                m[(i, j)].abs()
            } else {
                -m[(i, j)].abs()
            };
        }
    }
    out
}

/// Upper landscape: the shift `mu = 2 max_i C_ii` and the solution of
/// `(mu I - C)# u_hat = 1`.
pub fn upper_landscape(cap: &CapMatrix) -> Result<(f64, DVector<f64>)> {
    upper_landscape_of(&cap.entries)
}

fn upper_landscape_of(matrix: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = matrix.nrows();
    let mu = 2.0
        * (0..n)
            .map(|i| matrix[(i, i)])
            .fold(f64::NEG_INFINITY, f64::max);
    let mut shifted = -matrix.clone();
    for i in 0..n {
        shifted[(i, i)] += mu;
    }
    let comparison = comparison_matrix(&shifted);
    // The shifted comparison matrix must dominate at least as strongly as
    // the original matrix; failure here means the input was not a valid
    // capacitance matrix.
    for i in 0..n {
        let off: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| comparison[(i, j)].abs())
            .sum();
        if comparison[(i, i)] <= off {
            return Err(Error::DominanceFailure { row: i });
        }
    }
    let u_hat = solve_ones(&comparison)?;
    Ok((mu, u_hat))
}

fn build_landscape(matrix: &DMatrix<f64>, source: Source) -> Result<Landscape> {
    let u = solve_ones(matrix)?;
    let (mu, u_hat) = upper_landscape_of(matrix)?;
    Ok(Landscape { u, mu, u_hat, source })
}

/// Landscape data for the plain capacitance matrix.
pub fn landscape(cap: &CapMatrix) -> Result<Landscape> {
    build_landscape(&cap.entries, Source::Plain)
}

/// Landscape data for the generalised capacitance matrix. Same
/// constructions applied to the row-scaled matrix; see the module docs.
pub fn landscape_generalized(gencap: &GenCapMatrix) -> Result<Landscape> {
    build_landscape(&gencap.entries, Source::Generalized)
}

/// Verify both landscape inequalities for every eigenpair, with slack
/// recorded per mode. Any slack below [`SLACK_TOLERANCE`] is an
/// implementation bug and returns an error carrying the offending entry.
pub fn verify_inequalities(spectrum: &Spectrum, land: &Landscape) -> Result<SlackReport> {
    if spectrum.source != land.source {
        return Err(Error::SourceMismatch(format!(
            "spectrum from {} matrix, landscape from {} matrix",
            spectrum.source, land.source
        )));
    }
    if spectrum.n() != land.n() {
        return Err(Error::SourceMismatch(format!(
            "spectrum has {} modes, landscape has {}",
            spectrum.n(),
            land.n()
        )));
    }
    let n = spectrum.n();
    let mut modes = Vec::with_capacity(n);
    let mut violation: Option<Error> = None;
    for k in 0..n {
        let lambda = spectrum.eigenvalues[k];
        let v = spectrum.eigenvectors.column(k);
        let norm = v.amax();
        let lower = land.bound_profile(lambda, Bound::LowerSpectrum);
        let upper = land.bound_profile(lambda, Bound::UpperSpectrum);
        let mut min_lower = f64::INFINITY;
        let mut min_upper = f64::INFINITY;
        let mut argmax_index = 0usize;
        let mut argmax_abs = 0.0f64;
        for i in 0..n {
            let ratio = v[i].abs() / norm;
            let slack_lower = lower[i] - ratio;
            let slack_upper = upper[i] - ratio;
            min_lower = min_lower.min(slack_lower);
            min_upper = min_upper.min(slack_upper);
            if v[i].abs() > argmax_abs {
                argmax_abs = v[i].abs();
                argmax_index = i;
            }
            if violation.is_none() {
                if slack_lower < SLACK_TOLERANCE {
                    violation = Some(Error::TheoremViolation {
                        mode: k + 1,
                        index: i,
                        bound: "lower",
                        slack: slack_lower,
                    });
                } else if slack_upper < SLACK_TOLERANCE {
                    violation = Some(Error::TheoremViolation {
                        mode: k + 1,
                        index: i,
                        bound: "upper",
                        slack: slack_upper,
                    });
                }
            }
        }
        modes.push(ModeSlack {
            n: k + 1,
            lambda,
            min_slack_lower: min_lower,
            min_slack_upper: min_upper,
            lower_at_argmax: lower[argmax_index],
            upper_at_argmax: upper[argmax_index],
            argmax_index,
            clustered: spectrum.cluster.get(k).copied().unwrap_or(false),
        });
    }
    if let Some(err) = violation {
        return Err(err);
    }
    Ok(SlackReport {
        mu: land.mu,
        source: land.source,
        modes,
    })
}

/// Sites where the bound profile reaches the threshold.
///
/// With the max-norm normalization, the argmax entry of any eigenvector with
/// eigenvalue `lambda` has ratio 1, and the inequality forces the bound
/// profile to be at least 1 there; the superlevel set at threshold 1 is
/// therefore a certified superset of the argmax locations. Thresholds above
/// 1 may legitimately produce an empty set and are reported as such.
pub fn predict_focus_sites(
    land: &Landscape,
    lambda: f64,
    which: Bound,
    threshold: f64,
) -> Result<FocusPrediction> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidThreshold(threshold));
    }
    let profile = land.bound_profile(lambda, which);
    let candidate_sites: Vec<usize> = profile
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(FocusPrediction {
        eigen_index: None,
        lambda,
        which_bound: which,
        threshold,
        candidate_sites,
        bound_profile: profile.iter().copied().collect(),
        certified: threshold <= 1.0,
    })
}

/// Focus prediction for mode `n` (1-based) of a spectrum.
pub fn predict_focus_sites_for_mode(
    land: &Landscape,
    spectrum: &Spectrum,
    n: usize,
    which: Bound,
    threshold: f64,
) -> Result<FocusPrediction> {
    if n == 0 || n > spectrum.n() {
        return Err(Error::ModeIndexOutOfRange {
            n,
            count: spectrum.n(),
        });
    }
    let mut prediction = predict_focus_sites(land, spectrum.eigenvalues[n - 1], which, threshold)?;
    prediction.eigen_index = Some(n);
    Ok(prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::{
        capacitance_matrix, generalized_capacitance, two_sphere_config,
    };
    use crate::geometry::{
        gen_lattice_defect, gen_random_planar, lattice_center_index, GeneratorOptions, Sphere,
    };
    use crate::spectral::{eigendecompose, eigendecompose_generalized};
    use approx::assert_relative_eq;

    const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

    fn single_sphere_cap() -> CapMatrix {
        let config = crate::geometry::Configuration {
            background_speed: 1.0,
            contrast: 1e-3,
            min_gap: 0.0,
            spheres: vec![Sphere::new([0.0, 0.0, 0.0], 1.0, 1.0)],
        };
        capacitance_matrix(&config, 2).unwrap()
    }

    #[test]
    fn single_sphere_landscape_is_reciprocal_capacitance() {
        let cap = single_sphere_cap();
        let u = landscape_vector(&cap).unwrap();
        assert_relative_eq!(u[0], 1.0 / FOUR_PI, max_relative = 1e-12);
        let (mu, u_hat) = upper_landscape(&cap).unwrap();
        assert_relative_eq!(mu, 2.0 * FOUR_PI, max_relative = 1e-12);
        assert_relative_eq!(u_hat[0], 1.0 / FOUR_PI, max_relative = 1e-12);
    }

    #[test]
    fn single_sphere_bounds_are_exactly_tight() {
        let cap = single_sphere_cap();
        let spectrum = eigendecompose(&cap).unwrap();
        let land = landscape(&cap).unwrap();
        let report = verify_inequalities(&spectrum, &land).unwrap();
        assert_eq!(report.modes.len(), 1);
        assert!(report.modes[0].min_slack_lower.abs() < 1e-12);
        assert!(report.modes[0].min_slack_upper.abs() < 1e-12);
    }

    #[test]
    fn two_identical_spheres_landscape_formula() {
        let cap = capacitance_matrix(&two_sphere_config(1.0, 4.0), 6).unwrap();
        let c = cap.entries[(0, 0)];
        let g = -cap.entries[(0, 1)];
        let u = landscape_vector(&cap).unwrap();
        assert_relative_eq!(u[0], 1.0 / (c - g), max_relative = 1e-12);
        assert_relative_eq!(u[1], 1.0 / (c - g), max_relative = 1e-12);
        let (_, u_hat) = upper_landscape(&cap).unwrap();
        assert_relative_eq!(u_hat[0], u_hat[1], max_relative = 1e-13);
    }

    #[test]
    fn comparison_matrix_definition_and_idempotence() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(comparison_matrix(&a), a);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(comparison_matrix(&b), a);
        let c = DMatrix::from_row_slice(3, 3, &[-4.0, 2.0, -1.0, 0.5, 3.0, 1.5, -2.0, 0.0, 5.0]);
        let once = comparison_matrix(&c);
        assert_eq!(comparison_matrix(&once), once);
    }

    #[test]
    fn landscape_positive_on_random_config() {
        let config =
            gen_random_planar(15, 1.0, 10.0, 7, 0.5, &GeneratorOptions::default()).unwrap();
        let cap = capacitance_matrix(&config, 6).unwrap();
        let land = landscape(&cap).unwrap();
        assert!(land.u.iter().all(|&x| x > 0.0));
        assert!(land.u_hat.iter().all(|&x| x > 0.0));
        let spectrum = eigendecompose(&cap).unwrap();
        assert!(land.mu > *spectrum.eigenvalues.last().unwrap());
        let report = verify_inequalities(&spectrum, &land).unwrap();
        assert!(report.min_slack() >= SLACK_TOLERANCE);
        for mode in &report.modes {
            assert!(mode.lower_at_argmax >= 1.0 - 1e-9);
            assert!(mode.upper_at_argmax >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn defect_lattice_upper_landscape_peaks_at_center() {
        let config =
            gen_lattice_defect(5, 5, 5.0, 1.0, 2.0, &GeneratorOptions::default()).unwrap();
        let cap = capacitance_matrix(&config, 5).unwrap();
        let gen = generalized_capacitance(&cap, &config).unwrap();
        let land = landscape_generalized(&gen).unwrap();
        let center = lattice_center_index(5, 5);
        let max_index = land
            .u_hat
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(max_index, center);

        let spectrum = eigendecompose_generalized(&gen).unwrap();
        let top = spectrum.n();
        let prediction =
            predict_focus_sites_for_mode(&land, &spectrum, top, Bound::UpperSpectrum, 1.0)
                .unwrap();
        assert!(prediction.candidate_sites.contains(&center));
        assert!(prediction.certified);

        let report = verify_inequalities(&spectrum, &land).unwrap();
        let top_mode = report.modes.last().unwrap();
        assert!(top_mode.min_slack_upper < top_mode.min_slack_lower);
    }

    #[test]
    fn focus_sets_grow_as_threshold_decreases() {
        let config =
            gen_random_planar(10, 1.0, 8.0, 4, 0.5, &GeneratorOptions::default()).unwrap();
        let cap = capacitance_matrix(&config, 5).unwrap();
        let land = landscape(&cap).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let lambda = spectrum.eigenvalues[0];
        let strict = predict_focus_sites(&land, lambda, Bound::LowerSpectrum, 1.0).unwrap();
        let loose = predict_focus_sites(&land, lambda, Bound::LowerSpectrum, 0.5).unwrap();
        for site in &strict.candidate_sites {
            assert!(loose.candidate_sites.contains(site));
        }
        assert!(!strict.candidate_sites.is_empty());
        assert!(loose.candidate_sites.len() >= strict.candidate_sites.len());
        // The argmax of the actual eigenvector is certified.
        assert!(strict.candidate_sites.contains(&spectrum.argmax_index(0)));
    }

    #[test]
    fn single_site_prediction() {
        let cap = single_sphere_cap();
        let land = landscape(&cap).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let p = predict_focus_sites_for_mode(&land, &spectrum, 1, Bound::LowerSpectrum, 1.0)
            .unwrap();
        assert_eq!(p.candidate_sites, vec![0]);
    }

    #[test]
    fn invalid_threshold_rejected() {
        let cap = single_sphere_cap();
        let land = landscape(&cap).unwrap();
        assert!(matches!(
            predict_focus_sites(&land, 1.0, Bound::LowerSpectrum, 0.0),
            Err(Error::InvalidThreshold(_))
        ));
        // Above 1 is allowed; the set may be empty and is not an error.
        let p = predict_focus_sites(&land, 0.5, Bound::LowerSpectrum, 1e6).unwrap();
        assert!(p.candidate_sites.is_empty());
        assert!(!p.certified);
    }

    #[test]
    fn source_mismatch_rejected() {
        let config = gen_lattice_defect(3, 3, 5.0, 1.0, 2.0, &GeneratorOptions::default()).unwrap();
        let cap = capacitance_matrix(&config, 3).unwrap();
        let gen = generalized_capacitance(&cap, &config).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let land = landscape_generalized(&gen).unwrap();
        assert!(matches!(
            verify_inequalities(&spectrum, &land),
            Err(Error::SourceMismatch(_))
        ));
    }
}
