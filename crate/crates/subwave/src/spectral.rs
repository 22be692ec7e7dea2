//! Eigendecomposition of capacitance matrices and the map from eigenvalues
//! to subwavelength resonant frequencies.
//!
//! A system of `N` resonators supports exactly `N` subwavelength resonant
//! frequencies; at leading order in the contrast `delta` they are
//! `omega_n = sqrt(delta lambda_n)` with `lambda_n` the eigenvalues of the
//! generalised capacitance matrix. For identical resonators the plain
//! capacitance matrix suffices, with the common factor `v^2 / |D|` folded
//! into the frequency formula.

use nalgebra::{DMatrix, DVector};

use crate::capacitance::{CapMatrix, GenCapMatrix};
use crate::error::{Error, Result};
use crate::geometry::Configuration;

/// Relative eigenvalue gap below which neighbours are flagged as a cluster
/// (degenerate up to solver precision); per-vector landscape checks remain
/// valid but the basis within a cluster is arbitrary.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Which matrix a spectrum (or landscape) was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Source {
    Plain,
    Generalized,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Plain => write!(f, "plain"),
            Source::Generalized => write!(f, "generalized"),
        }
    }
}

/// Full eigendecomposition, eigenvalues ascending.
///
/// Every eigenvector is rescaled to unit max-norm with the sign fixed so its
/// first entry of maximal magnitude is positive, which makes plots and CSV
/// exports reproducible.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Column `n` is the eigenvector for `eigenvalues[n]`, max-norm 1.
    pub eigenvectors: DMatrix<f64>,
    pub source: Source,
    /// Max-norm eigenpair residual `max_n |M v_n - lambda_n v_n|_inf`.
    pub max_residual: f64,
    /// `cluster[n]` is true when eigenvalue `n` sits within `CLUSTER_GAP`
    /// (relative to the largest eigenvalue) of a neighbour.
    pub cluster: Vec<bool>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Index (0-based) of the largest-magnitude entry of eigenvector `n`.
    pub fn argmax_index(&self, n: usize) -> usize {
        let col = self.eigenvectors.column(n);
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        best
    }
}

/// Resonant frequencies `omega_n`, ascending, derived from a spectrum and
/// the configuration's contrast.
#[derive(Debug, Clone)]
pub struct ResonantFrequencies {
    pub omegas: Vec<f64>,
    pub contrast: f64,
    pub source: Source,
}

/// Cyclic Jacobi eigendecomposition for a symmetric matrix. At the system
/// sizes here (tens of rows) it is fast and delivers eigenpair residuals at
/// the roundoff floor, which the downstream slack tolerances rely on.
fn symmetric_jacobi(mut a: DMatrix<f64>, max_sweeps: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _sweep in 0..max_sweeps {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= 1e-15 * fro {
            let eigenvalues: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-18 * fro {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::EigenFailed)
}

fn decompose(matrix: DMatrix<f64>, source: Source, back_transform: Option<&[f64]>) -> Result<Spectrum> {
    let n = matrix.nrows();
    let (raw_values, raw_vectors) = symmetric_jacobi(matrix, 64)?;
    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = raw_vectors.column(src).clone_owned();
        // Undo the symmetrizing similarity when decomposing the generalised
        // matrix: v = D^(1/2) w turns eigenvectors of D^(1/2) C D^(1/2) into
        // eigenvectors of D C.
        if let Some(scale) = back_transform {
            for (value, s) in col.iter_mut().zip(scale) {
                *value *= s;
            }
        }
        // Max-norm normalization with deterministic sign.
        let mut max_abs = 0.0f64;
        let mut max_idx = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                max_idx = i;
            }
        }
        if max_abs > 0.0 {
            let sign = col[max_idx].signum();
            col /= sign * max_abs;
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        source,
        max_residual: 0.0,
        cluster: Vec::new(),
    })
}

fn finalize(mut spectrum: Spectrum, matrix: &DMatrix<f64>) -> Spectrum {
    let n = spectrum.n();
    let mut max_residual = 0.0f64;
    for k in 0..n {
        let v = spectrum.eigenvectors.column(k);
        let mv = matrix * v;
        for i in 0..n {
            max_residual = max_residual.max((mv[i] - spectrum.eigenvalues[k] * v[i]).abs());
        }
    }
    spectrum.max_residual = max_residual;
    let scale = spectrum
        .eigenvalues
        .last()
        .map(|v| v.abs())
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    let mut cluster = vec![false; n];
    for k in 1..n {
        if (spectrum.eigenvalues[k] - spectrum.eigenvalues[k - 1]).abs() / scale < CLUSTER_GAP {
            cluster[k] = true;
            cluster[k - 1] = true;
        }
    }
    spectrum.cluster = cluster;
    spectrum
}

/// Eigendecomposition of the (symmetric) capacitance matrix.
pub fn eigendecompose(cap: &CapMatrix) -> Result<Spectrum> {
    let spectrum = decompose(cap.entries.clone(), Source::Plain, None)?;
    Ok(finalize(spectrum, &cap.entries))
}

/// Eigendecomposition of the generalised capacitance matrix `D C`.
///
/// Computed through the symmetric similarity `D^(1/2) C D^(1/2)` so only a
/// symmetric eigensolver is needed; eigenvalues are identical and the
/// eigenvectors transform back with `D^(1/2)`. Positive weights keep the
/// spectrum real and positive.
pub fn eigendecompose_generalized(gencap: &GenCapMatrix) -> Result<Spectrum> {
    let n = gencap.n();
    if let Some(bad) = gencap.weights.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::InvalidParams(format!(
            "generalised weights must be positive, found {bad}"
        )));
    }
    let sqrt_d: Vec<f64> = gencap.weights.iter().map(|d| d.sqrt()).collect();
    // Recover C = D^{-1} (DC), then form D^{1/2} C D^{1/2}.
    let mut sym = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = gencap.entries[(i, j)] / sqrt_d[i] * sqrt_d[j];
        }
    }
    // Symmetrize away roundoff from the scaling round-trip.
    let sym = (&sym + sym.transpose()) * 0.5;
    let spectrum = decompose(sym, Source::Generalized, Some(&sqrt_d))?;
    Ok(finalize(spectrum, &gencap.entries))
}

/// Leading-order resonant frequencies from a spectrum.
///
/// Generalized source: `omega_n = sqrt(delta lambda_n)`. Plain source:
/// `omega_n = sqrt(delta lambda_n v_1^2 / |D_1|)`, valid only when all
/// resonators are identical; otherwise the plain capacitance matrix does not
/// determine the frequencies and an error is returned.
pub fn resonant_frequencies(
    spectrum: &Spectrum,
    config: &Configuration,
) -> Result<ResonantFrequencies> {
    let delta = config.contrast;
    if !(delta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "contrast {delta} must be positive"
        )));
    }
    let factor = match spectrum.source {
        Source::Generalized => delta,
        Source::Plain => {
            if !config.identical_resonators() {
                return Err(Error::NonIdenticalResonators(
                    "resonators differ in radius or wave speed; use the generalised matrix"
                        .into(),
                ));
            }
            let first = config
                .spheres
                .first()
                .ok_or_else(|| Error::InvalidConfig(vec![crate::geometry::Violation::EmptyConfiguration]))?;
            delta * first.wave_speed * first.wave_speed / first.volume()
        }
    };
    let omegas = spectrum
        .eigenvalues
        .iter()
        .map(|l| (factor * l).sqrt())
        .collect();
    Ok(ResonantFrequencies {
        omegas,
        contrast: delta,
        source: spectrum.source,
    })
}

/// Max-norm normalize a vector with the deterministic sign convention used
/// for eigenvectors (first entry of maximal magnitude made positive).
pub fn max_norm_normalize(v: &DVector<f64>) -> DVector<f64> {
    let mut max_abs = 0.0f64;
    let mut max_idx = 0usize;
    for (i, value) in v.iter().enumerate() {
        if value.abs() > max_abs {
            max_abs = value.abs();
            max_idx = i;
        }
    }
    if max_abs == 0.0 {
        return v.clone();
    }
    v / (v[max_idx].signum() * max_abs)
}
