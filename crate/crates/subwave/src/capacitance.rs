//! Capacitance matrices for systems of spherical resonators.
//!
//! The boundary density of sphere `k` is expanded in real orthonormal
//! harmonics about its own center. A degree-`(l, m)` unit density on a sphere
//! of radius `R` produces, under the Laplace single layer potential with
//! kernel `-1/(4 pi |x|)`:
//!
//! - surface value `-R/(2l+1) Y_lm`,
//! - exterior value `-R/(2l+1) (R/rho)^(l+1) Y_lm`,
//! - interior value `-R/(2l+1) (rho/R)^l Y_lm`,
//!
//! with `rho` the distance to the sphere center. Self-interactions are
//! therefore diagonal and exact; cross-sphere traces are sampled on a
//! Gauss-Legendre x uniform-azimuth surface grid and projected back onto
//! harmonics of degree at most `L`, yielding a square dense system of size
//! `N (L+1)^2`. Solving it against the indicator of each sphere's boundary
//! gives the densities, and the capacitance entries follow from the monopole
//! coefficients alone:
//!
//! `C[i][j] = -sqrt(4 pi) R_i^2 a[j][i][0,0]`,
//!
//! consistent with `C = 4 pi R` for an isolated sphere.

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::sphharm::{self, SphereGrid};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Default harmonic truncation degree.
pub const DEFAULT_ORDER: usize = 8;

/// Condition-estimate ceiling beyond which the solve is rejected.
const COND_LIMIT: f64 = 1e14;

/// Tunable solver knobs. The grid defaults oversample the minimal product
/// rule by roughly 2x in each direction: aliasing of unresolved cross-sphere
/// harmonics otherwise leaks into the projection and breaks the symmetry of
/// the assembled system at the 1e-7 level for spheres near the standard gap,
/// while the oversampled grid keeps the extracted matrix symmetric to near
/// roundoff at negligible extra cost.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Harmonic truncation degree L.
    pub order: usize,
    /// Gauss-Legendre nodes in cos(theta). Must be at least `order + 1`.
    pub n_theta: usize,
    /// Uniform azimuth nodes. Must be at least `2 order + 1`.
    pub n_phi: usize,
    /// Off-grid probe directions per sphere for the boundary-defect report.
    pub probe_count: usize,
}

impl SolverOptions {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            n_theta: 2 * order + 2,
            n_phi: 4 * order + 2,
            probe_count: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_theta < self.order + 1 || self.n_phi < 2 * self.order + 1 {
            return Err(Error::GridTooCoarse {
                n_theta: self.n_theta,
                n_phi: self.n_phi,
                order: self.order,
            });
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_order(DEFAULT_ORDER)
    }
}

#[derive(Debug, Clone, Copy)]
struct SphereGeom {
    center: [f64; 3],
    radius: f64,
}

/// Harmonic expansion of all boundary densities: for each source sphere `j`,
/// the coefficients of the density solving the indicator problem, stored per
/// target sphere `i` and flat harmonic index.
#[derive(Debug, Clone)]
pub struct DensitySet {
    order: usize,
    spheres: Vec<SphereGeom>,
    /// Layout: `coeffs[(j * n + i) * basis + t]`.
    coeffs: Vec<f64>,
    cond_estimate: f64,
}

impl DensitySet {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sphere_count(&self) -> usize {
        self.spheres.len()
    }

    pub fn basis_len(&self) -> usize {
        sphharm::basis_len(self.order)
    }

    /// Condition estimate of the boundary system (diagonal-ratio bound from
    /// the partially pivoted factorization).
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    /// Coefficient `a[j][i][l,m]` of the density for source `j` on sphere `i`.
    pub fn coefficient(&self, source_j: usize, sphere_i: usize, l: usize, m: i64) -> f64 {
        let b = self.basis_len();
        self.coeffs[(source_j * self.sphere_count() + sphere_i) * b + sphharm::flat_index(l, m)]
    }

    fn block(&self, source_j: usize, sphere_i: usize) -> &[f64] {
        let b = self.basis_len();
        let start = (source_j * self.sphere_count() + sphere_i) * b;
        &self.coeffs[start..start + b]
    }

    /// Evaluate the single layer potential of the density for source `j` at
    /// an arbitrary point. Exterior and interior harmonic forms are used as
    /// appropriate; the potential is continuous across every boundary.
    pub fn potential(&self, source_j: usize, x: [f64; 3]) -> f64 {
        let mut scratch = EvalScratch::new(self.order);
        self.potential_with(source_j, x, &mut scratch)
    }

    pub fn potential_with(&self, source_j: usize, x: [f64; 3], scratch: &mut EvalScratch) -> f64 {
        (0..self.sphere_count())
            .map(|i| {
                potential_of_block(
                    self.block(source_j, i),
                    &self.spheres[i],
                    self.order,
                    x,
                    scratch,
                )
            })
            .sum()
    }

    /// Collapse the per-source densities with the given weights (typically an
    /// eigenvector), producing a single weighted density for mode evaluation.
    pub fn combine(&self, weights: &[f64]) -> ModeDensity {
        assert_eq!(weights.len(), self.sphere_count());
        let n = self.sphere_count();
        let b = self.basis_len();
        let mut coeffs = vec![0.0; n * b];
        for (j, w) in weights.iter().enumerate() {
            for i in 0..n {
                let src = self.block(j, i);
                let dst = &mut coeffs[i * b..(i + 1) * b];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        ModeDensity {
            order: self.order,
            spheres: self.spheres.clone(),
            coeffs,
        }
    }

    /// Maximum boundary defect `|S[psi_j] - indicator_j|` sampled at
    /// `probe_count` off-grid directions per sphere.
    pub fn boundary_defect(&self, probe_count: usize) -> f64 {
        let probes = sphharm::fibonacci_directions(probe_count.max(1));
        let n = self.sphere_count();
        (0..n)
            .into_par_iter()
            .map(|j| {
                let mut scratch = EvalScratch::new(self.order);
                let mut worst = 0.0f64;
                for (i, sphere) in self.spheres.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    for dir in &probes {
                        let x = [
                            sphere.center[0] + sphere.radius * dir[0],
                            sphere.center[1] + sphere.radius * dir[1],
                            sphere.center[2] + sphere.radius * dir[2],
                        ];
                        let value = self.potential_with(j, x, &mut scratch);
                        worst = worst.max((value - target).abs());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// A density already weighted by a mode vector; the leading-order resonant
/// mode is the single layer potential of this density.
#[derive(Debug, Clone)]
pub struct ModeDensity {
    order: usize,
    spheres: Vec<SphereGeom>,
    /// Layout: `coeffs[i * basis + t]`.
    coeffs: Vec<f64>,
}

impl ModeDensity {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sphere_count(&self) -> usize {
        self.spheres.len()
    }

    pub fn new_scratch(&self) -> EvalScratch {
        EvalScratch::new(self.order)
    }

    pub fn potential(&self, x: [f64; 3]) -> f64 {
        let mut scratch = self.new_scratch();
        self.potential_with(x, &mut scratch)
    }

    pub fn potential_with(&self, x: [f64; 3], scratch: &mut EvalScratch) -> f64 {
        let b = sphharm::basis_len(self.order);
        self.spheres
            .iter()
            .enumerate()
            .map(|(i, sphere)| {
                potential_of_block(&self.coeffs[i * b..(i + 1) * b], sphere, self.order, x, scratch)
            })
            .sum()
    }
}

/// Reusable buffers for point evaluations.
#[derive(Debug, Clone)]
pub struct EvalScratch {
    ys: Vec<f64>,
    radial: Vec<f64>,
}

impl EvalScratch {
    pub fn new(order: usize) -> Self {
        Self {
            ys: vec![0.0; sphharm::basis_len(order)],
            radial: vec![0.0; order + 1],
        }
    }
}

/// Single layer potential at `x` of one sphere's harmonic density block.
fn potential_of_block(
    coeffs: &[f64],
    sphere: &SphereGeom,
    order: usize,
    x: [f64; 3],
    scratch: &mut EvalScratch,
) -> f64 {
    let r = [
        x[0] - sphere.center[0],
        x[1] - sphere.center[1],
        x[2] - sphere.center[2],
    ];
    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let radius = sphere.radius;
    let dir = if rho > 0.0 {
        [r[0] / rho, r[1] / rho, r[2] / rho]
    } else {
        [0.0, 0.0, 1.0]
    };
    sphharm::eval_basis(order, dir, &mut scratch.ys);
    // Radial factors: exterior decay (R/rho)^(l+1), interior growth (rho/R)^l.
    if rho >= radius {
        let ratio = radius / rho;
        let mut pow = ratio; // (R/rho)^(l+1) starting at l = 0
        for l in 0..=order {
            scratch.radial[l] = -radius / (2.0 * l as f64 + 1.0) * pow;
            pow *= ratio;
        }
    } else {
        let ratio = rho / radius;
        let mut pow = 1.0; // (rho/R)^l starting at l = 0
        for l in 0..=order {
            scratch.radial[l] = -radius / (2.0 * l as f64 + 1.0) * pow;
            pow *= ratio;
        }
    }
    let mut total = 0.0;
    let mut t = 0usize;
    for l in 0..=order {
        let f = scratch.radial[l];
        for _ in 0..(2 * l + 1) {
            total += coeffs[t] * f * scratch.ys[t];
            t += 1;
        }
    }
    total
}

/// Capacitance matrix with solver diagnostics.
///
/// `residual` is the reported solver defect: the maximum of the off-grid
/// boundary-condition defect and the relative pre-symmetrization asymmetry
/// (the entries themselves are exactly symmetrized by averaging).
#[derive(Debug, Clone)]
pub struct CapMatrix {
    pub entries: DMatrix<f64>,
    pub order_used: usize,
    pub residual: f64,
    /// Relative asymmetry `max |C_ij - C_ji| / max |C|` before averaging.
    pub asymmetry: f64,
}

impl CapMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Generalised capacitance matrix: rows of `C` scaled by `v_i^2 / |D_i|`.
#[derive(Debug, Clone)]
pub struct GenCapMatrix {
    pub entries: DMatrix<f64>,
    /// Row weights `d_i = v_i^2 / |D_i|`.
    pub weights: Vec<f64>,
}

impl GenCapMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Solve the boundary systems for every source sphere at truncation `order`.
pub fn solve_densities(config: &Configuration, order: usize) -> Result<DensitySet> {
    solve_densities_with(config, &SolverOptions::with_order(order))
}

pub fn solve_densities_with(config: &Configuration, options: &SolverOptions) -> Result<DensitySet> {
    config.ensure_valid()?;
    options.validate()?;
    let spheres: Vec<SphereGeom> = config
        .spheres
        .iter()
        .map(|s| SphereGeom {
            center: s.center,
            radius: s.radius,
        })
        .collect();
    let n = spheres.len();
    let b = sphharm::basis_len(options.order);
    let total = n * b;

    let system = assemble_system(&spheres, options);

    // Right-hand sides: the indicator of sphere j's boundary expands as
    // sqrt(4 pi) Y_00 there and vanishes elsewhere.
    let mut rhs = DMatrix::<f64>::zeros(total, n);
    for j in 0..n {
        rhs[(j * b, j)] = FOUR_PI.sqrt();
    }

    let lu = system.lu();
    let u_diag = lu.u().diagonal();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for v in u_diag.iter() {
        dmax = dmax.max(v.abs());
        dmin = dmin.min(v.abs());
    }
    let cond_estimate = if dmin == 0.0 { f64::INFINITY } else { dmax / dmin };
    if !cond_estimate.is_finite() || cond_estimate > COND_LIMIT {
        return Err(Error::IllConditioned {
            cond: cond_estimate,
        });
    }
    let solution = lu
        .solve(&rhs)
        .ok_or(Error::IllConditioned { cond: cond_estimate })?;

    // Repack column-major solution into per-(source, sphere) blocks.
    let mut coeffs = vec![0.0; n * total];
    for j in 0..n {
        let col = solution.column(j);
        for i in 0..n {
            for t in 0..b {
                coeffs[(j * n + i) * b + t] = col[i * b + t];
            }
        }
    }
    Ok(DensitySet {
        order: options.order,
        spheres,
        coeffs,
        cond_estimate,
    })
}

/// Assemble the dense boundary system. Self-interactions are exact and
/// diagonal; cross-sphere traces are quadrature-projected. Columns are
/// assembled in parallel per source sphere; every matrix entry is a fixed
/// deterministic summation, so the result is independent of scheduling.
fn assemble_system(spheres: &[SphereGeom], options: &SolverOptions) -> DMatrix<f64> {
    let n = spheres.len();
    let order = options.order;
    let b = sphharm::basis_len(order);
    let total = n * b;
    let grid = SphereGrid::new(options.n_theta, options.n_phi);
    let q = grid.len();

    // Projection matrix P[t, q] = w_q Y_t(dir_q) and raw node values, shared
    // by every sphere since nodes live in local direction space.
    let mut proj = DMatrix::<f64>::zeros(b, q);
    let mut ys = vec![0.0; b];
    for (qi, (dir, w)) in grid.dirs.iter().zip(&grid.weights).enumerate() {
        sphharm::eval_basis(order, *dir, &mut ys);
        for t in 0..b {
            proj[(t, qi)] = w * ys[t];
        }
    }

    let mut system = DMatrix::<f64>::zeros(total, total);
    let data = system.as_mut_slice(); // column-major
    data.par_chunks_mut(total * b)
        .enumerate()
        .for_each(|(k, cols)| {
            // Diagonal block of source sphere k: -R_k / (2l + 1).
            let rk = spheres[k].radius;
            for l in 0..=order {
                let v = -rk / (2.0 * l as f64 + 1.0);
                for m in 0..(2 * l + 1) {
                    let t = l * l + m;
                    cols[t * total + k * b + t] = v;
                }
            }
            // Cross blocks: trace of source-(k, l', m') densities on sphere i.
            let mut trace = DMatrix::<f64>::zeros(q, b);
            let mut ys = vec![0.0; b];
            let mut radial = vec![0.0; order + 1];
            for (i, si) in spheres.iter().enumerate() {
                if i == k {
                    continue;
                }
                let offset = [
                    si.center[0] - spheres[k].center[0],
                    si.center[1] - spheres[k].center[1],
                    si.center[2] - spheres[k].center[2],
                ];
                for (qi, dir) in grid.dirs.iter().enumerate() {
                    let r = [
                        offset[0] + si.radius * dir[0],
                        offset[1] + si.radius * dir[1],
                        offset[2] + si.radius * dir[2],
                    ];
                    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                    let d = [r[0] / rho, r[1] / rho, r[2] / rho];
                    sphharm::eval_basis(order, d, &mut ys);
                    let ratio = rk / rho;
                    let mut pow = ratio;
                    for (l, slot) in radial.iter_mut().enumerate() {
                        *slot = -rk / (2.0 * l as f64 + 1.0) * pow;
                        pow *= ratio;
                    }
                    for l in 0..=order {
                        let f = radial[l];
                        for m in 0..(2 * l + 1) {
                            let t = l * l + m;
                            trace[(qi, t)] = f * ys[t];
                        }
                    }
                }
                let block = &proj * &trace; // (b x q) * (q x b)
                for tp in 0..b {
                    let col = &mut cols[tp * total + i * b..tp * total + (i + 1) * b];
                    for t in 0..b {
                        col[t] = block[(t, tp)];
                    }
                }
            }
        });
    system
}

/// Capacitance matrix at truncation `order` (densities solved internally).
pub fn capacitance_matrix(config: &Configuration, order: usize) -> Result<CapMatrix> {
    capacitance_matrix_with(config, &SolverOptions::with_order(order))
}

pub fn capacitance_matrix_with(
    config: &Configuration,
    options: &SolverOptions,
) -> Result<CapMatrix> {
    let densities = solve_densities_with(config, options)?;
    Ok(capacitance_from_densities(&densities, options.probe_count))
}

/// Extract the capacitance matrix from solved densities. Only the monopole
/// coefficient survives the surface integral:
/// `C[i][j] = -sqrt(4 pi) R_i^2 a[j][i][0,0]`.
pub fn capacitance_from_densities(densities: &DensitySet, probe_count: usize) -> CapMatrix {
    let n = densities.sphere_count();
    let mut raw = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let r = densities.spheres[i].radius;
            raw[(i, j)] = -FOUR_PI.sqrt() * r * r * densities.coefficient(j, i, 0, 0);
        }
    }
    let scale = raw.amax();
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((raw[(i, j)] - raw[(j, i)]).abs());
        }
    }
    let asymmetry = if scale > 0.0 { asymmetry / scale } else { 0.0 };
    let entries = (&raw + raw.transpose()) * 0.5;
    let defect = densities.boundary_defect(probe_count);
    CapMatrix {
        entries,
        order_used: densities.order(),
        residual: defect.max(asymmetry),
        asymmetry,
    }
}

/// Generalised capacitance: `entries[i][j] = (v_i^2 / |D_i|) C[i][j]`.
pub fn generalized_capacitance(cap: &CapMatrix, config: &Configuration) -> Result<GenCapMatrix> {
    if cap.n() != config.len() {
        return Err(Error::InvalidParams(format!(
            "capacitance is {}x{} but configuration has {} spheres",
            cap.n(),
            cap.n(),
            config.len()
        )));
    }
    let weights: Vec<f64> = config
        .spheres
        .iter()
        .map(|s| s.wave_speed * s.wave_speed / s.volume())
        .collect();
    let mut entries = cap.entries.clone();
    for (i, d) in weights.iter().enumerate() {
        for j in 0..entries.ncols() {
            entries[(i, j)] *= d;
        }
    }
    Ok(GenCapMatrix { entries, weights })
}

/// Classical bispherical (image-charge) series for the capacitance matrix of
/// two equal spheres of radius `R` at center distance `d > 2R`:
/// with `cosh(u) = d / (2R)`,
///
/// `C11 = C22 = 4 pi R sinh(u) sum_{n>=1} 1/sinh((2n-1) u)`,
/// `C12 = C21 = -4 pi R sinh(u) sum_{n>=1} 1/sinh(2n u)`.
///
/// Serves as an independent oracle for the harmonic solver; the series itself
/// is cross-validated against a dense flat-panel collocation discretization
/// in the test suite before being trusted.
pub fn two_sphere_capacitance_series(radius: f64, dist: f64, terms: usize) -> Result<Matrix2<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!(
            "radius {radius} must be positive"
        )));
    }
    if !(dist > 2.0 * radius) {
        return Err(Error::InvalidParams(format!(
            "distance {dist} must exceed 2 radius = {}",
            2.0 * radius
        )));
    }
    if terms < 1 {
        return Err(Error::InvalidParams("terms must be at least 1".into()));
    }
    let t = dist / (2.0 * radius);
    let u = (t + (t * t - 1.0).sqrt()).ln(); // arccosh(t)
    let sinh_u = (t * t - 1.0).sqrt();
    let mut diag_sum = 0.0;
    let mut off_sum = 0.0;
    for k in 1..=terms {
        let odd = ((2 * k - 1) as f64 * u).sinh();
        let even = ((2 * k) as f64 * u).sinh();
        if odd.is_finite() {
            diag_sum += 1.0 / odd;
        }
        if even.is_finite() {
            off_sum += 1.0 / even;
        }
    }
    let c11 = FOUR_PI * radius * sinh_u * diag_sum;
    let c12 = -FOUR_PI * radius * sinh_u * off_sum;
    Ok(Matrix2::new(c11, c12, c12, c11))
}

/// Two-sphere configuration on the x-axis, used by tests and examples.
pub fn two_sphere_config(radius: f64, dist: f64) -> Configuration {
    use crate::geometry::Sphere;
    Configuration {
        background_speed: 1.0,
        contrast: crate::geometry::DEFAULT_CONTRAST,
        min_gap: 0.0,
        spheres: vec![
            Sphere::new([-dist / 2.0, 0.0, 0.0], radius, 1.0),
            Sphere::new([dist / 2.0, 0.0, 0.0], radius, 1.0),
        ],
    }
}
