//! Real orthonormal spherical harmonics and quadrature grids on the unit
//! sphere.
//!
//! Conventions, fixed once for the whole crate:
//! - `Y[0] = 1/sqrt(4 pi)`, so the constant function 1 has coefficient
//!   `sqrt(4 pi)` against `Y_00`. Capacitance extraction depends on this
//!   normalization.
//! - Real harmonics: `m > 0` pairs with `cos(m phi)`, `m < 0` with
//!   `sin(|m| phi)`, both carrying the `sqrt(2)` factor; no Condon-Shortley
//!   phase. Orthonormal over the sphere: integral of `Y_lm Y_l'm'` equals the
//!   Kronecker delta.
//! - Flat index `l^2 + l + m` enumerates `(l, m)` for `l = 0..=L`,
//!   `m = -l..=l`, giving `(L+1)^2` functions.

use gauss_quad::GaussLegendre;

/// Number of real harmonics of degree at most `l_max`.
pub fn basis_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Flat index of `(l, m)`; `m` in `-l..=l`.
pub fn flat_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    (l * l) as usize + (l as i64 + m) as usize
}

/// Evaluate every real orthonormal harmonic of degree `<= l_max` at the unit
/// direction `dir`, writing into `out` (length `(l_max+1)^2`, flat-indexed).
///
/// Uses the standard stable recurrence on fully normalized associated
/// Legendre functions, so degrees well beyond any truncation used here are
/// safe in f64.
pub fn eval_basis(l_max: usize, dir: [f64; 3], out: &mut [f64]) {
    debug_assert_eq!(out.len(), basis_len(l_max));
    let [x, y, z] = dir;
    let ct = z.clamp(-1.0, 1.0); // cos(theta)
    let st = (1.0 - ct * ct).max(0.0).sqrt(); // sin(theta) >= 0
    // cos(m phi), sin(m phi) by the angle-addition recurrence; at the poles
    // (st == 0) the m > 0 harmonics vanish, so phi can be anything.
    let rho = x.hypot(y);
    let (cp, sp) = if rho > 0.0 { (x / rho, y / rho) } else { (1.0, 0.0) };
    let mut cos_m = vec![1.0; l_max + 1];
    let mut sin_m = vec![0.0; l_max + 1];
    for m in 1..=l_max {
        cos_m[m] = cos_m[m - 1] * cp - sin_m[m - 1] * sp;
        sin_m[m] = sin_m[m - 1] * cp + cos_m[m - 1] * sp;
    }

    // pmm holds the diagonal term \bar P_m^m; pml / pml_prev walk degree l
    // upward at fixed order m.
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt(); // \bar P_0^0
    for m in 0..=l_max {
        if m > 0 {
            // \bar P_m^m = -sqrt((2m+1)/(2m)) sin(theta) \bar P_{m-1}^{m-1},
            // without the Condon-Shortley sign.
            pmm *= ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt() * st;
        }
        let mut p_prev = 0.0;
        let mut p_curr = pmm;
        for l in m..=l_max {
            if l > m {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p_next = a * (ct * p_curr - b * p_prev);
                p_prev = p_curr;
                p_curr = p_next;
            }
            if m == 0 {
                out[flat_index(l, 0)] = p_curr;
            } else {
                out[flat_index(l, m as i64)] = sqrt2 * p_curr * cos_m[m];
                out[flat_index(l, -(m as i64))] = sqrt2 * p_curr * sin_m[m];
            }
        }
    }
}

/// Convenience wrapper allocating the output.
pub fn basis_at(l_max: usize, dir: [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; basis_len(l_max)];
    eval_basis(l_max, dir, &mut out);
    out
}

/// A product quadrature grid on the unit sphere: Gauss-Legendre nodes in
/// cos(theta) times uniform azimuth. Exact for spherical polynomials of
/// degree up to `min(2 n_theta - 1, n_phi - 1)`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    /// Unit directions, length `n_theta * n_phi`.
    pub dirs: Vec<[f64; 3]>,
    /// Quadrature weights summing to `4 pi`.
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let rule = GaussLegendre::new(n_theta).expect("n_theta must be >= 1");
        // gauss_quad returns nodes for [-1, 1]; order them ascending so the
        // grid layout is deterministic.
        let mut nw: Vec<(f64, f64)> = rule
            .nodes()
            .copied()
            .zip(rule.weights().copied())
            .collect();
        nw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for &(ct, w) in &nw {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for b in 0..n_phi {
                // Half-cell offset keeps nodes away from phi = 0 alignment.
                let phi = dphi * (b as f64 + 0.5);
                dirs.push([st * phi.cos(), st * phi.sin(), ct]);
                weights.push(w * dphi);
            }
        }
        Self {
            dirs,
            weights,
            n_theta,
            n_phi,
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Deterministic, roughly uniform point set on the unit sphere (golden-angle
/// spiral). Used for off-grid boundary probes; independent of the assembly
/// quadrature by construction.
pub fn fibonacci_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let st = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
            [st * phi.cos(), st * phi.sin(), z]
        })
        .collect()
}
