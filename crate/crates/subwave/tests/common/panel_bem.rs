//! Dense flat-panel collocation solver for sphere capacitance problems.
//! Test-only brute force: no spherical harmonics, no multipole forms, no
//! shared code with the solver under test.
//!
//! Each sphere is partitioned into near-equal-area panels (polar caps plus
//! latitude bands of azimuthal sectors). Collocation enforces the potential
//! at panel centroids: the self term uses the closed-form potential of a
//! flat rectangle (disk for the caps), near neighbours use subdivided
//! quadrature, and the far field uses centroid-to-centroid kernels. The
//! row-scaled symmetric system is solved with Jacobi-preconditioned
//! conjugate gradients, matrix-free.

use rayon::prelude::*;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

struct Panel {
    center: [f64; 3],
    area: f64,
    /// Integral of the kernel 1/(4 pi r) over the panel, evaluated at its
    /// own centroid (flat-rectangle / flat-disk closed form).
    self_term: f64,
    /// Sub-quadrature points and weights for near-field integration.
    sub_points: Vec<[f64; 3]>,
    sub_weights: Vec<f64>,
    sphere: usize,
}

/// Potential of a unit-density flat rectangle with full sides a, b at its
/// center: 2a asinh(b/a) + 2b asinh(a/b), divided by 4 pi.
fn rectangle_self_term(a: f64, b: f64) -> f64 {
    (2.0 * a * (b / a).asinh() + 2.0 * b * (a / b).asinh()) / FOUR_PI
}

fn on_sphere(center: [f64; 3], radius: f64, cos_theta: f64, phi: f64) -> [f64; 3] {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    [
        center[0] + radius * sin_theta * phi.cos(),
        center[1] + radius * sin_theta * phi.sin(),
        center[2] + radius * cos_theta,
    ]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn build_sphere_panels(
    center: [f64; 3],
    radius: f64,
    n_target: usize,
    sphere: usize,
    out: &mut Vec<Panel>,
) {
    let sphere_area = FOUR_PI * radius * radius;
    let target_area = sphere_area / n_target as f64;

    // Polar caps sized to one panel each.
    let cos_cap = 1.0 - target_area / (2.0 * std::f64::consts::PI * radius * radius);
    let theta_cap = cos_cap.acos();
    let cap_area = 2.0 * std::f64::consts::PI * radius * radius * (1.0 - cos_cap);
    let disk_radius = (cap_area / std::f64::consts::PI).sqrt();
    for z_sign in [1.0f64, -1.0] {
        // Sub-quadrature: cap center plus a ring at two thirds the cap angle.
        let ring_cos = (2.0 / 3.0 * theta_cap).cos();
        let mut sub_points = vec![[center[0], center[1], center[2] + z_sign * radius]];
        for k in 0..6 {
            let phi = std::f64::consts::PI / 3.0 * k as f64;
            sub_points.push(on_sphere(center, radius, z_sign * ring_cos, phi));
        }
        // Collocation at the exact area centroid of the curved cap; it lies
        // inside the conductor, where the exact potential still equals the
        // boundary value, and the centered kernel evaluation keeps the
        // far-field midpoint rule second-order.
        let z_centroid = radius * (1.0 + cos_cap) / 2.0;
        out.push(Panel {
            center: [center[0], center[1], center[2] + z_sign * z_centroid],
            area: cap_area,
            self_term: disk_radius / 2.0,
            sub_points,
            sub_weights: vec![cap_area / 7.0; 7],
            sphere,
        });
    }

    // Latitude bands between the caps, sector counts keeping panels square.
    let band_span = std::f64::consts::PI - 2.0 * theta_cap;
    let n_bands = (band_span / (target_area.sqrt() / radius)).round().max(1.0) as usize;
    let dtheta = band_span / n_bands as f64;
    for band in 0..n_bands {
        let theta0 = theta_cap + band as f64 * dtheta;
        let theta1 = theta0 + dtheta;
        let z0 = theta0.cos();
        let z1 = theta1.cos();
        let band_area = 2.0 * std::f64::consts::PI * radius * radius * (z0 - z1);
        let sectors = (band_area / target_area).round().max(1.0) as usize;
        let dphi = 2.0 * std::f64::consts::PI / sectors as f64;
        let panel_area = band_area / sectors as f64;
        let z_mid = (0.5 * (z0 + z1)).clamp(-1.0, 1.0);
        let side_theta = radius * dtheta;
        let side_phi = panel_area / side_theta;
        let self_term = rectangle_self_term(side_theta, side_phi);
        // Mean of sin(theta) over the band in the equal-area measure dz;
        // together with the chord factor sin(x)/x of the sector this gives
        // the exact in-plane centroid radius of the curved patch.
        let int_sqrt = |z: f64| 0.5 * (z * (1.0 - z * z).max(0.0).sqrt() + z.asin());
        let mean_sin = (int_sqrt(z0) - int_sqrt(z1)) / (z0 - z1);
        let chord = (dphi / 2.0).sin() / (dphi / 2.0);
        let rho_centroid = radius * mean_sin * chord;
        for s in 0..sectors {
            let phi_mid = (s as f64 + 0.5) * dphi;
            // 3x3 sub-cells, uniform in (z, phi), area-exact weights.
            let mut sub_points = Vec::with_capacity(9);
            for iz in 0..3 {
                let z_sub = z0 + (z1 - z0) * (iz as f64 + 0.5) / 3.0;
                for ip in 0..3 {
                    let phi_sub = phi_mid - dphi / 2.0 + dphi * (ip as f64 + 0.5) / 3.0;
                    sub_points.push(on_sphere(center, radius, z_sub, phi_sub));
                }
            }
            out.push(Panel {
                center: [
                    center[0] + rho_centroid * phi_mid.cos(),
                    center[1] + rho_centroid * phi_mid.sin(),
                    center[2] + radius * z_mid,
                ],
                area: panel_area,
                self_term,
                sub_points,
                sub_weights: vec![panel_area / 9.0; 9],
                sphere,
            });
        }
    }
}

/// Averaged sub-quadrature kernel between two close panels (symmetric by
/// construction), replacing the centroid kernel.
fn near_kernel(p: &Panel, q: &Panel) -> f64 {
    let int_q_at_p: f64 = q
        .sub_points
        .iter()
        .zip(&q.sub_weights)
        .map(|(y, w)| w / (FOUR_PI * dist(p.center, *y)))
        .sum();
    let int_p_at_q: f64 = p
        .sub_points
        .iter()
        .zip(&p.sub_weights)
        .map(|(y, w)| w / (FOUR_PI * dist(q.center, *y)))
        .sum();
    0.5 * (int_q_at_p / q.area + int_p_at_q / p.area)
}

/// Column `driven` of the capacitance matrix for the given spheres: charges
/// on every sphere when sphere `driven` is held at potential 1 and the rest
/// at 0. Returns `(charges, total_panels)`.
pub fn capacitance_column_bem(
    spheres: &[([f64; 3], f64)],
    n_per_sphere: usize,
    driven: usize,
) -> (Vec<f64>, usize) {
    let mut panels: Vec<Panel> = Vec::new();
    for (k, &(center, radius)) in spheres.iter().enumerate() {
        build_sphere_panels(center, radius, n_per_sphere, k, &mut panels);
    }
    let n = panels.len();

    // Near-pair corrections: same-sphere neighbours within a few panel
    // sizes (distinct spheres are far apart at the gaps tested here).
    let max_radius = spheres.iter().map(|s| s.1).fold(0.0f64, f64::max);
    let target_side = (FOUR_PI * max_radius * max_radius / n_per_sphere as f64).sqrt();
    let near_radius = 4.0 * target_side;
    let near: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut row = Vec::new();
            for q in 0..n {
                if q == p || panels[q].sphere != panels[p].sphere {
                    continue;
                }
                let r = dist(panels[p].center, panels[q].center);
                if r < near_radius {
                    let correction = near_kernel(&panels[p], &panels[q]) - 1.0 / (FOUR_PI * r);
                    row.push((q, correction));
                }
            }
            row
        })
        .collect();

    // Self terms by the row-sum identity: a uniform unit density on a
    // sphere of radius R produces exactly the potential R at the centroid,
    // so the panel's own integral is R minus the discrete same-sphere
    // off-diagonal coefficients. This removes the flat-panel self-term
    // model error and makes constant densities exactly consistent.
    let self_terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|p| {
            let sphere = panels[p].sphere;
            let radius = spheres[sphere].1;
            let mut off_sum = 0.0;
            for (q, panel_q) in panels.iter().enumerate() {
                if q == p || panel_q.sphere != sphere {
                    continue;
                }
                off_sum += panel_q.area / (FOUR_PI * dist(panels[p].center, panel_q.center));
            }
            for &(q, correction) in &near[p] {
                off_sum += correction * panels[q].area;
            }
            let self_term = radius - off_sum;
            assert!(
                self_term > 0.0 && self_term < 2.0 * panels[p].self_term.max(radius * 0.1),
                "implausible self term {self_term} (flat model {})",
                panels[p].self_term
            );
            self_term
        })
        .collect();
    let panels: Vec<Panel> = panels
        .into_iter()
        .zip(&self_terms)
        .map(|(mut p, &st)| {
            p.self_term = st;
            p
        })
        .collect();

    // Symmetrized operator M = D^(1/2) K D^(1/2), D = diag(area), solved
    // against D^(1/2) V by Jacobi-preconditioned CG, matrix-free.
    let sqrt_area: Vec<f64> = panels.iter().map(|p| p.area.sqrt()).collect();
    let centers: Vec<[f64; 3]> = panels.iter().map(|p| p.center).collect();
    let apply = |x: &[f64], out: &mut Vec<f64>| {
        let weighted: Vec<f64> = x.iter().zip(&sqrt_area).map(|(xi, s)| xi * s).collect();
        out.clear();
        out.par_extend((0..n).into_par_iter().map(|p| {
            let cp = centers[p];
            let mut acc = panels[p].self_term / panels[p].area * weighted[p];
            for (q, (cq, wq)) in centers.iter().zip(&weighted).enumerate() {
                if q != p {
                    acc += wq / (FOUR_PI * dist(cp, *cq));
                }
            }
            for &(q, correction) in &near[p] {
                acc += correction * weighted[q];
            }
            acc * sqrt_area[p]
        }));
    };

    let rhs: Vec<f64> = panels
        .iter()
        .zip(&sqrt_area)
        .map(|(p, s)| if p.sphere == driven { *s } else { 0.0 })
        .collect();
    let diag: Vec<f64> = panels.iter().map(|p| p.self_term).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p_dir = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let rhs_norm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut ap = Vec::with_capacity(n);
    for _iter in 0..2000 {
        apply(&p_dir, &mut ap);
        let pap: f64 = p_dir.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p_dir[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= 1e-11 * rhs_norm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p_dir[i] = z[i] + beta * p_dir[i];
        }
    }

    let mut charges = vec![0.0; spheres.len()];
    for (i, panel) in panels.iter().enumerate() {
        charges[panel.sphere] += x[i] / sqrt_area[i] * panel.area;
    }
    (charges, n)
}

/// Two equal spheres at center distance `dist_centers`: `(c11, c12, panels)`.
/// The full 2x2 matrix follows by the exchange symmetry.
pub fn two_sphere_capacitance_bem(
    radius: f64,
    dist_centers: f64,
    n_per_sphere: usize,
) -> (f64, f64, usize) {
    let spheres = [
        ([-dist_centers / 2.0, 0.0, 0.0], radius),
        ([dist_centers / 2.0, 0.0, 0.0], radius),
    ];
    let (charges, total) = capacitance_column_bem(&spheres, n_per_sphere, 0);
    (charges[0], charges[1], total)
}

/// Isolated sphere (exact value 4 pi R); sanity anchor for the BEM itself.
pub fn single_sphere_capacitance_bem(radius: f64, n_panels: usize) -> f64 {
    let spheres = [([0.0, 0.0, 0.0], radius)];
    let (charges, _) = capacitance_column_bem(&spheres, n_panels, 0);
    charges[0]
}
