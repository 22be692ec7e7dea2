//! Reconstruction of leading-order resonant modes on planar slices.
//!
//! The mode with eigenvector `v` is, at leading order, the single layer
//! potential of the combined density `sum_j v_j psi_j`. On each sphere's
//! boundary it takes the constant value `v_j`; away from the spheres it is a
//! smooth harmonic field decaying like `1/|x|`. Points inside spheres use the
//! interior harmonic continuation, so evaluation is total on the slice and
//! the potential is continuous across every boundary (on-surface pixels see
//! the shared limit).

use rayon::prelude::*;
use serde::Serialize;

use crate::capacitance::DensitySet;
use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::spectral::Spectrum;

/// Default pixels per axis for slices.
pub const DEFAULT_RESOLUTION: usize = 400;

/// Margin factor applied when auto-fitting a slice to a configuration.
pub const AUTO_FIT_MARGIN: f64 = 0.2;

/// A planar sampling window: origin, two orthonormal in-plane axes, half
/// extents and per-axis resolution.
#[derive(Debug, Clone, Serialize)]
pub struct PlaneSpec {
    pub origin: [f64; 3],
    pub axis_u: [f64; 3],
    pub axis_v: [f64; 3],
    pub half_extent_u: f64,
    pub half_extent_v: f64,
    pub res_u: usize,
    pub res_v: usize,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl PlaneSpec {
    /// Validate and normalize: axes must be nonzero, non-parallel, and are
    /// orthonormalized (Gram-Schmidt on `axis_v` against `axis_u`).
    pub fn new(
        origin: [f64; 3],
        axis_u: [f64; 3],
        axis_v: [f64; 3],
        half_extent_u: f64,
        half_extent_v: f64,
        res_u: usize,
        res_v: usize,
    ) -> Result<Self> {
        if !(half_extent_u > 0.0) || !(half_extent_v > 0.0) {
            return Err(Error::InvalidPlane("half extents must be positive".into()));
        }
        if res_u < 2 || res_v < 2 {
            return Err(Error::InvalidPlane(
                "resolution must be at least 2 per axis".into(),
            ));
        }
        let nu = norm(axis_u);
        if nu == 0.0 {
            return Err(Error::InvalidPlane("axis_u must be nonzero".into()));
        }
        let u = [axis_u[0] / nu, axis_u[1] / nu, axis_u[2] / nu];
        let proj = dot(axis_v, u);
        let mut v = [
            axis_v[0] - proj * u[0],
            axis_v[1] - proj * u[1],
            axis_v[2] - proj * u[2],
        ];
        let nv = norm(v);
        if nv < 1e-12 * norm(axis_v).max(1.0) {
            return Err(Error::InvalidPlane(
                "axis_v is parallel to axis_u".into(),
            ));
        }
        v = [v[0] / nv, v[1] / nv, v[2] / nv];
        Ok(Self {
            origin,
            axis_u: u,
            axis_v: v,
            half_extent_u,
            half_extent_v,
            res_u,
            res_v,
        })
    }

    /// The z = 0 plane fitted to a configuration: square window covering
    /// every sphere's projection with a 20% margin.
    pub fn auto_z0(config: &Configuration, resolution: usize) -> Result<Self> {
        let mut extent = 0.0f64;
        for s in &config.spheres {
            extent = extent
                .max(s.center[0].abs() + s.radius)
                .max(s.center[1].abs() + s.radius);
        }
        if extent == 0.0 {
            extent = 1.0;
        }
        extent *= 1.0 + AUTO_FIT_MARGIN;
        Self::new(
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            extent,
            extent,
            resolution,
            resolution,
        )
    }

    /// World coordinates of pixel centers; `iu` runs along `axis_u`,
    /// `iv` along `axis_v`, both from the negative extent upward.
    pub fn pixel_point(&self, iu: usize, iv: usize) -> [f64; 3] {
        let du = 2.0 * self.half_extent_u / self.res_u as f64;
        let dv = 2.0 * self.half_extent_v / self.res_v as f64;
        let cu = -self.half_extent_u + (iu as f64 + 0.5) * du;
        let cv = -self.half_extent_v + (iv as f64 + 0.5) * dv;
        [
            self.origin[0] + cu * self.axis_u[0] + cv * self.axis_v[0],
            self.origin[1] + cu * self.axis_u[1] + cv * self.axis_v[1],
            self.origin[2] + cu * self.axis_u[2] + cv * self.axis_v[2],
        ]
    }
}

/// Per-pixel region flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PixelMask {
    Exterior,
    /// Strictly inside sphere `k` (0-based).
    Interior(usize),
}

/// Sampled mode values on a plane, row `iv`, column `iu`.
#[derive(Debug, Clone)]
pub struct FieldSlice {
    pub plane: PlaneSpec,
    /// Row-major values, `values[iv * res_u + iu]`.
    pub values: Vec<f64>,
    pub mask: Vec<PixelMask>,
    /// 1-based mode index the slice was built for, if any.
    pub mode_index: Option<usize>,
}

impl FieldSlice {
    pub fn value(&self, iu: usize, iv: usize) -> f64 {
        self.values[iv * self.plane.res_u + iu]
    }

    pub fn mask_at(&self, iu: usize, iv: usize) -> PixelMask {
        self.mask[iv * self.plane.res_u + iu]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Single layer potential of the density for source sphere `j` at a point.
pub fn eval_potential(densities: &DensitySet, source_j: usize, x: [f64; 3]) -> f64 {
    densities.potential(source_j, x)
}

/// Sample mode `n` (1-based, ascending eigenvalues) on a plane.
pub fn eval_mode(
    spectrum: &Spectrum,
    densities: &DensitySet,
    config: &Configuration,
    n: usize,
    plane: &PlaneSpec,
) -> Result<FieldSlice> {
    if n == 0 || n > spectrum.n() {
        return Err(Error::ModeIndexOutOfRange {
            n,
            count: spectrum.n(),
        });
    }
    if spectrum.n() != densities.sphere_count() || config.len() != densities.sphere_count() {
        return Err(Error::SourceMismatch(format!(
            "spectrum ({} modes), densities ({} spheres) and configuration ({} spheres) disagree",
            spectrum.n(),
            densities.sphere_count(),
            config.len()
        )));
    }
    let weights: Vec<f64> = spectrum.eigenvectors.column(n - 1).iter().copied().collect();
    let mode = densities.combine(&weights);
    let pixels = plane.res_u * plane.res_v;
    let mut values = vec![0.0f64; pixels];
    let mut mask = vec![PixelMask::Exterior; pixels];
    values
        .par_chunks_mut(plane.res_u)
        .zip(mask.par_chunks_mut(plane.res_u))
        .enumerate()
        .for_each(|(iv, (row_values, row_mask))| {
            let mut scratch = mode.new_scratch();
            for iu in 0..plane.res_u {
                let x = plane.pixel_point(iu, iv);
                row_values[iu] = mode.potential_with(x, &mut scratch);
                for (k, s) in config.spheres.iter().enumerate() {
                    let d = [
                        x[0] - s.center[0],
                        x[1] - s.center[1],
                        x[2] - s.center[2],
                    ];
                    if dot(d, d) < s.radius * s.radius {
                        row_mask[iu] = PixelMask::Interior(k);
                        break;
                    }
                }
            }
        });
    Ok(FieldSlice {
        plane: plane.clone(),
        values,
        mask,
        mode_index: Some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacitance::{capacitance_matrix, solve_densities, two_sphere_config};
    use crate::geometry::{gen_random_planar, GeneratorOptions, Sphere};
    use crate::spectral::eigendecompose;
    use approx::assert_relative_eq;

    fn single_sphere_config(radius: f64) -> Configuration {
        Configuration {
            background_speed: 1.0,
            contrast: 1e-3,
            min_gap: 0.0,
            spheres: vec![Sphere::new([0.0, 0.0, 0.0], radius, 1.0)],
        }
    }

    #[test]
    fn potential_on_own_surface_is_one() {
        let config = single_sphere_config(1.5);
        let densities = solve_densities(&config, 4).unwrap();
        let x = [1.5, 0.0, 0.0];
        assert_relative_eq!(
            eval_potential(&densities, 0, x),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn monopole_decay_at_twice_radius() {
        let radius = 1.25;
        let config = single_sphere_config(radius);
        let densities = solve_densities(&config, 4).unwrap();
        let x = [0.0, 2.0 * radius, 0.0];
        assert_relative_eq!(
            eval_potential(&densities, 0, x),
            0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn potential_vanishes_on_other_surface() {
        let config = two_sphere_config(1.0, 4.0);
        let densities = solve_densities(&config, 8).unwrap();
        // Surface points of the non-source sphere.
        for dir in crate::sphharm::fibonacci_directions(16) {
            let x = [
                config.spheres[1].center[0] + dir[0],
                config.spheres[1].center[1] + dir[1],
                config.spheres[1].center[2] + dir[2],
            ];
            let value = eval_potential(&densities, 0, x);
            assert!(
                value.abs() < 2e-6,
                "potential {value} on the non-source sphere should vanish within truncation"
            );
        }
    }

    #[test]
    fn mode_value_near_sphere_matches_eigenvector_entry() {
        let config =
            gen_random_planar(5, 1.0, 6.0, 13, 0.5, &GeneratorOptions::default()).unwrap();
        let densities = solve_densities(&config, 8).unwrap();
        let cap = capacitance_matrix(&config, 8).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let n = spectrum.n(); // top mode
        let weights: Vec<f64> = spectrum.eigenvectors.column(n - 1).iter().copied().collect();
        let mode = densities.combine(&weights);
        let tolerance = 10.0 * cap.residual.max(1e-9);
        for (k, s) in config.spheres.iter().enumerate() {
            let x = [s.center[0] + s.radius, s.center[1], s.center[2]];
            let value = mode.potential(x);
            assert!(
                (value - weights[k]).abs() <= tolerance,
                "sphere {k}: field {value} vs eigenvector {} (tol {tolerance})",
                weights[k]
            );
        }
    }

    #[test]
    fn far_field_decays_like_inverse_distance() {
        let config = single_sphere_config(1.0);
        let densities = solve_densities(&config, 3).unwrap();
        let v100 = eval_potential(&densities, 0, [100.0, 0.0, 0.0]);
        let v200 = eval_potential(&densities, 0, [200.0, 0.0, 0.0]);
        assert_relative_eq!(v100 / v200, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn slice_linearity_in_the_eigenvector() {
        let config = two_sphere_config(1.0, 4.0);
        let densities = solve_densities(&config, 4).unwrap();
        let weights = vec![0.3, -0.7];
        let scaled: Vec<f64> = weights.iter().map(|w| 2.5 * w).collect();
        let a = densities.combine(&weights);
        let b = densities.combine(&scaled);
        for x in [[0.0, 0.3, 1.9], [3.0, -1.0, 0.4], [1.0, 0.0, 0.0]] {
            assert_relative_eq!(2.5 * a.potential(x), b.potential(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn slice_geometry_and_mask() {
        let config = two_sphere_config(1.0, 4.0);
        let densities = solve_densities(&config, 4).unwrap();
        let cap = capacitance_matrix(&config, 4).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let plane = PlaneSpec::auto_z0(&config, 40).unwrap();
        let slice = eval_mode(&spectrum, &densities, &config, 1, &plane).unwrap();
        assert_eq!(slice.values.len(), 40 * 40);
        assert!(slice.values.iter().all(|v| v.is_finite()));
        // Pixels at sphere centers are interior; far corners are exterior.
        let center_px = {
            let du = 2.0 * plane.half_extent_u / 40.0;
            let iu = ((config.spheres[0].center[0] + plane.half_extent_u) / du) as usize;
            let iv = ((0.0 + plane.half_extent_v) / du) as usize;
            slice.mask_at(iu, iv)
        };
        assert_eq!(center_px, PixelMask::Interior(0));
        assert_eq!(slice.mask_at(0, 0), PixelMask::Exterior);
    }

    #[test]
    fn plane_axes_are_orthonormalized() {
        let plane = PlaneSpec::new(
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            5.0,
            5.0,
            10,
            10,
        )
        .unwrap();
        assert_relative_eq!(norm(plane.axis_u), 1.0, max_relative = 1e-14);
        assert_relative_eq!(norm(plane.axis_v), 1.0, max_relative = 1e-14);
        assert!(dot(plane.axis_u, plane.axis_v).abs() < 1e-14);
        assert!(PlaneSpec::new(
            [0.0; 3],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            1.0,
            1.0,
            4,
            4
        )
        .is_err());
    }

    #[test]
    fn mode_index_bounds_checked() {
        let config = single_sphere_config(1.0);
        let densities = solve_densities(&config, 2).unwrap();
        let cap = capacitance_matrix(&config, 2).unwrap();
        let spectrum = eigendecompose(&cap).unwrap();
        let plane = PlaneSpec::auto_z0(&config, 8).unwrap();
        assert!(eval_mode(&spectrum, &densities, &config, 0, &plane).is_err());
        assert!(eval_mode(&spectrum, &densities, &config, 2, &plane).is_err());
        assert!(eval_mode(&spectrum, &densities, &config, 1, &plane).is_ok());
    }
}
