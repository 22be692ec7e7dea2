//! Resonator configurations and the random/lattice generators behind the
//! experiment families.
//!
//! All generators are pure functions of their parameters and seed. Randomness
//! comes from `ChaCha8` keyed with `seed_from_u64(seed)`; the planar generator
//! draws from stream 1 and the cube generator from stream 2, so the two
//! families never share a sample sequence even for equal seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default resample budget before a generator gives up on the gap constraint.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100_000;

/// Default contrast between resonator and background material (air in water).
pub const DEFAULT_CONTRAST: f64 = 1e-3;

/// Default clearance between sphere surfaces, in units of the radius.
/// Keeps the multipole solver inside its accurate regime.
pub const DEFAULT_MIN_GAP_FACTOR: f64 = 0.5;

/// Default lattice spacing in units of the radius.
pub const DEFAULT_LATTICE_SPACING_FACTOR: f64 = 5.0;

const PLANAR_STREAM: u64 = 1;
const CUBE_STREAM: u64 = 2;

/// One spherical resonator: center, radius and interior wave speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub wave_speed: f64,
}

impl Sphere {
    pub fn new(center: [f64; 3], radius: f64, wave_speed: f64) -> Self {
        Self {
            center,
            radius,
            wave_speed,
        }
    }

    /// Volume of the ball, 4/3 pi r^3.
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }

    pub fn distance_to(&self, other: &Sphere) -> f64 {
        let dx = self.center[0] - other.center[0];
        let dy = self.center[1] - other.center[1];
        let dz = self.center[2] - other.center[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// A full resonator system: ordered spheres plus background material data.
///
/// The JSON serialization (field names as written here) is the on-disk
/// interchange format consumed by the CLI and all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub background_speed: f64,
    pub contrast: f64,
    pub min_gap: f64,
    pub spheres: Vec<Sphere>,
}

/// One validation failure, naming the offending field or pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    EmptyConfiguration,
    NonPositiveRadius { index: usize, radius: f64 },
    NonPositiveWaveSpeed { index: usize, wave_speed: f64 },
    NonFiniteCenter { index: usize },
    NonPositiveBackgroundSpeed { value: f64 },
    NonPositiveContrast { value: f64 },
    NegativeMinGap { value: f64 },
    Overlap { i: usize, j: usize, distance: f64, required: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyConfiguration => write!(f, "configuration has no spheres"),
            Violation::NonPositiveRadius { index, radius } => {
                write!(f, "sphere {index}: radius {radius} must be positive")
            }
            Violation::NonPositiveWaveSpeed { index, wave_speed } => {
                write!(f, "sphere {index}: wave speed {wave_speed} must be positive")
            }
            Violation::NonFiniteCenter { index } => {
                write!(f, "sphere {index}: center has non-finite component")
            }
            Violation::NonPositiveBackgroundSpeed { value } => {
                write!(f, "background speed {value} must be positive")
            }
            Violation::NonPositiveContrast { value } => {
                write!(f, "contrast {value} must be positive")
            }
            Violation::NegativeMinGap { value } => {
                write!(f, "min gap {value} must be non-negative")
            }
            Violation::Overlap {
                i,
                j,
                distance,
                required,
            } => write!(
                f,
                "spheres {i} and {j}: center distance {distance:.6} below required {required:.6}"
            ),
        }
    }
}

impl Configuration {
    /// Number of resonators.
    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    /// Check every invariant; the list is empty iff the configuration is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if self.spheres.is_empty() {
            violations.push(Violation::EmptyConfiguration);
        }
        if !(self.background_speed > 0.0) {
            violations.push(Violation::NonPositiveBackgroundSpeed {
                value: self.background_speed,
            });
        }
        if !(self.contrast > 0.0) {
            violations.push(Violation::NonPositiveContrast {
                value: self.contrast,
            });
        }
        if !(self.min_gap >= 0.0) {
            violations.push(Violation::NegativeMinGap { value: self.min_gap });
        }
        for (index, s) in self.spheres.iter().enumerate() {
            if !(s.radius > 0.0) {
                violations.push(Violation::NonPositiveRadius {
                    index,
                    radius: s.radius,
                });
            }
            if !(s.wave_speed > 0.0) {
                violations.push(Violation::NonPositiveWaveSpeed {
                    index,
                    wave_speed: s.wave_speed,
                });
            }
            if s.center.iter().any(|c| !c.is_finite()) {
                violations.push(Violation::NonFiniteCenter { index });
            }
        }
        for i in 0..self.spheres.len() {
            for j in (i + 1)..self.spheres.len() {
                let required = self.spheres[i].radius + self.spheres[j].radius + self.min_gap;
                let distance = self.spheres[i].distance_to(&self.spheres[j]);
                if distance < required {
                    violations.push(Violation::Overlap {
                        i,
                        j,
                        distance,
                        required,
                    });
                }
            }
        }
        violations
    }

    /// Validate and wrap violations in an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations))
        }
    }

    /// True when every resonator has the same radius and wave speed, so the
    /// plain capacitance matrix determines the spectrum up to a common factor.
    pub fn identical_resonators(&self) -> bool {
        match self.spheres.split_first() {
            None => true,
            Some((first, rest)) => rest
                .iter()
                .all(|s| s.radius == first.radius && s.wave_speed == first.wave_speed),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Parameters shared by the random generators.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorOptions {
    pub background_speed: f64,
    pub contrast: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            background_speed: 1.0,
            contrast: DEFAULT_CONTRAST,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// `n` equal spheres with centers on the plane z = 0, the x and y coordinates
/// drawn i.i.d. from a centered normal with the given standard deviation.
///
/// A sphere violating the pairwise gap against already-placed spheres is
/// redrawn (only that sphere), counting against the attempt budget.
pub fn gen_random_planar(
    n: usize,
    radius: f64,
    std_dev: f64,
    seed: u64,
    min_gap: f64,
    options: &GeneratorOptions,
) -> Result<Configuration> {
    if n < 1 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!(
            "radius {radius} must be positive"
        )));
    }
    if !(std_dev > 0.0) {
        return Err(Error::InvalidParams(format!(
            "std_dev {std_dev} must be positive"
        )));
    }
    if !(min_gap >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "min_gap {min_gap} must be non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PLANAR_STREAM);
    let normal = Normal::new(0.0, std_dev).expect("std_dev checked positive");
    let draw = |rng: &mut ChaCha8Rng| {
        let x = normal.sample(rng);
        let y = normal.sample(rng);
        [x, y, 0.0]
    };
    place_with_rejection(n, radius, min_gap, options, &mut rng, draw)
}

/// `n` equal spheres with centers i.i.d. uniform over an axis-aligned cube of
/// the given side, centered at the origin.
pub fn gen_random_cube(
    n: usize,
    radius: f64,
    side: f64,
    seed: u64,
    min_gap: f64,
    options: &GeneratorOptions,
) -> Result<Configuration> {
    if n < 1 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!(
            "radius {radius} must be positive"
        )));
    }
    if !(side > 2.0 * radius) {
        return Err(Error::InvalidParams(format!(
            "side {side} must exceed the sphere diameter {}",
            2.0 * radius
        )));
    }
    if !(min_gap >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "min_gap {min_gap} must be non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CUBE_STREAM);
    let half = side / 2.0;
    let draw = |rng: &mut ChaCha8Rng| {
        let x = rng.gen_range(-half..half);
        let y = rng.gen_range(-half..half);
        let z = rng.gen_range(-half..half);
        [x, y, z]
    };
    place_with_rejection(n, radius, min_gap, options, &mut rng, draw)
}

fn place_with_rejection(
    n: usize,
    radius: f64,
    min_gap: f64,
    options: &GeneratorOptions,
    rng: &mut ChaCha8Rng,
    draw: impl Fn(&mut ChaCha8Rng) -> [f64; 3],
) -> Result<Configuration> {
    let required = 2.0 * radius + min_gap;
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while centers.len() < n {
        if attempts >= options.max_attempts {
            return Err(Error::PackingInfeasible { attempts });
        }
        attempts += 1;
        let candidate = draw(rng);
        let clashes = centers.iter().any(|c| {
            let dx = c[0] - candidate[0];
            let dy = c[1] - candidate[1];
            let dz = c[2] - candidate[2];
            (dx * dx + dy * dy + dz * dz).sqrt() < required
        });
        if !clashes {
            centers.push(candidate);
        }
    }
    let spheres = centers
        .into_iter()
        .map(|center| Sphere::new(center, radius, options.background_speed))
        .collect();
    Ok(Configuration {
        background_speed: options.background_speed,
        contrast: options.contrast,
        min_gap,
        spheres,
    })
}

/// `rows x cols` equal spheres on a square lattice in the z = 0 plane,
/// centered at the origin, with the central sphere's wave speed scaled by
/// `defect_speed_factor`. Odd `rows` and `cols` are required so a central
/// site exists.
pub fn gen_lattice_defect(
    rows: usize,
    cols: usize,
    spacing: f64,
    radius: f64,
    defect_speed_factor: f64,
    options: &GeneratorOptions,
) -> Result<Configuration> {
    if rows == 0 || cols == 0 || rows % 2 == 0 || cols % 2 == 0 {
        return Err(Error::InvalidParams(format!(
            "rows ({rows}) and cols ({cols}) must be odd so a central site exists"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!(
            "radius {radius} must be positive"
        )));
    }
    if !(spacing > 2.0 * radius) {
        return Err(Error::InvalidParams(format!(
            "spacing {spacing} must exceed the sphere diameter {}",
            2.0 * radius
        )));
    }
    if !(defect_speed_factor > 0.0) {
        return Err(Error::InvalidParams(format!(
            "defect_speed_factor {defect_speed_factor} must be positive"
        )));
    }
    let center_row = rows / 2;
    let center_col = cols / 2;
    let row_offset = (rows as f64 - 1.0) / 2.0;
    let col_offset = (cols as f64 - 1.0) / 2.0;
    let mut spheres = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = spacing * (c as f64 - col_offset);
            let y = spacing * (r as f64 - row_offset);
            let speed = if r == center_row && c == center_col {
                defect_speed_factor * options.background_speed
            } else {
                options.background_speed
            };
            spheres.push(Sphere::new([x, y, 0.0], radius, speed));
        }
    }
    // The lattice gap is spacing - 2 radius by construction; record the
    // standard clearance so validate() stays meaningful.
    let min_gap = (spacing - 2.0 * radius).min(DEFAULT_MIN_GAP_FACTOR * radius);
    Ok(Configuration {
        background_speed: options.background_speed,
        contrast: options.contrast,
        min_gap,
        spheres,
    })
}

/// Index of the central lattice site (row-major), for `gen_lattice_defect`.
pub fn lattice_center_index(rows: usize, cols: usize) -> usize {
    (rows / 2) * cols + cols / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> GeneratorOptions {
        GeneratorOptions::default()
    }

    #[test]
    fn planar_matches_request_and_validates() {
        let config = gen_random_planar(15, 1.0, 10.0, 7, 0.5, &opts()).unwrap();
        assert_eq!(config.len(), 15);
        assert!(config.validate().is_empty());
        for s in &config.spheres {
            assert_eq!(s.center[2], 0.0);
            assert_eq!(s.radius, 1.0);
        }
    }

    #[test]
    fn planar_single_sphere_is_trivially_valid() {
        let config = gen_random_planar(1, 1.0, 10.0, 0, 0.5, &opts()).unwrap();
        assert_eq!(config.len(), 1);
        assert!(config.validate().is_empty());
    }

    #[test]
    fn planar_tight_std_dev_gap_or_error() {
        // Nearly coincident draws: either the rejection loop eventually finds
        // a valid pair or the attempt budget trips. Both outcomes are legal;
        // an invalid configuration is not.
        for seed in 0..8 {
            match gen_random_planar(2, 1.0, 0.01, seed, 0.5, &opts()) {
                Ok(config) => assert!(config.validate().is_empty()),
                Err(Error::PackingInfeasible { attempts }) => {
                    assert!(attempts >= DEFAULT_MAX_ATTEMPTS)
                }
                Err(other) => panic!("unexpected error: {other}"),
            }
        }
    }

    #[test]
    fn planar_deterministic_for_fixed_seed() {
        let a = gen_random_planar(10, 1.0, 10.0, 42, 0.5, &opts()).unwrap();
        let b = gen_random_planar(10, 1.0, 10.0, 42, 0.5, &opts()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = gen_random_planar(10, 1.0, 10.0, 43, 0.5, &opts()).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn planar_and_cube_streams_differ() {
        let planar = gen_random_planar(3, 1.0, 10.0, 5, 0.0, &opts()).unwrap();
        let cube = gen_random_cube(3, 1.0, 60.0, 5, 0.0, &opts()).unwrap();
        assert_ne!(planar.spheres[0].center[0], cube.spheres[0].center[0]);
    }

    #[test]
    fn cube_matches_request_and_validates() {
        let config = gen_random_cube(20, 1.0, 20.0, 3, 0.5, &opts()).unwrap();
        assert_eq!(config.len(), 20);
        assert!(config.validate().is_empty());
        for s in &config.spheres {
            for c in s.center {
                assert!(c.abs() <= 10.0);
            }
        }
    }

    #[test]
    fn cube_overpacked_errors() {
        // 30 unit spheres with pairwise distance >= 2.5 cannot fit in a
        // side-6 cube; the attempt budget must trip.
        let result = gen_random_cube(30, 1.0, 6.0, 1, 0.5, &opts());
        assert!(matches!(result, Err(Error::PackingInfeasible { .. })));
    }

    #[test]
    fn cube_requires_side_larger_than_diameter() {
        assert!(matches!(
            gen_random_cube(1, 1.0, 1.5, 0, 0.0, &opts()),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn lattice_defect_scales_central_speed_only() {
        let config = gen_lattice_defect(5, 5, 5.0, 1.0, 2.0, &opts()).unwrap();
        assert_eq!(config.len(), 25);
        assert!(config.validate().is_empty());
        let center = lattice_center_index(5, 5);
        for (i, s) in config.spheres.iter().enumerate() {
            if i == center {
                assert_eq!(s.wave_speed, 2.0 * config.background_speed);
            } else {
                assert_eq!(s.wave_speed, config.background_speed);
            }
        }
    }

    #[test]
    fn lattice_3x3_center_is_row_major_index_4() {
        // 1-based row-major index 5, zero-based 4.
        assert_eq!(lattice_center_index(3, 3), 4);
        let config = gen_lattice_defect(3, 3, 5.0, 1.0, 2.0, &opts()).unwrap();
        let differing: Vec<usize> = config
            .spheres
            .iter()
            .enumerate()
            .filter(|(_, s)| s.wave_speed != config.background_speed)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(differing, vec![4]);
    }

    #[test]
    fn lattice_unit_factor_is_uniform() {
        let config = gen_lattice_defect(3, 5, 5.0, 1.0, 1.0, &opts()).unwrap();
        assert!(config
            .spheres
            .iter()
            .all(|s| s.wave_speed == config.background_speed));
        assert!(config.identical_resonators());
    }

    #[test]
    fn lattice_rejects_even_dimensions() {
        assert!(gen_lattice_defect(4, 5, 5.0, 1.0, 2.0, &opts()).is_err());
        assert!(gen_lattice_defect(5, 2, 5.0, 1.0, 2.0, &opts()).is_err());
    }

    #[test]
    fn lattice_single_site() {
        let config = gen_lattice_defect(1, 1, 5.0, 1.0, 1.0, &opts()).unwrap();
        assert_eq!(config.len(), 1);
        assert_eq!(config.spheres[0].center, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn validate_reports_named_violations() {
        let ok = Configuration {
            background_speed: 1.0,
            contrast: 1e-3,
            min_gap: 0.0,
            spheres: vec![
                Sphere::new([0.0, 0.0, 0.0], 1.0, 1.0),
                Sphere::new([4.0, 0.0, 0.0], 1.0, 1.0),
            ],
        };
        assert!(ok.validate().is_empty());

        let overlapping = Configuration {
            spheres: vec![
                Sphere::new([0.0, 0.0, 0.0], 1.0, 1.0),
                Sphere::new([1.5, 0.0, 0.0], 1.0, 1.0),
            ],
            ..ok.clone()
        };
        let violations = overlapping.validate();
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::Overlap { i: 0, j: 1, .. }));

        let bad_radius = Configuration {
            spheres: vec![Sphere::new([0.0, 0.0, 0.0], -1.0, 1.0)],
            ..ok
        };
        assert!(bad_radius
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveRadius { index: 0, .. })));
    }

    #[test]
    fn json_round_trip_preserves_configuration() {
        let config = gen_random_cube(5, 1.0, 20.0, 9, 0.5, &opts()).unwrap();
        let json = config.to_json().unwrap();
        let back = Configuration::from_json(&json).unwrap();
        assert_eq!(config, back);
        // Field names are part of the interchange contract.
        assert!(json.contains("\"background_speed\""));
        assert!(json.contains("\"contrast\""));
        assert!(json.contains("\"min_gap\""));
        assert!(json.contains("\"spheres\""));
        assert!(json.contains("\"center\""));
        assert!(json.contains("\"radius\""));
        assert!(json.contains("\"wave_speed\""));
    }
}
