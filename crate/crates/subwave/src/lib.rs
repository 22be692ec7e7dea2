//! Capacitance matrices, subwavelength resonant spectra, and landscape
//! bounds for arrays of spherical resonators.
//!
//! The crate models systems of high-contrast spherical scatterers whose
//! low-frequency resonances are governed by an `N x N` capacitance matrix.
//! It provides:
//!
//! - configuration generators for random planar, random volumetric and
//!   defect-lattice arrays ([`geometry`]);
//! - a spherical-harmonic boundary solver for the capacitance matrix and its
//!   row-scaled generalisation ([`capacitance`]);
//! - the resonant spectrum and leading-order resonant frequencies
//!   ([`spectral`]);
//! - landscape and upper-landscape vectors that bound every eigenvector
//!   entrywise and predict where modes focus ([`landscape`]);
//! - reconstruction of the resonant modes on planar slices ([`field`]);
//! - CSV/JSON/SVG export and reproducible run manifests ([`export`],
//!   [`manifest`]), wired together by the `subwave` binary.

pub mod capacitance;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod landscape;
pub mod manifest;
pub mod spectral;
pub mod sphharm;
pub mod verify;

pub use capacitance::{
    capacitance_matrix, generalized_capacitance, solve_densities, two_sphere_capacitance_series,
    CapMatrix, DensitySet, GenCapMatrix, SolverOptions,
};
pub use error::{Error, Result};
pub use geometry::{
    gen_lattice_defect, gen_random_cube, gen_random_planar, Configuration, GeneratorOptions,
    Sphere, Violation,
};
pub use field::{eval_mode, eval_potential, FieldSlice, PixelMask, PlaneSpec};
pub use landscape::{
    comparison_matrix, landscape, landscape_generalized, landscape_vector, predict_focus_sites,
    upper_landscape, verify_inequalities, Bound, FocusPrediction, Landscape, SlackReport,
};
pub use manifest::RunManifest;
pub use spectral::{
    eigendecompose, eigendecompose_generalized, resonant_frequencies, ResonantFrequencies,
    Source, Spectrum,
};
