//! Unitary-orbit geometry: word-trace equivalence, orbit distance and the
//! spectral Wasserstein distance.

mod measure;
mod orbit;
mod specht;

pub use measure::{wasserstein_spectral, SpectralMeasure, MASS_TOL};
pub use orbit::{psi_distance, psi_distance_plain, spectral_oracle, wasserstein_matrix, OrbitDistance};
pub use specht::{
    cubic_mismatch_fixture, specht_equivalent, specht_equivalent_with, SpechtReport, SpechtVerdict, WordMismatch,
    MISMATCH_TOL,
};
