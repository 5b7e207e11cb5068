//! Complex matrices under the normalized trace, random ensembles, and the
//! decompositions the rest of the crate builds on.

mod dense;
mod ensembles;
mod rng;
mod spectral;
mod tuple;

pub use dense::{ComplexMatrix, HERMITIAN_TOL};
pub use ensembles::{
    coordinate_gaussian_log_density, ginibre_matrix, sample_coordinate_gaussian, sample_ginibre, sample_gue,
    sample_haar_unitary, MatrixDomain,
};
pub use rng::RngStream;
pub use spectral::{
    clip_singular_values, hermitian_eigen, hermitian_eigenvalues, normalized_trace_norm, operator_norm, reunitarize,
    singular_values, unitary_from_hermitian, OPNORM_REL_TOL,
};
pub use tuple::MatrixTuple;

pub use num_complex::Complex64;
