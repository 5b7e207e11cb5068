//! Simulation experiments: asymptotic freeness under Haar conjugation, free
//! convolution, entropy additivity of joined specs and orbit-separated
//! pairs with matching moments.

mod additivity;
mod base;
mod separation;
mod haar;

pub use additivity::{
    entropy_additivity_experiment, joint_spec, AdditivityConfig, AdditivityReport, AdditivityRow,
};
pub use base::{measure_quantiles, realize_tuple, BaseSpec};
pub use separation::{
    orbit_separation_experiment, ConfigurationSummary, SeparationConfig, SeparationReport, OrbitFixture, FIXTURE_TOL,
};
pub use haar::{
    asymptotic_freeness_experiment, free_convolution_experiment, ConvolutionConfig, ConvolutionReport,
    FreenessConfig, FreenessReport, FreenessRow, CONJUGATION_TOL,
};
