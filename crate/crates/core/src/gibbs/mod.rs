//! Matrix Gibbs measures `∝ e^{−n² V}`: potentials, a Langevin sampler, the
//! quartic Dyson–Schwinger oracle and the discrete Hopf–Lax semigroup.

mod dyson;
mod hopf_lax;
mod langevin;
mod potential;

pub use dyson::{dyson_schwinger_quartic, QuarticLaw, MAX_COUPLING};
pub use hopf_lax::{
    hopf_lax_iterate, hopf_lax_step, quadratic_closed_form, quadratic_iterated_closed_form, tree_branching,
    HopfLaxConfig, HopfLaxSequence, HopfLaxValue, HopfLaxVariant,
};
pub use langevin::{
    default_step, langevin_step, max_step, sample_gibbs_moments, GibbsConfig, GibbsMoments, LangevinState,
    WordEstimate, GRADIENT_CHECK_TOL, TARGET_BIAS,
};
pub use potential::{Bounds, Potential};
