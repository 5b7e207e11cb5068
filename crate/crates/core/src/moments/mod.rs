//! Moment vectors, non-crossing partitions and free cumulants: the exact
//! oracles for free independence.

mod cumulants;
mod laws;
mod nc;
mod table;

pub use cumulants::{cumulants_to_moments, free_convolve, free_product_moments, moments_to_cumulants};
pub use laws::{reference_law, reference_law_by_name, ReferenceLaw};
pub use nc::{catalan_numbers, enumerate_nc, NonCrossingPartition, NC_MAX_N};
pub use table::{CumulantVector, MomentVector, DEFAULT_MAX_LEN, FILE_INVARIANT_TOL, MAX_LEN_CAP};
