//! Numerical kernels shared by the beam designers and the analytic bounds.

mod complex;
pub mod gamma;
pub mod quad;
mod rayleigh;
mod svd;

pub use complex::{ComplexMat, ComplexVec};
pub use gamma::{exp_integral_e1, upper_incomplete_gamma};
pub use rayleigh::{dominant_rayleigh_vector, Cholesky};
pub use svd::{right_singular_pairs, smallest_right_singular_vector, weakest_subspace, RightSingular};
