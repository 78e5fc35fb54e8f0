//! Independent reference computations and random instances for testing.
//!
//! Nothing here shares elimination code with [`crate::boxes`]: the dense
//! diagonalization works on a full matrix with symmetric pivoting, and the
//! determinant is recomputed by fraction-free elimination over the integers.

mod bareiss;
mod dense;
mod generate;
mod replay;

pub use bareiss::{bareiss_determinant, integer_determinant};
pub use dense::{dense_congruent_diagonalize, DenseDiagonalization, DenseSymmetric};
pub use generate::{
    random_decomposition, random_instance, random_instance_with, random_real_instance, Instance, InstanceConfig,
};
pub use replay::{replay_trace, verify_replay, ReplayError};
