//! Construction and verification of simulator functions on explicit finite
//! domains. The toolkit builds simulators that are indistinguishable from a
//! target kernel against a family of bounded distinguishers while satisfying
//! weight-restricted calibration against a family of weight functions, via
//! multiplicative-weights boosting, and exposes the entropy-comparison,
//! divergence-comparison, and lower-bound constructions built on top of them
//! as executable checks.

pub mod characterize;
pub mod entropy;
pub mod error;
pub mod generators;
pub mod lowerbound;
pub mod mirror;
pub mod regularity;
pub mod seeding;
pub mod simplex;
pub mod uniform;

pub use entropy::{
    bregman_divergence, entropy, fenchel_young, gap_identity_residual, kernel_bregman_divergence,
    sigma_transform, subgradient_weight, EntropyNotion, WeightFunction,
};
pub use error::{Error, Result};
pub use simplex::{
    approx_softmax, l1_distance, linf_norm, mu_inner_product, softmax, Distribution,
    FiniteDomain, FixedPointFormat, Kernel, LabelSpace, SimplexVector, VectorField,
};
