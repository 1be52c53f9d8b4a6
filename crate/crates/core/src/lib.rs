//! Recurrent neural tangent kernels.
//!
//! Analytic NTK and NNGP kernels of deep Elman RNNs in the infinite-width
//! limit, together with a finite-width Monte Carlo oracle, an input
//! sensitivity analysis, baseline kernels and kernel ridge learners.

pub mod baseline;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod gram;
pub mod kernel;
pub mod learners;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod sensitivity;
pub mod sequence;
pub mod vphi;

pub use baseline::{baseline_pair, BaselineKind, BaselineParams, Padding};
pub use error::{Error, Result};
pub use gram::{cross_gram_with, gram, gram_with, GramMatrix, RntkKernel, SequenceKernel};
pub use kernel::{forward_table, rntk_pair, rntk_pair_traced, KernelKind, KernelOutput, KernelTable};
pub use params::{LayerSigmas, RntkParams};
pub use sequence::Sequence;
pub use vphi::{vphi, vphi_prime, Activation, BivariateCov, CustomActivation};
