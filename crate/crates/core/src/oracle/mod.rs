//! Finite-width RNN used as Monte Carlo ground truth for the analytic kernels.

pub mod drift;
pub mod network;
pub mod ntk;

pub use drift::{drift_experiment, eta_star, DriftReport};
pub use network::{Block, FiniteRnn, ForwardCache, Parameters, StepParams};
pub use ntk::{EmpiricalNtkResult, NtkBreakdown, Traced};
