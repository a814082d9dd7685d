//! Estimation of Pauli error rates from SPAM-noisy random probes.
//!
//! The pipeline: simulate (or load) a [`ProbeBatch`], turn altered readout
//! weights into marginal-mass estimates with an [`EstimatorVector`], and
//! assemble the full distribution by branch-and-prune in [`population`].

pub mod batch_io;
pub mod channels;
pub mod error;
pub mod eta;
pub mod individual;
mod lp;
pub mod pauli;
pub mod population;
pub mod precision;
pub mod rng;
pub mod spam;

pub use batch_io::{read_batch, write_batch, BatchFormat, BatchHeader};
pub use channels::{amatrix, concat, AMatrix, ChannelSpec};
pub use error::{Error, Result};
pub use eta::{
    circle_minimax_value, eta_exact, eta_report, formula_bound, CoefficientVector, EtaConstants,
    EtaResult, FormulaBound, Regime,
};
pub use individual::{
    build_estimator, estimate_p0, plan_samples, EstimatorKind, EstimatorVector, RecoveryEstimate,
    WeightHistogram,
};
pub use pauli::{exact_readout_distribution, ErrorRateDistribution, PauliString, Readout};
pub use population::{
    plan_budget, recover, recover_with, ExactObserver, KindPolicy, PrefixObserver, RecoverOptions,
    RecoveryReport,
};
pub use precision::Precision;
pub use rng::GENERATOR_NAME;
pub use spam::{simulate_batch, ProbeBatch, ProbeRecord, SpamParams};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
