//! Measurement-dependent local models for the tripartite two-setting,
//! two-outcome Bell scenario.

pub mod context;
pub mod dependence;
pub mod format;
pub mod inequalities;
pub mod lp;
pub mod model;
pub mod num;
pub mod reference_models;
pub mod quantum;
pub mod search;

pub use context::{Context, ContextError, Party, PartyPair};
pub use model::{
    behavior, build_model, check_context_consistency, check_no_signaling, correlator, Behavior,
    ContextDistribution, MdlModel, ModelError, NoSignalingReport, Pairing, ResponseTable,
};
pub use num::{Rational, Scalar};
