//! Counterfactual outcome state transition (COST) calculus for a binary
//! treatment and a binary outcome.
//!
//! The crate is organised bottom-up:
//!
//! * [`measures`]: potential-outcome risks and the four standard effect measures.
//! * [`cost_params`]: response-type distributions and the COST parameters
//!   `G`, `H` (introducing treatment) and `I`, `J` (removing treatment).
//! * [`transport`]: identification under monotonicity, cross-population
//!   prediction and the bias incurred when monotonicity fails.
//! * [`mechanism`]: attribute-driven joint counterfactual populations and
//!   the conditions under which `G` or `J` are shared between populations.
//! * [`meta`]: deterministic heterogeneity metrics across studies.
//! * [`oracle`]: exhaustive finite-population verification in exact rationals.

pub mod cost_params;
pub mod measures;
pub mod mechanism;
pub mod meta;
pub mod oracle;
pub mod transport;

mod quantity;

pub use cost_params::{
    collapse_cost, cost_introduce, cost_remove, recode_exposure, recode_outcome,
    risks_from_distribution, CollapseReport, CollapsibilityStratum, CostIntroduce, CostRemove,
    ResponseTypeDistribution,
};
pub use measures::{measures_from_risks, risks_from_counts, ArmCounts, EffectSummary, RiskPair};
pub use quantity::Quantity;
pub use transport::{
    bias_surface, bias_under_nonmonotonicity, compare_measures, identify_g_under_decrease,
    identify_h_under_increase, identify_i_under_increase, identify_j_under_decrease,
    predict_introduce, predict_remove, transport_rr, BiasReport, MonotonicityAssumption,
    Parameter, TransportResult,
};

/// Absolute tolerance used when checking that probabilities sum to one and
/// when comparing algebraic identities in floating point.
pub const TOLERANCE: f64 = 1e-12;
