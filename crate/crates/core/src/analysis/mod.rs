//! Dictionary constants, best `m`-term approximation oracles and checks of
//! greedy residual histories against the convergence bounds.

pub mod bounds;
pub mod constants;
pub mod sigma;

pub use bounds::{
    check_partial_sum_bound, fit_loglog, fit_loglog_slope, verify_decay_bound, verify_rate_bound, DecayReport,
    PartialSumReport, RateReport,
};
pub use constants::{
    estimate_a3, estimate_all, estimate_nikolskii, estimate_unconditionality, evaluate_witness, rip_delta,
    CandidateSet, ConditionEstimate, ConditionKind, ConstantSet, EstimateOptions, Witness,
};
pub use sigma::{sigma_m_capped, sigma_m_oracle, SigmaMethod, SigmaTable};
