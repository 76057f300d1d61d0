//! Free operations (incoherent and local channels) and the monotonicity,
//! majorization and cross-term harnesses built on them.

mod channel;
mod generate;
mod harness;
mod majorization;

pub use channel::{
    apply_channel, cross_term_bound, selective_outcomes, ChannelStructure, KrausChannel,
    LocalFactors, SelectiveOutcome, ZERO_PROBABILITY,
};
pub use generate::{
    random_a_local_channel, random_incoherent_channel, random_local_channel, IncoherentFlavor,
};
pub use harness::{
    digest, monotonicity_margin, summarize, trial_inputs, violation_search, Measure, Reproduction,
    Resource, SearchConfig, SearchSummary, StateKind, TrialReport, Verdict, DEFAULT_VIOLATION_TOL,
};
pub use majorization::{majorization_witness, MajorizationStep};
