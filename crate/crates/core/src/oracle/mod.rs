//! Brute-force oracles for the guarantees the planner relies on.
//!
//! Everything here trades efficiency for literalness: tiny abstract
//! instances (a handful of hypotheses, a few probes with small observation
//! grids) are checked exhaustively against first-principles computations —
//! the explicit noisy-copy construction, enumerated optimal policies, and
//! direct definitions of the diminishing-returns properties. The production
//! planner is validated against these oracles rather than the other way
//! around.

pub mod bounds;
pub mod instance;
pub mod lemmas;
pub mod noisy;

pub use bounds::{
    attainable_values, certify, certify_random_instance, choose_target, BoundCertificate,
    CertifyError,
};
pub use instance::{
    gen_hp_instance, gen_mixed_instance, gen_whp_instance, GeneratorParams, InstanceError,
    TinyAction, TinyInstance, CANDIDATE_EPS,
};
pub use lemmas::{check_adaptive_submodularity, check_strong_monotonicity, ViolationReport};
pub use noisy::{
    build_noisy_problem, check_equivalence, EquivalenceReport, NoisyCopy, NoisyProblem, Outcome,
};
