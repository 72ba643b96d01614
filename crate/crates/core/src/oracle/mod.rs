//! Brute-force references the learner is checked against.
//!
//! Nothing here shares code paths with [`crate::rmax`]: values come from
//! dense Bellman iteration or a direct linear solve, best responses from
//! exhaustive search.

mod best_response;
mod continuous;
mod mdp;

pub use best_response::{best_response_return, BestResponse, BestResponseProblem};
pub use continuous::{
    discretisation_errors, family_discretisation_errors, loglog_slope, step_value, transition_gap,
    SyntheticContinuousMdp, TransitionGap,
};
pub use mdp::{check_simulation_lemma, perturb, random_mdp, run_rmax, ExplicitMdp, MdpEnv, SimulationCheck};
