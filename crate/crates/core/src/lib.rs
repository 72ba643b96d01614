//! Tabular opponent shaping.
//!
//! A shaper plays a meta-game whose steps are whole episodes of an inner
//! matrix game against naive Q-learning opponents. The continuous meta-game
//! is discretised with uniform epsilon-nets and solved online by an R-MAX
//! learner. Alongside the learner the crate ships:
//!
//! - [`bounds`]: closed-form evaluation of the PAC and discretisation bounds,
//! - [`oracle`]: brute-force references (exact value iteration, exhaustive
//!   best responses, explicit discretisation of a continuous MDP),
//! - [`harness`]: a seeded experiment driver producing CSV/JSON output.
//!
//! ```
//! use rfos::games::MatrixGame;
//! use rfos::games::JointAction;
//!
//! let mp = MatrixGame::matching_pennies();
//! let out = mp.step(0, &JointAction::new(vec![0, 0])).unwrap();
//! assert_eq!(out.rewards, vec![1.0, -1.0]);
//! ```

pub mod bounds;
pub mod epsnet;
pub mod error;
pub mod games;
pub mod harness;
pub mod learners;
pub mod metagame;
pub mod oracle;
pub mod rmax;

pub use error::{Error, Result};

/// Deterministic generator used everywhere a seed is accepted.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's standard generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
