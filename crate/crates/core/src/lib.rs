//! Numerical engine for a two-stage bug bounty game.
//!
//! A software vendor picks a release time and bounties; expert and
//! non-expert white-hat hackers and black-hat hackers then choose how hard
//! to search for severe and non-severe vulnerabilities. This crate computes
//! both stages in closed form and checks every closed form against an
//! independent route: grid-search best responses, numeric maximization,
//! finite differences, and event-level Monte Carlo simulation.
//!
//! * [`scenario`]: parameters, release curves, validation.
//! * [`hacker`]: stage-2 efforts, success probabilities, best-response oracle.
//! * [`ratio`]: the ratio-form success probabilities and their equilibrium.
//! * [`vendor`]: bounties, Condition 1, profits, release time, head-count.
//! * [`verify`]: randomized verification of the propositions and identities.
//! * [`sim`]: seeded Monte Carlo simulation of one release.
//! * [`io`]: the scenario file format.
//!
//! ```
//! use bounty_core::fixtures::{s0_curves, s0_market};
//! use bounty_core::vendor::{optimal_release_no_bbp, optimal_release_with_bbp};
//!
//! let (params, curves) = (s0_market(), s0_curves());
//! let with = optimal_release_with_bbp(&params, &curves)?;
//! let without = optimal_release_no_bbp(&params, &curves)?;
//! assert!(with.t < without.t);
//! assert!(with.profit > without.profit);
//! # Ok::<(), bounty_core::Error>(())
//! ```

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod hacker;
pub mod io;
pub mod numerics;
pub mod ratio;
pub mod scenario;
pub mod sim;
pub mod vendor;
pub mod verify;

pub use error::{Error, Result};
pub use hacker::{EffortProfile, FocalEffort, HackerStage, HackerType, Regime, SuccessProfile};
pub use scenario::{
    validate, MarketParams, ReleaseCurves, ReleaseModel, SeverityClass, ValidationReport,
    VendorDecision,
};
