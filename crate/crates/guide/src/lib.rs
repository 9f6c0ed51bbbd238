//! The concept guide from `book/src`, compiled so that every snippet in it
//! runs as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/hacker-stage.md")]
pub mod hacker_stage {}

#[doc = include_str!("../../../book/src/vendor-profit.md")]
pub mod vendor_profit {}

#[doc = include_str!("../../../book/src/release-time.md")]
pub mod release_time {}

#[doc = include_str!("../../../book/src/headcount.md")]
pub mod headcount {}

#[doc = include_str!("../../../book/src/ratio-form.md")]
pub mod ratio_form {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/scenario-files.md")]
pub mod scenario_files {}
