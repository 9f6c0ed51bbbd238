//! The canonical scenario used throughout the tests and the guide.
//!
//! At the reference release time `t = 5` the curves give `K_s = 0.5` and
//! `K_ns = 0.8`, where the optimal bounties are `p_s = 2.5` and
//! `p_ns = 0.5`.

use crate::hacker::HackerStage;
use crate::scenario::{MarketParams, ReleaseCurves, ReleaseModel, VendorDecision};
use crate::vendor::Exposure;

pub fn s0_market() -> MarketParams {
    MarketParams {
        n: 3,
        l: 5,
        m: 4,
        c_w: 2.0,
        c_b: 2.0,
        r_s: 1.0,
        w: 8.0,
        tc_s: 40.0,
        tc_ns: 1.0,
        x: 0.5,
    }
}

pub fn s0_curves() -> ReleaseCurves {
    ReleaseCurves {
        k_s0: 1.0,
        lambda_s: std::f64::consts::LN_2 / 5.0,
        k_ns0: 1.0,
        lambda_ns: 1.25_f64.ln() / 5.0,
        r0: 100.0,
        a: 1.0,
        b: 0.2,
        t_max: 10.0,
    }
}

pub fn s0_decision() -> VendorDecision {
    VendorDecision::new(5.0, 2.5, 0.5)
}

/// Exact `K_s = 0.5`, `K_ns = 0.8` with the revenue of the reference time.
pub fn s0_exposure() -> Exposure {
    Exposure {
        k_s: 0.5,
        k_ns: 0.8,
        revenue: s0_curves().revenue(5.0),
    }
}

pub fn s0_stage() -> HackerStage {
    HackerStage::at_exposure(&s0_market(), 0.5, 0.8, 2.5, 0.5)
}
