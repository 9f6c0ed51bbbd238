//! How many expert white hats to invite into a private program.
//!
//! Three answers are reported side by side and none is preferred:
//!
//! * `n_eq26 = sqrt(9m² − 10m + 1)/4 − (m − 1)/4`, the stated closed-form solution;
//! * `n_quadratic`, the positive root of `−2n² − n(m−1) + m(m+1) = 0`,
//!   the bracket of the stated first-order condition. Its discriminant is
//!   `(3m + 1)²`, so the root is `(m + 1)/2`, which differs from `n_eq26`;
//! * `n_bruteforce`, the integer `n ∈ [1, 4m]` with the highest profit when
//!   the bounties are re-optimized for each `n` at a fixed release time.

use serde::{Deserialize, Serialize};

use super::{bbp_closed_form, optimal_bounties_at, Exposure};
use crate::error::{Error, Result};
use crate::scenario::{MarketParams, ReleaseModel};

pub const DISCREPANCY_NOTE: &str = "n_eq26 is the stated closed form; n_quadratic is the positive root of the \
bracket in the stated first-order condition, (m+1)/2; they disagree for m > 1. n_bruteforce maximizes profit \
over integer n in [1, 4m] with bounties re-optimized per n (severe bounty floored at 0) and t held fixed.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhhCount {
    pub n_eq26: f64,
    pub n_quadratic: f64,
    pub n_bruteforce: u32,
    pub bruteforce_profit: f64,
    /// Profit for every `n` tried, in order.
    pub profile: Vec<f64>,
    pub note: String,
}

/// Stated first-order condition in `n`, with `(TC_s − p_s)²` as the
/// squared factor.
pub fn headcount_slope_stated(params: &MarketParams, k_s: f64, n: f64) -> f64 {
    let m = f64::from(params.m);
    let p_s = optimal_bounties_at(params, k_s)
        .map(|b| b.p_s)
        .unwrap_or(0.0);
    let pool = n + m;
    m * k_s * k_s * (params.tc_s - p_s).powi(2) / (params.c_w * pool * pool)
        * (-2.0 * n * n - n * (m - 1.0) + m * (m + 1.0))
}

pub fn optimal_whh_count<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> Result<WhhCount> {
    let m = f64::from(params.m);
    if params.m < 1 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let discriminant = 9.0 * m * m - 10.0 * m + 1.0;
    if discriminant < 0.0 {
        return Err(Error::Domain(format!(
            "9m² − 10m + 1 = {discriminant} is negative"
        )));
    }
    let n_eq26 = discriminant.sqrt() / 4.0 - (m - 1.0) / 4.0;
    let b = m - 1.0;
    let n_quadratic = (-b + (b * b + 8.0 * m * (m + 1.0)).sqrt()) / 4.0;

    let e = Exposure::at(curves, t);
    let profile = (1..=4 * params.m)
        .map(|n| {
            let trial = params.with_n(n);
            let bounties = optimal_bounties_at(&trial, e.k_s)?;
            Ok(bbp_closed_form(&trial, &e, bounties.p_s.max(0.0), bounties.p_ns).total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best, bruteforce_profit) =
        profile
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );

    Ok(WhhCount {
        n_eq26,
        n_quadratic,
        n_bruteforce: best as u32 + 1,
        bruteforce_profit,
        profile,
        note: DISCREPANCY_NOTE.to_string(),
    })
}
