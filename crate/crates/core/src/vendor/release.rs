//! Release-time optimization with and without a program.

use serde::{Deserialize, Serialize};

use super::{
    bbp_closed_form, condition1_at, no_bbp_at, no_bbp_probabilities, optimal_bounties_at, Exposure,
    SevereContest,
};
use crate::error::{Error, Result};
use crate::numerics::{
    central_difference, golden_section_max, linspace, safeguarded_newton, sign_changes,
};
use crate::scenario::{MarketParams, ReleaseModel};

/// Grid intervals for sign-change scans and coarse maximization.
pub const SCAN_INTERVALS: usize = 2000;

/// Where a boundary optimum sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `t = 0`.
    Start,
    /// `t = t_max`.
    Horizon,
    /// An end of the window where Condition 1 holds.
    ViabilityEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseOptimum {
    pub t: f64,
    pub profit: f64,
    /// Analytic first-order condition at `t`.
    pub foc: f64,
    pub interior: bool,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbpReleaseOptimum {
    pub t: f64,
    pub p_s: f64,
    pub p_ns: f64,
    pub profit: f64,
    pub foc: f64,
    pub interior: bool,
    pub boundary: Option<Boundary>,
    pub window: ViableWindow,
}

/// Sub-interval of `[0, t_max]` on which Condition 1 holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViableWindow {
    pub start: f64,
    pub end: f64,
}

/// Slope of the no-program profit in `t`.
///
/// Each severe term is differentiated only while its probability is
/// positive; a probability floored at zero contributes nothing.
pub fn no_bbp_slope<C: ReleaseModel + ?Sized>(params: &MarketParams, curves: &C, t: f64) -> f64 {
    let k = curves.severe_residual(t);
    let dk = curves.severe_residual_slope(t);
    let c = SevereContest::new(params, k);
    let gap = params.incentive_gap();
    let (_, _, raw_e, raw_b) = no_bbp_probabilities(params, k);
    let w = c.spread_weight();
    let exploit = if raw_b > 0.0 {
        dk * c.m / c.pool * (1.0 + 2.0 * c.n * w * gap) * params.tc_s
    } else {
        0.0
    };
    let disclosure = if raw_e > 0.0 {
        dk * c.n / c.pool * (1.0 - 2.0 * c.m * w * gap) * params.x * params.tc_s
    } else {
        0.0
    };
    curves.revenue_slope(t)
        - exploit
        - disclosure
        - curves.nonsevere_residual_slope(t) * params.tc_ns
}

/// `D(t) = dΠ_b/dt − dΠ_nb/dt` at optimal bounties, by differentiating the
/// three gains of the profit decomposition. The optimal severe bounty moves
/// with `t`; `K_s·p_s*` is affine in `K_s`, which keeps this exact.
pub fn release_gap_term<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> f64 {
    let k = curves.severe_residual(t);
    let dk = curves.severe_residual_slope(t);
    let k_ns = curves.nonsevere_residual(t);
    let dk_ns = curves.nonsevere_residual_slope(t);
    let c = SevereContest::new(params, k);
    let gain_weight = c.m * c.n / ((c.pool - 1.0) * c.pool * c.pool * params.c_w);
    let level = 0.5 * (params.tc_s + params.c_w / params.c_b * params.w - params.r_s);
    let offset = 0.5 * c.pool * (c.pool - 1.0) * params.c_w / c.m;
    let scaled_bounty = level * k - offset;
    let severe = gain_weight * 2.0 * scaled_bounty * level * dk;
    let p_ns = 0.5 * params.tc_ns;
    let nonsevere = 2.0 * k_ns * dk_ns * p_ns * p_ns;
    let (_, _, raw_e, _) = no_bbp_probabilities(params, k);
    let disclosure = if raw_e > 0.0 {
        c.n * params.x * params.tc_s / c.pool
            * dk
            * (1.0 - 2.0 * c.m * c.spread_weight() * params.incentive_gap())
    } else {
        0.0
    };
    severe + nonsevere + disclosure
}

/// Profit with a program at the bounties that are optimal for `t`.
pub fn concentrated_profit<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> Result<f64> {
    let e = Exposure::at(curves, t);
    let b = optimal_bounties_at(params, e.k_s)?;
    Ok(bbp_closed_form(params, &e, b.p_s, b.p_ns).total)
}

/// Analytic slope of [`concentrated_profit`].
pub fn concentrated_slope<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> f64 {
    no_bbp_slope(params, curves, t) + release_gap_term(params, curves, t)
}

/// Finite-difference `D(t)` from the two profit functions.
pub fn release_gap_fd<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
    h: f64,
) -> Result<f64> {
    let with = |s: f64| concentrated_profit(params, curves, s).unwrap_or(f64::NAN);
    let without = |s: f64| no_bbp_at(params, &Exposure::at(curves, s)).total;
    let d = central_difference(with, t, h) - central_difference(without, t, h);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Domain(format!("profit undefined near t = {t}")))
    }
}

fn slope_derivative(f: impl Fn(f64) -> f64, t_max: f64) -> impl Fn(f64) -> f64 {
    let h = 1e-6 * t_max;
    move |t| central_difference(&f, t, h)
}

/// Optimal release time without a program: the root of the first-order
/// condition on `[0, t_max]`.
pub fn optimal_release_no_bbp<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
) -> Result<ReleaseOptimum> {
    let t_max = curves.horizon();
    let foc = |t: f64| no_bbp_slope(params, curves, t);
    let dfoc = slope_derivative(foc, t_max);
    let grid = linspace(0.0, t_max, SCAN_INTERVALS);
    let changes = sign_changes(foc, &grid);
    let profit = |t: f64| no_bbp_at(params, &Exposure::at(curves, t)).total;

    match changes.as_slice() {
        [] => {
            let (t, boundary) = if foc(0.0) <= 0.0 {
                (0.0, Boundary::Start)
            } else {
                (t_max, Boundary::Horizon)
            };
            Ok(ReleaseOptimum {
                t,
                profit: profit(t),
                foc: foc(t),
                interior: false,
                boundary: Some(boundary),
            })
        }
        [one] if one.falling => {
            let t = safeguarded_newton(foc, &dfoc, one.lo, one.hi, 1e-10);
            Ok(ReleaseOptimum {
                t,
                profit: profit(t),
                foc: foc(t),
                interior: true,
                boundary: None,
            })
        }
        many => Err(Error::NonConcave {
            roots: many
                .iter()
                .map(|c| safeguarded_newton(foc, &dfoc, c.lo, c.hi, 1e-10))
                .collect(),
        }),
    }
}

fn describe_condition1_failure(params: &MarketParams, k: f64, label: &str) -> String {
    match condition1_at(params, k) {
        Ok(c) if c.gap_value <= c.lb => format!(
            "at {label} W/c_b − r_s/c_w = {} is not above the lower bound {}",
            c.gap_value, c.lb
        ),
        Ok(c) => format!(
            "at {label} W/c_b − r_s/c_w = {} is not below the upper bound {}",
            c.gap_value, c.ub
        ),
        Err(e) => format!("at {label}: {e}"),
    }
}

/// The window of release times where Condition 1 holds. With a decreasing
/// `K_s` the condition carves out a single interval.
pub fn viable_window<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
) -> Result<ViableWindow> {
    let t_max = curves.horizon();
    let feasible = |t: f64| {
        condition1_at(params, curves.severe_residual(t))
            .map(|c| c.feasible)
            .unwrap_or(false)
    };
    let grid = linspace(0.0, t_max, SCAN_INTERVALS);
    let flags: Vec<bool> = grid.iter().map(|&t| feasible(t)).collect();
    let Some(first) = flags.iter().position(|&f| f) else {
        return Err(Error::NoViableProgram(format!(
            "Condition 1 fails on all of [0, {t_max}]: {}; {}",
            describe_condition1_failure(params, curves.severe_residual(0.0), "t = 0"),
            describe_condition1_failure(params, curves.severe_residual(t_max), "t = t_max"),
        )));
    };
    let last = first + flags[first..].iter().take_while(|&&f| f).count() - 1;

    // refine each edge towards the infeasible neighbour, staying feasible
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if feasible(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let start = if first == 0 {
        0.0
    } else {
        refine(grid[first], grid[first - 1])
    };
    let end = if last == grid.len() - 1 {
        t_max
    } else {
        refine(grid[last], grid[last + 1])
    };
    Ok(ViableWindow { start, end })
}

/// Optimal release time and bounties with a program.
///
/// Maximizes the concentrated profit (bounties re-optimized at every `t`)
/// over the viable window: a grid scan brackets the maximum, golden-section
/// search narrows it, and a sign change of the analytic slope inside the
/// bracket is polished by safeguarded Newton.
pub fn optimal_release_with_bbp<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
) -> Result<BbpReleaseOptimum> {
    let window = viable_window(params, curves)?;
    let t_max = curves.horizon();
    let objective = |t: f64| concentrated_profit(params, curves, t).unwrap_or(f64::NEG_INFINITY);
    let slope = |t: f64| concentrated_slope(params, curves, t);

    let grid = linspace(window.start, window.end, SCAN_INTERVALS / 2);
    let best = (0..grid.len())
        .max_by(|&a, &b| objective(grid[a]).total_cmp(&objective(grid[b])))
        .expect("non-empty grid");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut t = golden_section_max(objective, lo, hi, 1e-12 * t_max.max(1.0));
    if slope(lo) > 0.0 && slope(hi) < 0.0 {
        let dslope = slope_derivative(slope, t_max);
        let polished = safeguarded_newton(slope, dslope, lo, hi, 1e-10);
        if objective(polished) >= objective(t) {
            t = polished;
        }
    }
    // keep a grid point if it is strictly better (flat or kinked objectives)
    if objective(grid[best]) > objective(t) {
        t = grid[best];
    }

    let edge_tol = 1e-7 * t_max.max(1.0);
    let boundary = if t - window.start <= edge_tol {
        Some(if window.start == 0.0 {
            Boundary::Start
        } else {
            Boundary::ViabilityEdge
        })
    } else if window.end - t <= edge_tol {
        Some(if window.end == t_max {
            Boundary::Horizon
        } else {
            Boundary::ViabilityEdge
        })
    } else {
        None
    };
    let bounties = optimal_bounties_at(params, curves.severe_residual(t))?;
    Ok(BbpReleaseOptimum {
        t,
        p_s: bounties.p_s,
        p_ns: bounties.p_ns,
        profit: objective(t),
        foc: slope(t),
        interior: boundary.is_none(),
        boundary,
        window,
    })
}
