//! Stage 1: the vendor's bounty, release-time and head-count choices.
//!
//! The vendor anticipates the corner-regime hacker equilibrium and picks
//! bounties `(p_s, p_ns)` and a release time `t`. With a program its
//! expected profit is revenue minus four expected losses: black-hat
//! exploits, severe bounties, non-severe bounties and user-found
//! non-severe bugs. Without a program there are no bounties, expert white
//! hats who find a severe bug disclose it uncoordinated at cost `x·TC_s`,
//! and every non-severe bug ends up found by a user.

mod headcount;
mod release;

pub use headcount::{headcount_slope_stated, optimal_whh_count, WhhCount};
pub use release::{
    concentrated_profit, concentrated_slope, no_bbp_slope, optimal_release_no_bbp,
    optimal_release_with_bbp, release_gap_fd, release_gap_term, viable_window, BbpReleaseOptimum,
    Boundary, ReleaseOptimum, ViableWindow,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hacker::{HackerStage, Regime};
use crate::scenario::{MarketParams, ReleaseModel, VendorDecision};

/// Curve values at one release time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub k_s: f64,
    pub k_ns: f64,
    pub revenue: f64,
}

impl Exposure {
    pub fn at<C: ReleaseModel + ?Sized>(curves: &C, t: f64) -> Self {
        Self {
            k_s: curves.severe_residual(t),
            k_ns: curves.nonsevere_residual(t),
            revenue: curves.revenue(t),
        }
    }
}

/// Itemized vendor profit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub revenue: f64,
    /// Expected loss from black hats finding a severe bug first.
    pub bhh_exploit_cost: f64,
    pub severe_bounty_cost: f64,
    pub nonsevere_bounty_cost: f64,
    /// Expected cost of non-severe bugs found by users.
    pub user_discovery_cost: f64,
    /// Expected cost of uncoordinated disclosure; zero with a program.
    pub uncoordinated_disclosure_cost: f64,
    pub total: f64,
}

impl ProfitBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.revenue
            - self.bhh_exploit_cost
            - self.severe_bounty_cost
            - self.nonsevere_bounty_cost
            - self.user_discovery_cost
            - self.uncoordinated_disclosure_cost;
        self
    }
}

/// Profit with a bounty program, computed two ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbpProfit {
    /// The closed form with the equilibrium probabilities substituted.
    pub breakdown: ProfitBreakdown,
    /// Expected losses built from the stage-2 success probabilities.
    pub probability_form: ProfitBreakdown,
    pub warnings: Vec<String>,
}

/// Optimal bounties at a release time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalBounties {
    /// Unclamped; negative when no severe bounty is worth paying.
    pub p_s: f64,
    pub p_ns: f64,
    /// `p_s > 0`.
    pub viable: bool,
}

/// The band on `W/c_b − r_s/c_w` that supports a bounty program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition1Bounds {
    pub lb: f64,
    pub ub: f64,
    pub gap_value: f64,
    pub feasible: bool,
}

/// Severe-contest constants at a given `K_s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SevereContest {
    pub n: f64,
    pub m: f64,
    pub pool: f64,
    pub k_s: f64,
}

impl SevereContest {
    pub fn new(params: &MarketParams, k_s: f64) -> Self {
        Self {
            n: f64::from(params.n),
            m: f64::from(params.m),
            pool: params.severe_pool(),
            k_s,
        }
    }

    /// `K_s/((n+m−1)(n+m))`
    pub fn spread_weight(&self) -> f64 {
        self.k_s / ((self.pool - 1.0) * self.pool)
    }

    /// `(n+m)(n+m−1)/(m·K_s)`
    pub fn scarcity(&self) -> f64 {
        self.pool * (self.pool - 1.0) / (self.m * self.k_s)
    }
}

fn check_residual(k_s: f64) -> Result<()> {
    if k_s > 0.0 && k_s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("K_s(t) = {k_s} must be positive")))
    }
}

/// `p_s = ½[TC_s + (c_w/c_b)W − r_s] − ½·(n+m)(n+m−1)/m · c_w/K_s(t)` and
/// `p_ns = TC_ns/2`.
pub fn optimal_bounties<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> Result<OptimalBounties> {
    optimal_bounties_at(params, curves.severe_residual(t))
}

pub fn optimal_bounties_at(params: &MarketParams, k_s: f64) -> Result<OptimalBounties> {
    check_residual(k_s)?;
    let contest = SevereContest::new(params, k_s);
    let p_s = 0.5 * (params.tc_s + params.c_w / params.c_b * params.w - params.r_s)
        - 0.5 * contest.scarcity() * params.c_w;
    Ok(OptimalBounties {
        p_s,
        p_ns: 0.5 * params.tc_ns,
        viable: p_s > 0.0,
    })
}

/// Partial derivatives of the optimal severe bounty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BountyPartials {
    pub d_tc_s: f64,
    pub d_w: f64,
    pub d_k_s: f64,
    pub d_r_s: f64,
    pub d_c_b: f64,
}

pub fn optimal_bounty_partials(params: &MarketParams, k_s: f64) -> Result<BountyPartials> {
    check_residual(k_s)?;
    let contest = SevereContest::new(params, k_s);
    Ok(BountyPartials {
        d_tc_s: 0.5,
        d_w: 0.5 * params.c_w / params.c_b,
        d_k_s: 0.5 * contest.scarcity() * params.c_w / k_s,
        d_r_s: -0.5,
        d_c_b: -0.5 * params.c_w * params.w / (params.c_b * params.c_b),
    })
}

/// Condition 1 at release time `t`.
pub fn condition1<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> Result<Condition1Bounds> {
    condition1_at(params, curves.severe_residual(t))
}

pub fn condition1_at(params: &MarketParams, k_s: f64) -> Result<Condition1Bounds> {
    check_residual(k_s)?;
    let contest = SevereContest::new(params, k_s);
    let q = contest.scarcity();
    let loss = params.tc_s / params.c_w;
    let lb = (q - loss).max(loss - (2.0 * contest.m + contest.n) * q / contest.n);
    let ub = q + loss;
    let gap_value = params.incentive_gap();
    Ok(Condition1Bounds {
        lb,
        ub,
        gap_value,
        feasible: lb < gap_value && gap_value < ub,
    })
}

/// Closed-form profit with a program at exposure `e`.
pub fn bbp_closed_form(
    params: &MarketParams,
    e: &Exposure,
    p_s: f64,
    p_ns: f64,
) -> ProfitBreakdown {
    let c = SevereContest::new(params, e.k_s);
    let white = (params.r_s + p_s) / params.c_w;
    let black = params.w / params.c_b;
    let w_ = c.spread_weight();
    ProfitBreakdown {
        revenue: e.revenue,
        bhh_exploit_cost: e.k_s * c.m / c.pool * (1.0 + c.n * w_ * (black - white)) * params.tc_s,
        severe_bounty_cost: e.k_s * c.n / c.pool * (1.0 + c.m * w_ * (white - black)) * p_s,
        nonsevere_bounty_cost: (e.k_ns * p_ns).powi(2),
        user_discovery_cost: e.k_ns * params.tc_ns * (1.0 - e.k_ns * p_ns),
        uncoordinated_disclosure_cost: 0.0,
        total: 0.0,
    }
    .finish()
}

/// Expected profit with a program at `decision`.
///
/// The vendor model assumes the corner regime; an interior regime at this
/// decision is reported as a warning and the corner probabilities are used.
pub fn profit_with_bbp<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
) -> BbpProfit {
    let e = Exposure::at(curves, decision.t);
    profit_with_bbp_at(params, &e, decision.p_s, decision.p_ns)
}

pub fn profit_with_bbp_at(params: &MarketParams, e: &Exposure, p_s: f64, p_ns: f64) -> BbpProfit {
    let stage = HackerStage::at_exposure(params, e.k_s, e.k_ns, p_s, p_ns);
    let efforts = stage.corner_equilibrium();
    let probs = stage.success_probabilities(&efforts);
    let (n, l, m) = (
        f64::from(params.n),
        f64::from(params.l),
        f64::from(params.m),
    );
    let mut warnings = Vec::new();
    if stage.select_regime() == Regime::Interior {
        warnings
            .push("hackers are in the interior regime; corner-regime profit reported".to_string());
    }
    if !efforts.feasible {
        warnings.push("equilibrium efforts leave [0, 1]".to_string());
    }
    if probs.clipped {
        warnings.push("success probabilities were clipped to [0, 1]".to_string());
    }
    let found_by_novice = l * probs.p_ne_ns;
    if found_by_novice > 1.0 {
        warnings.push(format!("l·P_ne = {found_by_novice} exceeds one"));
    }
    let probability_form = ProfitBreakdown {
        revenue: e.revenue,
        bhh_exploit_cost: e.k_s * m * probs.p_b_s * params.tc_s,
        severe_bounty_cost: e.k_s * n * probs.p_e_s * p_s,
        nonsevere_bounty_cost: e.k_ns * found_by_novice * p_ns,
        user_discovery_cost: e.k_ns * params.tc_ns * (1.0 - found_by_novice),
        uncoordinated_disclosure_cost: 0.0,
        total: 0.0,
    }
    .finish();
    BbpProfit {
        breakdown: bbp_closed_form(params, e, p_s, p_ns),
        probability_form,
        warnings,
    }
}

/// Success probabilities without a program (`p_s = 0`), floored at zero.
/// Returns `(P_e, P_b, raw P_e, raw P_b)`.
pub fn no_bbp_probabilities(params: &MarketParams, k_s: f64) -> (f64, f64, f64, f64) {
    let c = SevereContest::new(params, k_s);
    let gap = params.incentive_gap();
    let raw_e = (1.0 - c.m * c.spread_weight() * gap) / c.pool;
    let raw_b = (1.0 + c.n * c.spread_weight() * gap) / c.pool;
    (raw_e.max(0.0), raw_b.max(0.0), raw_e, raw_b)
}

/// Expected profit without a program at release time `t`.
pub fn profit_without_bbp<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    t: f64,
    curves: &C,
) -> ProfitBreakdown {
    no_bbp_at(params, &Exposure::at(curves, t))
}

pub fn no_bbp_at(params: &MarketParams, e: &Exposure) -> ProfitBreakdown {
    let (p_e, p_b, _, _) = no_bbp_probabilities(params, e.k_s);
    let (n, m) = (f64::from(params.n), f64::from(params.m));
    ProfitBreakdown {
        revenue: e.revenue,
        bhh_exploit_cost: e.k_s * m * p_b * params.tc_s,
        severe_bounty_cost: 0.0,
        nonsevere_bounty_cost: 0.0,
        user_discovery_cost: e.k_ns * params.tc_ns,
        uncoordinated_disclosure_cost: e.k_s * n * p_e * params.x * params.tc_s,
        total: 0.0,
    }
    .finish()
}

/// Profit with a program at optimal bounties, split into the no-program
/// profit plus three gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub with_bbp: f64,
    pub without_bbp: f64,
    /// `mn·K_s²·p_s²/((n+m−1)(n+m)²c_w)`
    pub severe_bounty_gain: f64,
    /// `K_ns²·p_ns²`
    pub nonsevere_bounty_gain: f64,
    /// `n·K_s·x·TC_s·P_e` with the no-program `P_e`
    pub disclosure_saving: f64,
    /// `with_bbp − (without_bbp + gains)`, zero up to rounding.
    pub residual: f64,
}

impl Decomposition {
    pub fn margin(&self) -> f64 {
        self.severe_bounty_gain + self.nonsevere_bounty_gain + self.disclosure_saving
    }
}

/// Rebuilds the with-program profit from the no-program profit at `t`.
///
/// The non-severe gain is `K_ns²·p_ns²`: subtracting the no-program
/// non-severe cost `K_ns·TC_ns` from `(K_ns·p_ns)² + K_ns·TC_ns(1 − K_ns·p_ns)`
/// at `p_ns = TC_ns/2` leaves `K_ns²·p_ns²`, not `K_s²·p_ns²`.
pub fn profit_decomposition_check<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
) -> Result<Decomposition> {
    decomposition_at(params, &Exposure::at(curves, t))
}

pub fn decomposition_at(params: &MarketParams, e: &Exposure) -> Result<Decomposition> {
    let bounties = optimal_bounties_at(params, e.k_s)?;
    let with_bbp = bbp_closed_form(params, e, bounties.p_s, bounties.p_ns).total;
    let without_bbp = no_bbp_at(params, e).total;
    let c = SevereContest::new(params, e.k_s);
    let (p_e, _, _, _) = no_bbp_probabilities(params, e.k_s);
    let severe_bounty_gain = c.m * c.n * e.k_s * e.k_s * bounties.p_s * bounties.p_s
        / ((c.pool - 1.0) * c.pool * c.pool * params.c_w);
    let nonsevere_bounty_gain = (e.k_ns * bounties.p_ns).powi(2);
    let disclosure_saving = c.n * e.k_s * params.x * params.tc_s * p_e;
    Ok(Decomposition {
        with_bbp,
        without_bbp,
        severe_bounty_gain,
        nonsevere_bounty_gain,
        disclosure_saving,
        residual: with_bbp
            - (without_bbp + severe_bounty_gain + nonsevere_bounty_gain + disclosure_saving),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{s0_exposure, s0_market};

    #[test]
    fn nonsevere_bounty_is_half_the_user_cost() {
        let params = MarketParams {
            tc_ns: 1.0,
            ..s0_market()
        };
        assert_eq!(optimal_bounties_at(&params, 0.5).unwrap().p_ns, 0.5);
    }

    #[test]
    fn s0_optimal_severe_bounty() {
        let b = optimal_bounties_at(&s0_market(), 0.5).unwrap();
        assert!((b.p_s - 2.5).abs() < 1e-12);
        assert!(b.viable);
        assert!(matches!(
            optimal_bounties_at(&s0_market(), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn severe_bounty_maximizes_profit_in_one_dimension() {
        // 1-D numeric maximization of the closed form over p_s
        let e = s0_exposure();
        let f = |p: f64| bbp_closed_form(&s0_market(), &e, p, 0.5).total;
        let best = (0..=100_000)
            .map(|i| i as f64 * 1e-4)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert!((best - 2.5).abs() <= 1e-4);
    }

    #[test]
    fn negative_bounty_is_reported_not_clamped() {
        let b = optimal_bounties_at(&s0_market(), 0.05).unwrap();
        assert!(b.p_s < 0.0);
        assert!(!b.viable);
    }

    #[test]
    fn s0_condition1() {
        let c = condition1_at(&s0_market(), 0.5).unwrap();
        assert!((c.lb - 1.0).abs() < 1e-12);
        assert!((c.ub - 41.0).abs() < 1e-12);
        assert!((c.gap_value - 3.5).abs() < 1e-12);
        assert!(c.feasible);
    }

    #[test]
    fn feasible_condition_gives_positive_bounty_and_probabilities() {
        let params = s0_market();
        for k in [0.45, 0.5, 0.7, 1.0] {
            let c = condition1_at(&params, k).unwrap();
            if !c.feasible {
                continue;
            }
            let b = optimal_bounties_at(&params, k).unwrap();
            assert!(b.p_s > 0.0);
            let stage = HackerStage::at_exposure(&params, k, 0.8, b.p_s, b.p_ns);
            let sp = stage.success_probabilities(&stage.corner_equilibrium());
            assert!(!sp.clipped && sp.p_e_s > 0.0 && sp.p_b_s > 0.0);
        }
    }

    #[test]
    fn closed_and_probability_forms_agree_at_s0() {
        let p = profit_with_bbp_at(&s0_market(), &s0_exposure(), 2.5, 0.5);
        let a = p.breakdown.total;
        let b = p.probability_form.total;
        assert!((a - b).abs() <= 1e-12 * a.abs());
        assert!(p.warnings.is_empty(), "{:?}", p.warnings);
    }

    #[test]
    fn vanishing_exposure_leaves_revenue() {
        let e = Exposure {
            k_s: 1e-12,
            k_ns: 1e-12,
            revenue: 80.0,
        };
        let p = profit_with_bbp_at(&s0_market(), &e, 0.0, 0.0);
        assert!((p.breakdown.total - 80.0).abs() < 1e-9);
    }

    #[test]
    fn optimal_bounties_beat_perturbations() {
        let e = s0_exposure();
        let params = s0_market();
        let best = bbp_closed_form(&params, &e, 2.5, 0.5).total;
        for (dp, dq) in [
            (0.1, 0.0),
            (-0.1, 0.0),
            (0.0, 0.05),
            (0.0, -0.05),
            (0.2, 0.2),
            (-0.3, 0.1),
        ] {
            assert!(best >= bbp_closed_form(&params, &e, 2.5 + dp, 0.5 + dq).total);
        }
    }

    #[test]
    fn s0_no_program_probability() {
        let (p_e, p_b, _, _) = no_bbp_probabilities(&s0_market(), 0.5);
        let expected = (1.0 + (2.0 / 42.0) * (0.5 - 4.0)) / 7.0;
        assert!((p_e - expected).abs() < 1e-12);
        assert!((p_e - 0.11905).abs() < 1e-5);
        assert!((3.0 * p_e + 4.0 * p_b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_disclosure_cost_without_x() {
        let params = MarketParams {
            x: 0.0,
            ..s0_market()
        };
        assert_eq!(
            no_bbp_at(&params, &s0_exposure()).uncoordinated_disclosure_cost,
            0.0
        );
    }

    #[test]
    fn no_program_reconciles_with_zero_bounties() {
        let params = s0_market();
        let e = s0_exposure();
        let nb = no_bbp_at(&params, &e);
        let zero = profit_with_bbp_at(&params, &e, 0.0, 0.0);
        let b = zero.breakdown;
        assert!((nb.bhh_exploit_cost - b.bhh_exploit_cost).abs() < 1e-12);
        assert_eq!(b.severe_bounty_cost, 0.0);
        assert_eq!(b.nonsevere_bounty_cost, 0.0);
        assert!((nb.user_discovery_cost - b.user_discovery_cost).abs() < 1e-12);
        let rebuilt = b.total - nb.uncoordinated_disclosure_cost;
        assert!((nb.total - rebuilt).abs() < 1e-12);
    }

    #[test]
    fn s0_decomposition() {
        let d = decomposition_at(&s0_market(), &s0_exposure()).unwrap();
        assert!((d.severe_bounty_gain - 18.75 / 588.0).abs() < 1e-12);
        assert!((d.nonsevere_bounty_gain - 0.16).abs() < 1e-12);
        assert!((d.disclosure_saving - 30.0 * 0.5 / 4.2).abs() < 1e-12);
        assert!(d.residual.abs() <= 1e-9);
        assert!((d.margin() - 3.763).abs() < 1e-3);
    }

    #[test]
    fn decomposition_collapses_without_bounties() {
        // TC_s chosen so that p_s* = 0 at K_s = 0.5: ½(TC_s + 7) = 21
        let params = MarketParams {
            x: 0.0,
            tc_s: 35.0,
            tc_ns: 0.0,
            ..s0_market()
        };
        let e = s0_exposure();
        let b = optimal_bounties_at(&params, e.k_s).unwrap();
        assert_eq!(b.p_s, 0.0);
        let d = decomposition_at(&params, &e).unwrap();
        assert!(d.residual.abs() < 1e-12);
    }

    #[test]
    fn bounty_partials_match_finite_differences() {
        let params = s0_market();
        let k = 0.5;
        let part = optimal_bounty_partials(&params, k).unwrap();
        assert!(part.d_tc_s > 0.0 && part.d_w > 0.0 && part.d_k_s > 0.0 && part.d_r_s < 0.0);
        let h = 1e-6;
        let p = |pr: &MarketParams, k: f64| optimal_bounties_at(pr, k).unwrap().p_s;
        let fd_k = (p(&params, k + h) - p(&params, k - h)) / (2.0 * h);
        assert!((fd_k - part.d_k_s).abs() < 1e-6 * part.d_k_s);
        let up = MarketParams {
            w: params.w + h,
            ..params
        };
        let dn = MarketParams {
            w: params.w - h,
            ..params
        };
        assert!(((p(&up, k) - p(&dn, k)) / (2.0 * h) - part.d_w).abs() < 1e-6);
    }
}
