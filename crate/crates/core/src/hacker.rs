//! Stage 2: the type-symmetric effort equilibrium among hackers.
//!
//! Three hacker types compete to be first to find a vulnerability. Expert
//! white hats search for severe bugs and possibly non-severe ones,
//! non-expert white hats only for non-severe bugs, and black hats only for
//! severe bugs. Success probabilities are additive: a base share of the
//! contest plus the focal hacker's effort minus the average effort of
//! everyone else in that contest.
//!
//! Two regimes exist. In the *corner* regime expert white hats ignore
//! non-severe bugs; in the *interior* regime they split effort. The regime
//! is picked by comparing the cost-normalized severe payoff with the
//! non-severe payoff per searcher.
//!
//! Efforts are never clamped. An effort above one (or below zero) marks the
//! profile infeasible. Probabilities are floored at zero as in the closed
//! forms and additionally capped at one; either adjustment sets
//! [`SuccessProfile::clipped`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{MarketParams, ReleaseModel, VendorDecision};

/// Default oracle grid step.
pub const ORACLE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Expert white hats search only for severe bugs.
    Corner,
    /// Expert white hats search for both classes.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HackerType {
    ExpertWhite,
    NoviceWhite,
    Black,
}

/// Type-symmetric efforts. Novice effort on severe bugs and black-hat
/// effort on non-severe bugs are identically zero and not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortProfile {
    pub alpha_s: f64,
    pub alpha_ns: f64,
    pub beta_ns: f64,
    pub mu_s: f64,
    pub regime: Regime,
    /// Every effort lies in `[0, 1]`.
    pub feasible: bool,
}

impl EffortProfile {
    fn new(alpha_s: f64, alpha_ns: f64, beta_ns: f64, mu_s: f64, regime: Regime) -> Self {
        let feasible = [alpha_s, alpha_ns, beta_ns, mu_s]
            .iter()
            .all(|e| (0.0..=1.0).contains(e));
        Self {
            alpha_s,
            alpha_ns,
            beta_ns,
            mu_s,
            regime,
            feasible,
        }
    }
}

/// Per-hacker probabilities of being first to find a bug.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProfile {
    /// Expert white hat, severe.
    pub p_e_s: f64,
    /// Expert white hat, non-severe.
    pub p_e_ns: f64,
    /// Non-expert white hat, non-severe.
    pub p_ne_ns: f64,
    /// Black hat, severe.
    pub p_b_s: f64,
    /// Some raw value fell outside `[0, 1]` and was clipped.
    pub clipped: bool,
}

/// One hacker's own effort choice, held apart from the symmetric rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FocalEffort {
    ExpertWhite { severe: f64, nonsevere: f64 },
    NoviceWhite { nonsevere: f64 },
    Black { severe: f64 },
}

impl FocalEffort {
    pub fn hacker_type(&self) -> HackerType {
        match self {
            FocalEffort::ExpertWhite { .. } => HackerType::ExpertWhite,
            FocalEffort::NoviceWhite { .. } => HackerType::NoviceWhite,
            FocalEffort::Black { .. } => HackerType::Black,
        }
    }

    /// The efforts a member of `hacker_type` plays under `profile`.
    pub fn from_profile(profile: &EffortProfile, hacker_type: HackerType) -> Self {
        match hacker_type {
            HackerType::ExpertWhite => FocalEffort::ExpertWhite {
                severe: profile.alpha_s,
                nonsevere: profile.alpha_ns,
            },
            HackerType::NoviceWhite => FocalEffort::NoviceWhite {
                nonsevere: profile.beta_ns,
            },
            HackerType::Black => FocalEffort::Black {
                severe: profile.mu_s,
            },
        }
    }
}

/// The stage-2 game seen by the hackers: market parameters, the vendor's
/// bounties and the residual likelihoods implied by the release time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HackerStage {
    pub params: MarketParams,
    pub k_s: f64,
    pub k_ns: f64,
    pub p_s: f64,
    pub p_ns: f64,
}

impl HackerStage {
    pub fn new<C: ReleaseModel + ?Sized>(
        params: &MarketParams,
        decision: &VendorDecision,
        curves: &C,
    ) -> Self {
        Self {
            params: *params,
            k_s: curves.severe_residual(decision.t),
            k_ns: curves.nonsevere_residual(decision.t),
            p_s: decision.p_s,
            p_ns: decision.p_ns,
        }
    }

    /// Builds the stage directly from residual likelihoods, bypassing the
    /// release curves.
    pub fn at_exposure(params: &MarketParams, k_s: f64, k_ns: f64, p_s: f64, p_ns: f64) -> Self {
        Self {
            params: *params,
            k_s,
            k_ns,
            p_s,
            p_ns,
        }
    }

    fn pools(&self) -> (f64, f64, f64, f64, f64) {
        let p = &self.params;
        (
            f64::from(p.n),
            f64::from(p.l),
            f64::from(p.m),
            p.severe_pool(),
            p.nonsevere_pool(),
        )
    }

    /// Expected severe payoff per severe searcher, `K_s(r_s + p_s)/(n+m)`.
    fn severe_stake(&self) -> f64 {
        self.k_s * (self.params.r_s + self.p_s) / self.params.severe_pool()
    }

    /// Expected non-severe payoff per non-severe searcher, `K_ns·p_ns/(n+l)`.
    fn nonsevere_stake(&self) -> f64 {
        self.k_ns * self.p_ns / self.params.nonsevere_pool()
    }

    fn black_effort(&self) -> f64 {
        self.k_s * self.params.w / (self.params.c_b * self.params.severe_pool())
    }

    /// Corner iff `K_s(r_s+p_s)/((n+m)c_w) > K_ns·p_ns/(n+l)`. Ties go to
    /// the interior regime, whose formulas coincide with the corner ones
    /// there.
    pub fn select_regime(&self) -> Regime {
        if self.severe_stake() / self.params.c_w > self.nonsevere_stake() {
            Regime::Corner
        } else {
            Regime::Interior
        }
    }

    /// Corner-regime equilibrium efforts.
    pub fn corner_equilibrium(&self) -> EffortProfile {
        let l = f64::from(self.params.l);
        EffortProfile::new(
            self.severe_stake() / self.params.c_w,
            0.0,
            self.k_ns * self.p_ns / l,
            self.black_effort(),
            Regime::Corner,
        )
    }

    /// Interior-regime equilibrium efforts.
    pub fn interior_equilibrium(&self) -> Result<EffortProfile> {
        let c_w = self.params.c_w;
        if c_w == 1.0 {
            return Err(Error::SingularParameter(
                "c_w = 1 makes the interior effort split undefined".into(),
            ));
        }
        let severe = self.severe_stake();
        let nonsevere = self.nonsevere_stake();
        Ok(EffortProfile::new(
            (severe - nonsevere) / (c_w - 1.0),
            (c_w * nonsevere - severe) / (c_w - 1.0),
            nonsevere,
            self.black_effort(),
            Regime::Interior,
        ))
    }

    /// Equilibrium of whichever regime [`select_regime`](Self::select_regime) picks.
    pub fn equilibrium(&self) -> Result<EffortProfile> {
        match self.select_regime() {
            Regime::Corner => Ok(self.corner_equilibrium()),
            Regime::Interior => self.interior_equilibrium(),
        }
    }

    /// First-discovery probabilities at a symmetric profile.
    ///
    /// The severe contest uses `(1/(n+m))[1 + m(α_s − μ_s)/(n+m−1)]` and its
    /// mirror image for black hats in both regimes; in the corner regime
    /// this is the same number as the closed form written in terms of
    /// `(r_s+p_s)/c_w − W/c_b`. The non-severe contest differs: the corner
    /// regime uses `K_ns·p_ns/l` for non-experts and zero for experts.
    pub fn success_probabilities(&self, profile: &EffortProfile) -> SuccessProfile {
        let (n, l, m, big_n, big_l) = self.pools();
        let spread = profile.alpha_s - profile.mu_s;
        let raw_e_s = (1.0 + m * spread / (big_n - 1.0)) / big_n;
        let raw_b_s = (1.0 - n * spread / (big_n - 1.0)) / big_n;
        let (raw_e_ns, raw_ne_ns) = match profile.regime {
            Regime::Corner => (0.0, self.k_ns * self.p_ns / l),
            Regime::Interior => {
                let ns_spread = profile.alpha_ns - profile.beta_ns;
                (
                    (1.0 + l * ns_spread / (big_l - 1.0)) / big_l,
                    (1.0 - n * ns_spread / (big_l - 1.0)) / big_l,
                )
            }
        };
        let mut clipped = false;
        let mut clip = |v: f64| {
            let c = v.clamp(0.0, 1.0);
            if c != v {
                clipped = true;
            }
            c
        };
        SuccessProfile {
            p_e_s: clip(raw_e_s),
            p_e_ns: clip(raw_e_ns),
            p_ne_ns: clip(raw_ne_ns),
            p_b_s: clip(raw_b_s),
            clipped,
        }
    }

    /// Expected payoff of one hacker playing `focal` while every other
    /// hacker plays `others`.
    ///
    /// In the corner regime the non-expert contest is the one whose
    /// first-order condition gives `β_ns = K_ns·p_ns/l`: base share `1/l`
    /// against the other `l − 1` non-experts. In the interior regime all
    /// `n + l` non-severe searchers share the contest.
    pub fn focal_payoff(&self, others: &EffortProfile, focal: FocalEffort) -> Result<f64> {
        let (n, l, m, big_n, big_l) = self.pools();
        if big_n < 2.0 || big_l < 2.0 {
            return Err(Error::Domain(format!(
                "contest pools n+m = {big_n} and n+l = {big_l} must both be at least 2"
            )));
        }
        let p = &self.params;
        let payoff = match focal {
            FocalEffort::ExpertWhite { severe, nonsevere } => {
                let severe_rivals = ((n - 1.0) * others.alpha_s + m * others.mu_s) / (big_n - 1.0);
                let ns_rivals = ((n - 1.0) * others.alpha_ns + l * others.beta_ns) / (big_l - 1.0);
                let prob_s = (1.0 + severe - severe_rivals) / big_n;
                let prob_ns = (1.0 + nonsevere - ns_rivals) / big_l;
                let cost = 0.5 * p.c_w * severe * severe
                    + 0.5 * nonsevere * nonsevere
                    + severe * nonsevere;
                self.k_s * prob_s * (p.r_s + self.p_s) + self.k_ns * prob_ns * self.p_ns - cost
            }
            FocalEffort::NoviceWhite { nonsevere } => {
                let prob = match others.regime {
                    Regime::Corner => {
                        let rivals = if p.l > 1 { others.beta_ns } else { 0.0 };
                        (1.0 + nonsevere - rivals) / l
                    }
                    Regime::Interior => {
                        let rivals =
                            (n * others.alpha_ns + (l - 1.0) * others.beta_ns) / (big_l - 1.0);
                        (1.0 + nonsevere - rivals) / big_l
                    }
                };
                self.k_ns * prob * self.p_ns - 0.5 * nonsevere * nonsevere
            }
            FocalEffort::Black { severe } => {
                let rivals = (n * others.alpha_s + (m - 1.0) * others.mu_s) / (big_n - 1.0);
                self.k_s * p.w / big_n * (1.0 + severe - rivals) - 0.5 * p.c_b * severe * severe
            }
        };
        Ok(payoff)
    }

    /// Brute-force best response: grid search over `[0, 1]` (a 2-D grid for
    /// expert white hats) at resolution `step`. Returns the first maximizer.
    pub fn best_response_oracle(
        &self,
        others: &EffortProfile,
        hacker_type: HackerType,
        step: f64,
    ) -> Result<FocalEffort> {
        let points = (1.0 / step).round() as usize;
        let at = |i: usize| (i as f64 / points as f64).min(1.0);
        let mut best: Option<(f64, FocalEffort)> = None;
        let mut consider = |focal: FocalEffort| -> Result<()> {
            let value = self.focal_payoff(others, focal)?;
            if best.map_or(true, |(v, _)| value > v) {
                best = Some((value, focal));
            }
            Ok(())
        };
        match hacker_type {
            HackerType::ExpertWhite => {
                for i in 0..=points {
                    for j in 0..=points {
                        consider(FocalEffort::ExpertWhite {
                            severe: at(i),
                            nonsevere: at(j),
                        })?;
                    }
                }
            }
            HackerType::NoviceWhite => {
                for i in 0..=points {
                    consider(FocalEffort::NoviceWhite { nonsevere: at(i) })?;
                }
            }
            HackerType::Black => {
                for i in 0..=points {
                    consider(FocalEffort::Black { severe: at(i) })?;
                }
            }
        }
        Ok(best.expect("grid has at least one point").1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{s0_market, s0_stage};

    const EPS: f64 = 1e-12;

    #[test]
    fn s0_is_corner() {
        let stage = s0_stage();
        // 0.5·3.5/(7·2) = 0.125 against 0.8·0.5/8 = 0.05
        assert_eq!(stage.select_regime(), Regime::Corner);
        let big = HackerStage {
            p_ns: 50.0,
            ..stage
        };
        assert_eq!(big.select_regime(), Regime::Interior);
    }

    #[test]
    fn regime_tie_is_interior() {
        let stage = s0_stage();
        // K_ns·p_ns/(n+l) = 0.125 at p_ns = 0.125·8/0.8
        let tie = HackerStage {
            p_ns: 1.25,
            ..stage
        };
        assert!((tie.severe_stake() / tie.params.c_w - tie.nonsevere_stake()).abs() < EPS);
        let exact = HackerStage {
            k_ns: 1.0,
            p_ns: 1.0,
            ..stage
        };
        // 0.125 vs 1/8 is an exact binary tie
        assert_eq!(
            exact.severe_stake() / exact.params.c_w,
            exact.nonsevere_stake()
        );
        assert_eq!(exact.select_regime(), Regime::Interior);
    }

    #[test]
    fn s0_corner_efforts() {
        let e = s0_stage().corner_equilibrium();
        assert!((e.alpha_s - 0.125).abs() < EPS);
        assert_eq!(e.alpha_ns, 0.0);
        assert!((e.beta_ns - 0.08).abs() < EPS);
        assert!((e.mu_s - 8.0 * 0.5 / 14.0).abs() < EPS);
        assert!(e.feasible);
    }

    #[test]
    fn zero_rewards_zero_effort() {
        let params = MarketParams {
            r_s: 0.0,
            w: 0.0,
            ..s0_market()
        };
        let stage = HackerStage::at_exposure(&params, 0.5, 0.8, 0.0, 0.0);
        let e = stage.corner_equilibrium();
        assert_eq!(
            (e.alpha_s, e.alpha_ns, e.beta_ns, e.mu_s),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn severe_effort_is_linear_in_reward() {
        let params = MarketParams {
            r_s: 2.0,
            ..s0_market()
        };
        let base = HackerStage::at_exposure(&params, 0.5, 0.8, 1.5, 0.5).corner_equilibrium();
        let params2 = MarketParams {
            r_s: 4.0,
            ..s0_market()
        };
        let doubled = HackerStage::at_exposure(&params2, 0.5, 0.8, 3.0, 0.5).corner_equilibrium();
        assert!((doubled.alpha_s - 2.0 * base.alpha_s).abs() < EPS);
    }

    #[test]
    fn interior_matches_corner_at_boundary() {
        let stage = HackerStage {
            k_ns: 1.0,
            p_ns: 1.0,
            ..s0_stage()
        };
        let corner = stage.corner_equilibrium();
        let interior = stage.interior_equilibrium().unwrap();
        assert!(interior.alpha_ns.abs() < EPS);
        assert!((interior.alpha_s - corner.alpha_s).abs() < EPS);
        assert_eq!(interior.mu_s, corner.mu_s);
    }

    #[test]
    fn interior_singular_at_unit_cost() {
        let params = MarketParams {
            c_w: 1.0,
            ..s0_market()
        };
        let stage = HackerStage::at_exposure(&params, 0.5, 0.8, 2.5, 50.0);
        assert!(matches!(
            stage.interior_equilibrium(),
            Err(Error::SingularParameter(_))
        ));
    }

    #[test]
    fn extreme_nonsevere_bounty_is_infeasible() {
        let stage = HackerStage {
            p_ns: 50.0,
            ..s0_stage()
        };
        let e = stage.interior_equilibrium().unwrap();
        assert!(e.alpha_s < 0.0);
        assert!(!e.feasible);
    }

    #[test]
    fn s0_probabilities() {
        let stage = s0_stage();
        let sp = stage.success_probabilities(&stage.corner_equilibrium());
        let p_e = (1.0 + (2.0 / 42.0) * (1.75 - 4.0)) / 7.0;
        let p_b = (1.0 + (1.5 / 42.0) * (4.0 - 1.75)) / 7.0;
        assert!((sp.p_e_s - p_e).abs() < EPS);
        assert!((sp.p_b_s - p_b).abs() < EPS);
        assert!((sp.p_e_s - 0.12755).abs() < 1e-5);
        assert!((sp.p_b_s - 0.15434).abs() < 1e-5);
        assert!((3.0 * sp.p_e_s + 4.0 * sp.p_b_s - 1.0).abs() < EPS);
        assert!((sp.p_ne_ns - 0.08).abs() < EPS);
        assert_eq!(sp.p_e_ns, 0.0);
        assert!(!sp.clipped);
    }

    #[test]
    fn balanced_incentives_give_base_shares() {
        // (r_s+p_s)/c_w = W/c_b at p_s = 7
        let stage = HackerStage {
            p_s: 7.0,
            ..s0_stage()
        };
        let sp = stage.success_probabilities(&stage.corner_equilibrium());
        assert!((sp.p_e_s - 1.0 / 7.0).abs() < EPS);
        assert!((sp.p_b_s - 1.0 / 7.0).abs() < EPS);
    }

    #[test]
    fn clipping_is_flagged() {
        let stage = HackerStage {
            p_s: 2000.0,
            ..s0_stage()
        };
        let sp = stage.success_probabilities(&stage.corner_equilibrium());
        assert_eq!(sp.p_b_s, 0.0);
        assert!(sp.clipped);
    }

    #[test]
    fn zero_everything_pays_zero() {
        let params = MarketParams {
            r_s: 0.0,
            w: 0.0,
            ..s0_market()
        };
        let stage = HackerStage::at_exposure(&params, 0.5, 0.8, 0.0, 0.0);
        let others = stage.corner_equilibrium();
        for focal in [
            FocalEffort::ExpertWhite {
                severe: 0.0,
                nonsevere: 0.0,
            },
            FocalEffort::NoviceWhite { nonsevere: 0.0 },
            FocalEffort::Black { severe: 0.0 },
        ] {
            assert_eq!(stage.focal_payoff(&others, focal).unwrap(), 0.0);
        }
    }

    #[test]
    fn severe_payoff_slope() {
        let stage = s0_stage();
        let others = stage.corner_equilibrium();
        // cost-free slope check: remove the quadratic by differencing against it
        let f = |a: f64| {
            stage
                .focal_payoff(
                    &others,
                    FocalEffort::ExpertWhite {
                        severe: a,
                        nonsevere: 0.0,
                    },
                )
                .unwrap()
                + 0.5 * stage.params.c_w * a * a
        };
        let slope = (f(0.3) - f(0.1)) / 0.2;
        assert!((slope - 0.5 * 3.5 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_recovers_s0_efforts() {
        let stage = s0_stage();
        let eq = stage.corner_equilibrium();
        match stage
            .best_response_oracle(&eq, HackerType::ExpertWhite, ORACLE_STEP)
            .unwrap()
        {
            FocalEffort::ExpertWhite { severe, nonsevere } => {
                assert!((severe - 0.125).abs() <= ORACLE_STEP);
                assert_eq!(nonsevere, 0.0);
            }
            other => panic!("{other:?}"),
        }
        match stage
            .best_response_oracle(&eq, HackerType::NoviceWhite, ORACLE_STEP)
            .unwrap()
        {
            FocalEffort::NoviceWhite { nonsevere } => {
                assert!((nonsevere - 0.08).abs() <= ORACLE_STEP)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_black_hat_without_gain_rests() {
        let params = MarketParams {
            w: 0.0,
            ..s0_market()
        };
        let stage = HackerStage::at_exposure(&params, 0.5, 0.8, 2.5, 0.5);
        let eq = stage.corner_equilibrium();
        assert_eq!(
            stage
                .best_response_oracle(&eq, HackerType::Black, ORACLE_STEP)
                .unwrap(),
            FocalEffort::Black { severe: 0.0 }
        );
    }

    #[test]
    fn oracle_novice_saturates_at_one() {
        // K_ns·p_ns/l = 0.8·10/5 = 1.6 > 1
        let stage = HackerStage {
            p_ns: 10.0,
            ..s0_stage()
        };
        let eq = stage.corner_equilibrium();
        assert_eq!(
            stage
                .best_response_oracle(&eq, HackerType::NoviceWhite, ORACLE_STEP)
                .unwrap(),
            FocalEffort::NoviceWhite { nonsevere: 1.0 }
        );
    }
}
