//! Ratio-form success probabilities.
//!
//! Here the bonus over the base share `1/(n+m)` is the *ratio* of the focal
//! hacker's effort to the average effort of the rivals, instead of the
//! difference. Best responses then depend on the rivals, and the symmetric
//! equilibrium solves
//!
//! ```text
//! K_s(r_s+p_s)/(n+m) · (n+m−1)/((n−1)α + mμ) = c_w·α
//! K_s·W/(n+m)        · (n+m−1)/(nα + (m−1)μ) = c_b·μ
//! ```
//!
//! Best responses slope downward (efforts are strategic substitutes), so a
//! damped fixed-point iteration converges. When it stalls, the system is
//! reduced to one dimension by solving the first equation for `μ` and the
//! second is bisected in `α`.
//!
//! A positive solution does not always exist when a type has a single
//! member. With `n = 1` the white-hat equation pins `α·μ`, and the black-hat
//! equation then needs `W/c_b > (r_s+p_s)/(m·c_w)`; `m = 1` mirrors this.
//! `n = m = 1` asks for both at once, which is impossible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{MarketParams, ReleaseModel, VendorDecision};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
pub const DAMPING: f64 = 0.5;

/// Smallest effort the positivity projection allows.
const EFFORT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEquilibrium {
    pub alpha_s: f64,
    pub mu_s: f64,
    /// White-hat first-order-condition residual.
    pub residual_alpha: f64,
    /// Black-hat first-order-condition residual.
    pub residual_mu: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The one-dimensional bisection fallback produced the answer.
    pub used_fallback: bool,
}

/// Sensitivities of the ratio-form equilibrium to the severe bounty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSensitivities {
    pub d_alpha_dps: f64,
    pub d_mu_dps: f64,
    /// Jacobian determinant of the equilibrium system.
    pub determinant: f64,
    /// The same derivatives from the stated closed forms, kept for comparison.
    /// They share the signs of the exact values but not their magnitudes.
    pub closed_form_d_alpha_dps: f64,
    pub closed_form_d_mu_dps: f64,
    pub closed_form_denominator: f64,
}

#[derive(Debug, Clone, Copy)]
struct RatioSystem {
    n: f64,
    m: f64,
    pool: f64,
    k_s: f64,
    reward: f64,
    w: f64,
    c_w: f64,
    c_b: f64,
}

impl RatioSystem {
    fn new(params: &MarketParams, k_s: f64, p_s: f64) -> Result<Self> {
        let n = f64::from(params.n);
        let m = f64::from(params.m);
        let reward = params.r_s + p_s;
        if params.n < 1 || params.m < 1 || n + m < 2.0 {
            return Err(Error::Domain(
                "ratio form needs n ≥ 1, m ≥ 1 and n + m ≥ 2".into(),
            ));
        }
        if !(reward > 0.0 && params.w > 0.0 && k_s > 0.0) {
            return Err(Error::Domain(format!(
                "ratio form needs r_s + p_s > 0, W > 0 and K_s > 0 (got {reward}, {}, {k_s})",
                params.w
            )));
        }
        let sys = Self {
            n,
            m,
            pool: n + m,
            k_s,
            reward,
            w: params.w,
            c_w: params.c_w,
            c_b: params.c_b,
        };
        sys.check_existence()?;
        Ok(sys)
    }

    fn check_existence(&self) -> Result<()> {
        let white = self.reward / self.c_w;
        let black = self.w / self.c_b;
        if self.n == 1.0 && !(black * self.m > white) {
            return Err(Error::Domain(format!(
                "with n = 1 a positive equilibrium needs m·W/c_b > (r_s+p_s)/c_w ({} vs {white})",
                black * self.m
            )));
        }
        if self.m == 1.0 && !(white * self.n > black) {
            return Err(Error::Domain(format!(
                "with m = 1 a positive equilibrium needs n·(r_s+p_s)/c_w > W/c_b ({} vs {black})",
                white * self.n
            )));
        }
        Ok(())
    }

    fn white_stake(&self) -> f64 {
        self.k_s * self.reward / self.pool
    }

    fn black_stake(&self) -> f64 {
        self.k_s * self.w / self.pool
    }

    /// Effort mass faced by a white hat and by a black hat.
    fn rival_mass(&self, alpha: f64, mu: f64) -> (f64, f64) {
        (
            (self.n - 1.0) * alpha + self.m * mu,
            self.n * alpha + (self.m - 1.0) * mu,
        )
    }

    fn residuals(&self, alpha: f64, mu: f64) -> (f64, f64) {
        let (s1, s2) = self.rival_mass(alpha, mu);
        let rivals = self.pool - 1.0;
        (
            self.white_stake() * rivals / s1 - self.c_w * alpha,
            self.black_stake() * rivals / s2 - self.c_b * mu,
        )
    }

    fn best_responses(&self, alpha: f64, mu: f64) -> (f64, f64) {
        let (s1, s2) = self.rival_mass(alpha, mu);
        let rivals = self.pool - 1.0;
        (
            self.white_stake() * rivals / (self.c_w * s1),
            self.black_stake() * rivals / (self.c_b * s2),
        )
    }

    fn converged(&self, alpha: f64, mu: f64) -> bool {
        let (ra, rm) = self.residuals(alpha, mu);
        ra.abs() <= RESIDUAL_TOLERANCE && rm.abs() <= RESIDUAL_TOLERANCE
    }

    /// `μ` that solves the white-hat condition for a given `α`.
    fn mu_given_alpha(&self, alpha: f64) -> f64 {
        (self.white_stake() * (self.pool - 1.0) / (self.c_w * alpha) - (self.n - 1.0) * alpha)
            / self.m
    }

    /// Bisects the black-hat residual along the white-hat reaction curve.
    fn bisect(&self) -> Option<(f64, f64)> {
        let black = |alpha: f64| {
            let mu = self.mu_given_alpha(alpha);
            let (_, s2) = self.rival_mass(alpha, mu);
            self.c_b * mu * s2 - self.black_stake() * (self.pool - 1.0)
        };
        // `black` is +∞ (or positive) as α → 0 and negative where μ hits 0.
        let mut hi = if self.n > 1.0 {
            (self.white_stake() * (self.pool - 1.0) / (self.c_w * (self.n - 1.0))).sqrt()
        } else {
            let mut hi = 1.0;
            while black(hi) > 0.0 {
                hi *= 2.0;
                if hi > 1e150 {
                    return None;
                }
            }
            hi
        };
        let mut lo = hi;
        while black(lo) <= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return None;
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if black(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // take whichever end has the smaller residual pair
        [lo, hi]
            .into_iter()
            .map(|a| (a, self.mu_given_alpha(a)))
            .filter(|&(_, mu)| mu > 0.0)
            .min_by(|x, y| {
                let rx = self.residuals(x.0, x.1);
                let ry = self.residuals(y.0, y.1);
                (rx.0.abs().max(rx.1.abs())).total_cmp(&ry.0.abs().max(ry.1.abs()))
            })
    }
}

/// Solves the ratio-form symmetric equilibrium for `(α_s, μ_s)`.
///
/// The default starting point is the additive-form equilibrium
/// `(K_s(r_s+p_s)/((n+m)c_w), K_s·W/((n+m)c_b))`.
pub fn solve_ratio_equilibrium<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
    initial_guess: Option<(f64, f64)>,
) -> Result<RatioEquilibrium> {
    solve_at(
        params,
        curves.severe_residual(decision.t),
        decision.p_s,
        initial_guess,
    )
}

/// [`solve_ratio_equilibrium`] at a given severe residual likelihood.
pub fn solve_at(
    params: &MarketParams,
    k_s: f64,
    p_s: f64,
    initial_guess: Option<(f64, f64)>,
) -> Result<RatioEquilibrium> {
    let sys = RatioSystem::new(params, k_s, p_s)?;
    let (mut alpha, mut mu) =
        initial_guess.unwrap_or((sys.white_stake() / sys.c_w, sys.black_stake() / sys.c_b));
    if !(alpha > 0.0 && mu > 0.0 && alpha.is_finite() && mu.is_finite()) {
        return Err(Error::Domain(format!(
            "initial guess ({alpha}, {mu}) must be strictly positive"
        )));
    }

    let finish = |alpha: f64, mu: f64, iterations: usize, used_fallback: bool| {
        let (ra, rm) = sys.residuals(alpha, mu);
        RatioEquilibrium {
            alpha_s: alpha,
            mu_s: mu,
            residual_alpha: ra,
            residual_mu: rm,
            iterations,
            converged: ra.abs() <= RESIDUAL_TOLERANCE && rm.abs() <= RESIDUAL_TOLERANCE,
            used_fallback,
        }
    };

    for it in 0..MAX_ITERATIONS {
        if sys.converged(alpha, mu) {
            return Ok(finish(alpha, mu, it, false));
        }
        let (ga, gm) = sys.best_responses(alpha, mu);
        alpha = ((1.0 - DAMPING) * alpha + DAMPING * ga).max(EFFORT_FLOOR);
        mu = ((1.0 - DAMPING) * mu + DAMPING * gm).max(EFFORT_FLOOR);
    }
    if sys.converged(alpha, mu) {
        return Ok(finish(alpha, mu, MAX_ITERATIONS, false));
    }

    if let Some((a, m)) = sys.bisect() {
        let eq = finish(a, m, MAX_ITERATIONS, true);
        if eq.converged {
            return Ok(eq);
        }
        alpha = a;
        mu = m;
    }
    let (residual_alpha, residual_mu) = sys.residuals(alpha, mu);
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        alpha_s: alpha,
        mu_s: mu,
        residual_alpha,
        residual_mu,
    })
}

/// Derivatives of the equilibrium efforts in `p_s` by implicit
/// differentiation of the equilibrium system.
pub fn ratio_sensitivities<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
    eq: &RatioEquilibrium,
) -> Result<RatioSensitivities> {
    sensitivities_at(params, curves.severe_residual(decision.t), decision.p_s, eq)
}

/// [`ratio_sensitivities`] at a given severe residual likelihood.
pub fn sensitivities_at(
    params: &MarketParams,
    k_s: f64,
    p_s: f64,
    eq: &RatioEquilibrium,
) -> Result<RatioSensitivities> {
    if !eq.converged {
        return Err(Error::Domain(
            "sensitivities need a converged equilibrium".into(),
        ));
    }
    let sys = RatioSystem::new(params, k_s, p_s)?;
    let (alpha, mu) = (eq.alpha_s, eq.mu_s);
    let (s1, s2) = sys.rival_mass(alpha, mu);
    let rivals = sys.pool - 1.0;
    let (n, m) = (sys.n, sys.m);
    let a = sys.white_stake();
    let b = sys.black_stake();

    // Jacobian of (white FOC, black FOC) in (α, μ), and the p_s partial.
    let j11 = -a * rivals * (n - 1.0) / (s1 * s1) - sys.c_w;
    let j12 = -a * rivals * m / (s1 * s1);
    let j21 = -b * rivals * n / (s2 * s2);
    let j22 = -b * rivals * (m - 1.0) / (s2 * s2) - sys.c_b;
    let white_dp = k_s * rivals / (sys.pool * s1);
    let determinant = j11 * j22 - j12 * j21;
    if !(determinant > 0.0) {
        return Err(Error::Domain(format!(
            "equilibrium Jacobian determinant {determinant} is not positive"
        )));
    }

    // Stated closed forms, read with K(·) = K_s(t) throughout.
    let pool = sys.pool;
    let reward = sys.reward;
    let w = sys.w;
    let closed_form_denominator = (k_s * k_s * reward * w / (pool * pool * s2 * s2 * s1 * s1)
        + sys.c_w * k_s * w * (m - 1.0) / (pool * s2 * s2)
        + sys.c_b * k_s * reward * (n - 1.0) / (pool * s1 * s1))
        / rivals
        + sys.c_w * sys.c_b;
    let closed_form_d_alpha_dps =
        (k_s * w * (m - 1.0) / (pool * s2 * s2 * rivals) + sys.c_b) * sys.c_w * alpha
            / (reward * closed_form_denominator);
    let closed_form_d_mu_dps =
        -(k_s * m / (pool * s1 * s1 * rivals)) * sys.c_w * alpha / closed_form_denominator;

    Ok(RatioSensitivities {
        d_alpha_dps: -white_dp * j22 / determinant,
        d_mu_dps: white_dp * j21 / determinant,
        determinant,
        closed_form_d_alpha_dps,
        closed_form_d_mu_dps,
        closed_form_denominator,
    })
}

/// Non-expert effort under the ratio form, `sqrt(K_ns·p_ns/l)`.
///
/// Non-experts compete only among themselves, so the symmetric first-order
/// condition `K_ns·p_ns/(l·β) = β` has this closed form.
pub fn ratio_nonsevere_effort(params: &MarketParams, k_ns: f64, p_ns: f64) -> f64 {
    (k_ns * p_ns / f64::from(params.l)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::s0_market;

    #[test]
    fn symmetric_case_closed_form() {
        // c_w = c_b = 2 and r_s + p_s = W = 8
        let params = MarketParams {
            r_s: 1.0,
            w: 8.0,
            ..s0_market()
        };
        let eq = solve_at(&params, 0.5, 7.0, None).unwrap();
        let e = (0.5 * 8.0 / (7.0 * 2.0_f64)).sqrt();
        assert!(eq.converged);
        assert!((eq.alpha_s - e).abs() < 1e-9);
        assert!((eq.mu_s - e).abs() < 1e-9);
    }

    #[test]
    fn converged_residuals_are_small() {
        let eq = solve_at(&s0_market(), 0.5, 2.5, None).unwrap();
        assert!(eq.residual_alpha.abs() <= RESIDUAL_TOLERANCE);
        assert!(eq.residual_mu.abs() <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn bounty_raises_white_and_lowers_black_effort() {
        let base = solve_at(&s0_market(), 0.5, 2.5, None).unwrap();
        let up = solve_at(&s0_market(), 0.5, 2.5 * 1.01, None).unwrap();
        assert!(up.alpha_s > base.alpha_s);
        assert!(up.mu_s < base.mu_s);
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let p = 2.5;
        let params = s0_market();
        let eq = solve_at(&params, 0.5, p, None).unwrap();
        let s = sensitivities_at(&params, 0.5, p, &eq).unwrap();
        let h = 1e-5 * p;
        let hi = solve_at(&params, 0.5, p + h, None).unwrap();
        let lo = solve_at(&params, 0.5, p - h, None).unwrap();
        let fd_alpha = (hi.alpha_s - lo.alpha_s) / (2.0 * h);
        let fd_mu = (hi.mu_s - lo.mu_s) / (2.0 * h);
        assert!((s.d_alpha_dps - fd_alpha).abs() <= 1e-3 * fd_alpha.abs());
        assert!((s.d_mu_dps - fd_mu).abs() <= 1e-3 * fd_mu.abs());
        assert!(s.d_alpha_dps > 0.0 && s.d_mu_dps < 0.0);
        assert!(s.closed_form_d_alpha_dps > 0.0 && s.closed_form_d_mu_dps < 0.0);
    }

    #[test]
    fn single_black_hat_drops_the_cross_term() {
        let params = MarketParams {
            m: 1,
            ..s0_market()
        };
        let eq = solve_at(&params, 0.5, 2.5, None).unwrap();
        let s = sensitivities_at(&params, 0.5, 2.5, &eq).unwrap();
        assert!(s.d_alpha_dps > 0.0);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let params = MarketParams {
            w: 0.0,
            ..s0_market()
        };
        assert!(matches!(
            solve_at(&params, 0.5, 2.5, None),
            Err(Error::Domain(_))
        ));
        let pair = MarketParams {
            n: 1,
            m: 1,
            ..s0_market()
        };
        assert!(matches!(
            solve_at(&pair, 0.5, 2.5, None),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            solve_at(&s0_market(), 0.5, 2.5, Some((0.0, 0.1))),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lone_white_hat_needs_dominant_black_incentive() {
        // n = 1, m = 4: needs 4·W/c_b > (r_s+p_s)/c_w
        let params = MarketParams {
            n: 1,
            ..s0_market()
        };
        assert!(solve_at(&params, 0.5, 2.5, None).unwrap().converged);
        let weak = MarketParams {
            n: 1,
            w: 0.5,
            ..s0_market()
        };
        assert!(matches!(
            solve_at(&weak, 0.5, 10.0, None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn slow_contraction_uses_fallback_or_converges() {
        // n = 1, m = 2 with a tiny black-hat stake contracts slowly
        let params = MarketParams {
            n: 1,
            m: 2,
            w: 3.0,
            r_s: 0.0,
            ..s0_market()
        };
        let eq = solve_at(&params, 0.5, 2.9, None).unwrap();
        assert!(eq.converged, "{eq:?}");
    }

    #[test]
    fn nonsevere_extension() {
        let e = ratio_nonsevere_effort(&s0_market(), 0.8, 0.5);
        assert!((e - (0.08_f64).sqrt()).abs() < 1e-15);
    }
}
