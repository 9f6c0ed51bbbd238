//! Domain types shared by both stages of the game, parameter validation,
//! and the release-time curves.
//!
//! The vendor's release time `t` drives three curves: the likelihood that a
//! severe vulnerability survives pre-release testing, the same for a
//! non-severe vulnerability, and the revenue left on the table by waiting.
//! [`ReleaseModel`] is the abstract interface; [`ReleaseCurves`] is the
//! built-in parametric family (exponential decay for the residual
//! likelihoods, a concave quadratic for revenue). Any other implementation
//! is accepted as long as it passes the numeric shape check in
//! [`validate`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid intervals used by the numeric curve-shape check.
pub const SHAPE_GRID_INTERVALS: usize = 200;

/// Default time horizon.
pub const DEFAULT_T_MAX: f64 = 10.0;

/// Population sizes, effort-cost multipliers, rewards and vendor losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Expert white-hat hackers invited to the program.
    pub n: u32,
    /// Non-expert white-hat hackers.
    pub l: u32,
    /// Black-hat hackers.
    pub m: u32,
    /// Severity-adjusted effort cost multiplier of an expert white hat.
    pub c_w: f64,
    /// Severity-adjusted effort cost multiplier of a black hat.
    pub c_b: f64,
    /// Reputational gain of an expert white hat for the first severe find.
    pub r_s: f64,
    /// Illicit gain of a black hat from the first severe exploit.
    #[serde(rename = "W")]
    pub w: f64,
    /// Vendor loss when a black hat finds a severe bug first.
    #[serde(rename = "TC_s")]
    pub tc_s: f64,
    /// Vendor loss when a user stumbles on a non-severe bug.
    #[serde(rename = "TC_ns")]
    pub tc_ns: f64,
    /// Fraction of `TC_s` lost to uncoordinated disclosure without a program.
    pub x: f64,
}

impl MarketParams {
    /// Severe-contest population `n + m`.
    pub fn severe_pool(&self) -> f64 {
        f64::from(self.n) + f64::from(self.m)
    }

    /// Non-severe-contest population `n + l`.
    pub fn nonsevere_pool(&self) -> f64 {
        f64::from(self.n) + f64::from(self.l)
    }

    /// `W/c_b − r_s/c_w`, the quantity bracketed by Condition 1.
    pub fn incentive_gap(&self) -> f64 {
        self.w / self.c_b - self.r_s / self.c_w
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_m(mut self, m: u32) -> Self {
        self.m = m;
        self
    }
}

/// Severity class of a vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityClass {
    Severe,
    NonSevere,
}

/// The vendor's stage-1 choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VendorDecision {
    /// Release time.
    pub t: f64,
    /// Bounty for a severe vulnerability.
    pub p_s: f64,
    /// Bounty for a non-severe vulnerability.
    pub p_ns: f64,
}

impl VendorDecision {
    pub fn new(t: f64, p_s: f64, p_ns: f64) -> Self {
        Self { t, p_s, p_ns }
    }
}

/// Release-time curves: residual-vulnerability likelihoods and revenue.
///
/// Implementors must provide analytic slopes; [`validate`] checks them
/// against finite differences.
pub trait ReleaseModel: Send + Sync {
    /// End of the admissible release window `[0, t_max]`.
    fn horizon(&self) -> f64;

    /// Likelihood that a severe vulnerability survives to release.
    fn severe_residual(&self, t: f64) -> f64;
    fn severe_residual_slope(&self, t: f64) -> f64;

    /// Likelihood that a non-severe vulnerability survives to release.
    fn nonsevere_residual(&self, t: f64) -> f64;
    fn nonsevere_residual_slope(&self, t: f64) -> f64;

    fn revenue(&self, t: f64) -> f64;
    fn revenue_slope(&self, t: f64) -> f64;

    /// Violations detectable from the parameters alone, before sampling.
    fn parameter_violations(&self) -> Vec<Violation> {
        Vec::new()
    }
}

/// Built-in curves: `K_s(t) = K_s0·exp(−λ_s·t)`, the same form for
/// `K_ns`, and `R(t) = R0 − a·t − (b/2)·t²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseCurves {
    #[serde(rename = "K_s0")]
    pub k_s0: f64,
    pub lambda_s: f64,
    #[serde(rename = "K_ns0")]
    pub k_ns0: f64,
    pub lambda_ns: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}

impl ReleaseModel for ReleaseCurves {
    fn horizon(&self) -> f64 {
        self.t_max
    }

    fn severe_residual(&self, t: f64) -> f64 {
        self.k_s0 * (-self.lambda_s * t).exp()
    }

    fn severe_residual_slope(&self, t: f64) -> f64 {
        -self.lambda_s * self.severe_residual(t)
    }

    fn nonsevere_residual(&self, t: f64) -> f64 {
        self.k_ns0 * (-self.lambda_ns * t).exp()
    }

    fn nonsevere_residual_slope(&self, t: f64) -> f64 {
        -self.lambda_ns * self.nonsevere_residual(t)
    }

    fn revenue(&self, t: f64) -> f64 {
        self.r0 - self.a * t - 0.5 * self.b * t * t
    }

    fn revenue_slope(&self, t: f64) -> f64 {
        -self.a - self.b * t
    }

    fn parameter_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut require = |ok: bool, rule: &str, detail: String| {
            if !ok {
                out.push(Violation::new(rule, detail));
            }
        };
        require(
            self.k_s0 > 0.0 && self.k_s0 <= 1.0,
            "K_s0 ∈ (0,1]",
            format!("K_s0 = {}", self.k_s0),
        );
        require(
            self.lambda_s > 0.0,
            "λ_s > 0",
            format!("lambda_s = {}", self.lambda_s),
        );
        require(
            self.k_ns0 > 0.0 && self.k_ns0 <= 1.0,
            "K_ns0 ∈ (0,1]",
            format!("K_ns0 = {}", self.k_ns0),
        );
        require(
            self.lambda_ns > 0.0,
            "λ_ns > 0",
            format!("lambda_ns = {}", self.lambda_ns),
        );
        require(self.r0 > 0.0, "R0 > 0", format!("R0 = {}", self.r0));
        require(self.a > 0.0, "a > 0", format!("a = {}", self.a));
        require(self.b >= 0.0, "b ≥ 0", format!("b = {}", self.b));
        require(
            self.t_max > 0.0 && self.t_max.is_finite(),
            "t_max > 0",
            format!("t_max = {}", self.t_max),
        );
        out
    }
}

/// A broken invariant: a short rule label plus the offending values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub detail: String,
}

impl Violation {
    pub fn new(rule: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            rule: rule.into(),
            detail: detail.into(),
        }
    }
}

/// Outcome of [`validate`]. Violations fail the scenario; warnings do not.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn fail(&mut self, rule: &str, detail: String) {
        self.violations.push(Violation::new(rule, detail));
    }

    /// Checks a decision against the horizon of `curves`.
    pub fn check_decision<C: ReleaseModel + ?Sized>(
        &mut self,
        curves: &C,
        decision: &VendorDecision,
    ) {
        let t_max = curves.horizon();
        if !(decision.t >= 0.0 && decision.t <= t_max) {
            self.fail(
                "t ∈ [0, t_max]",
                format!("t = {}, t_max = {t_max}", decision.t),
            );
        }
        if !(decision.p_s.is_finite() && decision.p_s >= 0.0) {
            self.fail("p_s ≥ 0", format!("p_s = {}", decision.p_s));
        }
        if !(decision.p_ns.is_finite() && decision.p_ns >= 0.0) {
            self.fail("p_ns ≥ 0", format!("p_ns = {}", decision.p_ns));
        }
    }
}

/// Checks every market invariant and samples the curve shapes on
/// [`SHAPE_GRID_INTERVALS`]` + 1` points of `[0, t_max]`.
pub fn validate<C: ReleaseModel + ?Sized>(params: &MarketParams, curves: &C) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_market(params, &mut report);
    report.violations.extend(curves.parameter_violations());
    check_shapes(curves, &mut report);
    report
}

fn check_market(p: &MarketParams, report: &mut ValidationReport) {
    for (name, v) in [("n", p.n), ("l", p.l), ("m", p.m)] {
        if v < 1 {
            report.fail(&format!("{name} ≥ 1"), format!("{name} = {v}"));
        }
    }
    let reals = [
        ("c_w", p.c_w),
        ("c_b", p.c_b),
        ("r_s", p.r_s),
        ("W", p.w),
        ("TC_s", p.tc_s),
        ("TC_ns", p.tc_ns),
        ("x", p.x),
    ];
    for (name, v) in reals {
        if !v.is_finite() {
            report.fail(&format!("{name} finite"), format!("{name} = {v}"));
        }
    }
    if !(p.c_w > 1.0) {
        report.fail("c_w > 1", format!("c_w = {}", p.c_w));
    }
    if !(p.c_b > 1.0) {
        report.fail("c_b > 1", format!("c_b = {}", p.c_b));
    }
    if !(p.x > 0.0 && p.x < 1.0) {
        report.fail("x ∈ (0,1)", format!("x = {}", p.x));
    }
    if !(p.tc_ns > 0.0) {
        report.fail("TC_ns > 0", format!("TC_ns = {}", p.tc_ns));
    }
    if !(p.tc_s > p.tc_ns) {
        report.fail(
            "TC_s > TC_ns",
            format!("TC_s = {}, TC_ns = {}", p.tc_s, p.tc_ns),
        );
    } else if p.tc_s < 10.0 * p.tc_ns {
        report.warnings.push(format!(
            "TC_s = {} is less than ten times TC_ns = {}; severe losses are expected to dominate",
            p.tc_s, p.tc_ns
        ));
    }
    if !(p.r_s >= 0.0) {
        report.fail("r_s ≥ 0", format!("r_s = {}", p.r_s));
    }
    if !(p.w >= 0.0) {
        report.fail("W ≥ 0", format!("W = {}", p.w));
    }
}

fn check_shapes<C: ReleaseModel + ?Sized>(curves: &C, report: &mut ValidationReport) {
    let t_max = curves.horizon();
    if !(t_max > 0.0 && t_max.is_finite()) {
        report.fail("t_max > 0", format!("t_max = {t_max}"));
        return;
    }
    let h = t_max / SHAPE_GRID_INTERVALS as f64;
    let grid: Vec<f64> = (0..=SHAPE_GRID_INTERVALS).map(|i| i as f64 * h).collect();

    check_residual_curve(
        "K_s",
        &grid,
        |t| curves.severe_residual(t),
        |t| curves.severe_residual_slope(t),
        report,
    );
    check_residual_curve(
        "K_ns",
        &grid,
        |t| curves.nonsevere_residual(t),
        |t| curves.nonsevere_residual_slope(t),
        report,
    );

    let r: Vec<f64> = grid.iter().map(|&t| curves.revenue(t)).collect();
    let scale = r.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if let Some(i) = (1..r.len()).find(|&i| !(r[i] - r[i - 1] < 0.0)) {
        report.fail(
            "R′(t) < 0",
            format!("R does not decrease on [{}, {}]", grid[i - 1], grid[i]),
        );
    }
    if let Some(i) = (1..r.len() - 1).find(|&i| r[i + 1] - 2.0 * r[i] + r[i - 1] > 1e-12 * scale) {
        report.fail("R″(t) ≤ 0", format!("R is convex near t = {}", grid[i]));
    }
    let end = r[r.len() - 1];
    if !(end > 0.0) {
        report.fail("R(t_max) > 0", format!("R(t_max) = {end}"));
    }
    check_slope(
        "R",
        &grid,
        |t| curves.revenue(t),
        |t| curves.revenue_slope(t),
        report,
    );
}

fn check_residual_curve(
    name: &str,
    grid: &[f64],
    value: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    report: &mut ValidationReport,
) {
    let k: Vec<f64> = grid.iter().map(|&t| value(t)).collect();
    if let Some((i, v)) = k
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
    {
        report.fail(
            &format!("{name}(t) ∈ (0,1]"),
            format!("{name}({}) = {v}", grid[i]),
        );
    }
    if let Some(i) = (1..k.len()).find(|&i| !(k[i] - k[i - 1] < 0.0)) {
        report.fail(
            &format!("{name}′(t) < 0"),
            format!("{name} does not decrease on [{}, {}]", grid[i - 1], grid[i]),
        );
    }
    if let Some(i) = (1..k.len() - 1).find(|&i| !(k[i + 1] - 2.0 * k[i] + k[i - 1] >= -1e-15)) {
        report.fail(
            &format!("{name}″(t) > 0"),
            format!("{name} is concave near t = {}", grid[i]),
        );
    }
    check_slope(name, grid, value, slope, report);
}

fn check_slope(
    name: &str,
    grid: &[f64],
    value: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    report: &mut ValidationReport,
) {
    let h = 1e-6 * grid[grid.len() - 1];
    for &t in &grid[1..grid.len() - 1] {
        let fd = (value(t + h) - value(t - h)) / (2.0 * h);
        let an = slope(t);
        let scale = fd.abs().max(an.abs()).max(1e-8);
        if (fd - an).abs() > 1e-4 * scale {
            report.fail(
                &format!("{name} slope consistency"),
                format!("analytic slope {an} vs finite difference {fd} at t = {t}"),
            );
            return;
        }
    }
}

fn check_time<C: ReleaseModel + ?Sized>(curves: &C, t: f64) -> Result<()> {
    let t_max = curves.horizon();
    if t >= 0.0 && t <= t_max {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "release time {t} outside [0, {t_max}]"
        )))
    }
}

/// Severe residual likelihood `K_s(t)`, range-checked.
pub fn k_severe<C: ReleaseModel + ?Sized>(curves: &C, t: f64) -> Result<f64> {
    check_time(curves, t)?;
    Ok(curves.severe_residual(t))
}

/// Non-severe residual likelihood `K_ns(t)`, range-checked.
pub fn k_nonsevere<C: ReleaseModel + ?Sized>(curves: &C, t: f64) -> Result<f64> {
    check_time(curves, t)?;
    Ok(curves.nonsevere_residual(t))
}

/// Revenue `R(t)`, range-checked.
pub fn revenue<C: ReleaseModel + ?Sized>(curves: &C, t: f64) -> Result<f64> {
    check_time(curves, t)?;
    Ok(curves.revenue(t))
}
