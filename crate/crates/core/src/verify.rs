//! Randomized verification of the model's claims and identities.
//!
//! A [`FeasibleSampler`] produces parameter sets that satisfy every model
//! assumption at a sampled release time. Each check evaluates one claim on
//! every draw and returns a [`PropositionReport`]; failing draws carry the
//! full parameter set so they can be reproduced. Draws are evaluated in
//! parallel and aggregated by index, so reports are bit-identical for a
//! given seed.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hacker::{EffortProfile, FocalEffort, HackerStage, HackerType, Regime, ORACLE_STEP};
use crate::numerics::{central_difference, linspace};
use crate::ratio::{self, RESIDUAL_TOLERANCE};
use crate::scenario::{validate, MarketParams, ReleaseCurves, ReleaseModel, VendorDecision};
use crate::vendor::{
    bbp_closed_form, concentrated_profit, concentrated_slope, condition1, decomposition_at,
    no_bbp_at, no_bbp_probabilities, no_bbp_slope, optimal_bounties_at, optimal_release_no_bbp,
    optimal_release_with_bbp, profit_with_bbp_at, release_gap_fd, release_gap_term, Boundary,
    Exposure,
};

/// Inclusive sampling ranges. Integer ranges are uniform over the integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges {
    pub n: (u32, u32),
    pub l: (u32, u32),
    pub m: (u32, u32),
    pub c_w: (f64, f64),
    pub c_b: (f64, f64),
    pub r_s: (f64, f64),
    pub w: (f64, f64),
    pub tc_s: (f64, f64),
    pub tc_ns: (f64, f64),
    pub x: (f64, f64),
    pub k_s0: (f64, f64),
    pub lambda_s: (f64, f64),
    pub k_ns0: (f64, f64),
    pub lambda_ns: (f64, f64),
    pub r0: (f64, f64),
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub t_max: f64,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            n: (1, 10),
            l: (1, 20),
            m: (1, 10),
            c_w: (1.1, 5.0),
            c_b: (1.1, 5.0),
            r_s: (0.0, 5.0),
            w: (0.0, 20.0),
            tc_s: (10.0, 200.0),
            tc_ns: (0.1, 5.0),
            x: (0.05, 0.95),
            k_s0: (0.3, 1.0),
            lambda_s: (0.05, 0.5),
            k_ns0: (0.3, 1.0),
            lambda_ns: (0.05, 0.5),
            r0: (100.0, 500.0),
            a: (0.5, 10.0),
            b: (0.0, 1.0),
            t_max: 10.0,
        }
    }
}

/// One sampled scenario: market, curves, a release time and the optimal
/// bounties at that time (unclamped, so possibly negative in raw draws).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub index: u64,
    pub params: MarketParams,
    pub curves: ReleaseCurves,
    pub t: f64,
    pub decision: VendorDecision,
}

impl Draw {
    pub fn exposure(&self) -> Exposure {
        Exposure::at(&self.curves, self.t)
    }

    pub fn stage(&self) -> HackerStage {
        HackerStage::new(&self.params, &self.decision, &self.curves)
    }
}

/// Rejection sampler over [`SamplingRanges`].
///
/// Draw `i` comes from ChaCha8 seeded with `seed_from_u64(seed)` on stream
/// `i`; rejected candidates are redrawn from the same stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSampler {
    pub seed: u64,
    pub ranges: SamplingRanges,
    pub max_attempts: u32,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl FeasibleSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ranges: SamplingRanges::default(),
            max_attempts: 100_000,
        }
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn candidate(&self, index: u64, rng: &mut ChaCha8Rng) -> Draw {
        let r = &self.ranges;
        let mut int = |(lo, hi): (u32, u32)| rng.random_range(lo..=hi);
        let (n, l, m) = (int(r.n), int(r.l), int(r.m));
        let mut real = |(lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        let params = MarketParams {
            n,
            l,
            m,
            c_w: real(r.c_w),
            c_b: real(r.c_b),
            r_s: real(r.r_s),
            w: real(r.w),
            tc_s: real(r.tc_s),
            tc_ns: real(r.tc_ns),
            x: real(r.x),
        };
        let curves = ReleaseCurves {
            k_s0: real(r.k_s0),
            lambda_s: real(r.lambda_s),
            k_ns0: real(r.k_ns0),
            lambda_ns: real(r.lambda_ns),
            r0: real(r.r0),
            a: real(r.a),
            b: real(r.b),
            t_max: r.t_max,
        };
        let t = real((0.0, r.t_max));
        let bounties = optimal_bounties_at(&params, curves.severe_residual(t))
            .expect("sampled residual likelihoods are positive");
        Draw {
            index,
            params,
            curves,
            t,
            decision: VendorDecision::new(t, bounties.p_s, bounties.p_ns),
        }
    }

    /// First candidate of stream `index`, with no rejection.
    pub fn raw_draw(&self, index: u64) -> Draw {
        self.candidate(index, &mut self.rng(index))
    }

    /// First candidate of stream `index` that passes [`rejection_reason`].
    pub fn draw(&self, index: u64) -> Result<Draw> {
        let mut rng = self.rng(index);
        for _ in 0..self.max_attempts {
            let d = self.candidate(index, &mut rng);
            if rejection_reason(&d).is_none() {
                return Ok(d);
            }
        }
        Err(Error::Infeasible(format!(
            "no feasible draw on stream {index} after {} attempts",
            self.max_attempts
        )))
    }

    /// Draws `start..start + count`.
    pub fn draws_from(&self, start: u64, count: usize) -> Result<Vec<Draw>> {
        (start..start + count as u64)
            .into_par_iter()
            .map(|i| self.draw(i))
            .collect()
    }

    pub fn draws(&self, count: usize) -> Result<Vec<Draw>> {
        self.draws_from(0, count)
    }
}

/// Why a candidate is not a feasible draw, or `None` if it is.
///
/// A feasible draw passes [`validate`], satisfies Condition 1 at its
/// release time, puts the hackers in the corner regime at the optimal
/// bounties with efforts in `[0, 1]`, and has unclipped success
/// probabilities with and without a program.
pub fn rejection_reason(d: &Draw) -> Option<&'static str> {
    if !validate(&d.params, &d.curves).passed() {
        return Some("validation");
    }
    match condition1(&d.params, &d.curves, d.t) {
        Ok(c) if c.feasible => {}
        _ => return Some("condition 1"),
    }
    let stage = d.stage();
    if stage.select_regime() != Regime::Corner {
        return Some("interior regime");
    }
    let efforts = stage.corner_equilibrium();
    if !efforts.feasible {
        return Some("efforts outside [0, 1]");
    }
    let probs = stage.success_probabilities(&efforts);
    if probs.clipped || f64::from(d.params.l) * probs.p_ne_ns > 1.0 {
        return Some("clipped probabilities");
    }
    let (_, _, raw_e, raw_b) = no_bbp_probabilities(&d.params, stage.k_s);
    if !(0.0..=1.0).contains(&raw_e) || !(0.0..=1.0).contains(&raw_b) {
        return Some("clipped no-program probabilities");
    }
    None
}

/// A draw on which a check failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub detail: String,
    pub draw: Draw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub id: String,
    pub draws_tested: usize,
    /// Draws outside the check's precondition, by reason.
    pub excluded: BTreeMap<String, usize>,
    pub failures: Vec<Failure>,
    pub pass: bool,
    /// Smallest and median slack over tested draws; positive means the
    /// claim held with room to spare.
    pub min_margin: Option<f64>,
    pub median_margin: Option<f64>,
}

impl PropositionReport {
    pub fn excluded_total(&self) -> usize {
        self.excluded.values().sum()
    }
}

/// Outcome of one check on one draw.
#[derive(Debug, Clone)]
enum Outcome {
    Pass(f64),
    Fail(f64, String),
    Excluded(String),
}

impl Outcome {
    /// Pass when `margin > 0`.
    fn from_margin(margin: f64, detail: impl FnOnce() -> String) -> Self {
        if margin > 0.0 {
            Outcome::Pass(margin)
        } else {
            Outcome::Fail(margin, detail())
        }
    }

    /// Pass when `error ≤ tol`; the margin is `tol − error`.
    fn within(error: f64, tol: f64, detail: impl FnOnce() -> String) -> Self {
        if error <= tol {
            Outcome::Pass(tol - error)
        } else {
            Outcome::Fail(tol - error, detail())
        }
    }

    fn excluded(reason: impl Into<String>) -> Self {
        Outcome::Excluded(reason.into())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Evaluates `eval` on every draw; `eval` returns one outcome per id.
fn run_checks<F>(ids: &[&str], draws: &[Draw], eval: F) -> Vec<PropositionReport>
where
    F: Fn(&Draw) -> Vec<Outcome> + Sync,
{
    let results: Vec<Vec<Outcome>> = draws.par_iter().map(&eval).collect();
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let mut excluded = BTreeMap::new();
            let mut failures = Vec::new();
            let mut margins = Vec::new();
            for (draw, outcomes) in draws.iter().zip(&results) {
                match &outcomes[k] {
                    Outcome::Pass(m) => margins.push(*m),
                    Outcome::Fail(m, detail) => {
                        margins.push(*m);
                        failures.push(Failure {
                            detail: detail.clone(),
                            draw: *draw,
                        });
                    }
                    Outcome::Excluded(reason) => *excluded.entry(reason.clone()).or_insert(0) += 1,
                }
            }
            PropositionReport {
                id: id.to_string(),
                draws_tested: margins.len(),
                excluded,
                pass: failures.is_empty(),
                failures,
                min_margin: margins.iter().copied().min_by(f64::total_cmp),
                median_margin: median(margins),
            }
        })
        .collect()
}

fn single(id: &str, draws: &[Draw], eval: impl Fn(&Draw) -> Outcome + Sync) -> PropositionReport {
    run_checks(&[id], draws, |d| vec![eval(d)]).remove(0)
}

/// Tolerances of every numeric check. Overriding one with a negative value
/// forces that check to fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub equilibrium_oracle: f64,
    pub normalization: f64,
    pub crossing: f64,
    pub decomposition: f64,
    pub profit_forms: f64,
    pub continuity: f64,
    pub no_program_specialization: f64,
    pub foc_relative: f64,
    pub ratio_fd_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equilibrium_oracle: 1e-3,
            normalization: 1e-12,
            crossing: 1e-9,
            decomposition: 1e-9,
            profit_forms: 1e-9,
            continuity: 1e-9,
            no_program_specialization: 1e-12,
            foc_relative: 1e-4,
            ratio_fd_relative: 1e-3,
        }
    }
}

impl Tolerances {
    /// Sets the tolerance named `name` (a field name).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "equilibrium_oracle" => &mut self.equilibrium_oracle,
            "normalization" => &mut self.normalization,
            "crossing" => &mut self.crossing,
            "decomposition" => &mut self.decomposition,
            "profit_forms" => &mut self.profit_forms,
            "continuity" => &mut self.continuity,
            "no_program_specialization" => &mut self.no_program_specialization,
            "foc_relative" => &mut self.foc_relative,
            "ratio_fd_relative" => &mut self.ratio_fd_relative,
            _ => return Err(Error::Domain(format!("unknown tolerance `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

/// Grid best responses against the closed-form efforts.
///
/// Each draw is tested twice: at its optimal bounties (corner regime) and
/// at a non-severe bounty that puts the expert white hats halfway inside
/// the interior regime. Every hacker type's grid best response to the
/// closed-form profile must sit within `tol` of its closed-form effort.
pub fn verify_equilibrium_oracle(draws: &[Draw], tol: f64) -> Vec<PropositionReport> {
    run_checks(
        &["equilibrium-oracle-corner", "equilibrium-oracle-interior"],
        draws,
        |d| {
            let corner = d.stage();
            let severe_stake = corner.k_s * (d.params.r_s + corner.p_s) / d.params.severe_pool();
            let interior_stake = severe_stake * (1.0 + d.params.c_w) / (2.0 * d.params.c_w);
            let interior = HackerStage {
                p_ns: interior_stake * d.params.nonsevere_pool() / corner.k_ns,
                ..corner
            };
            vec![
                oracle_outcome(&corner, Regime::Corner, tol),
                oracle_outcome(&interior, Regime::Interior, tol),
            ]
        },
    )
}

fn oracle_outcome(stage: &HackerStage, expected: Regime, tol: f64) -> Outcome {
    if stage.select_regime() != expected {
        return Outcome::excluded("regime differs from the one under test");
    }
    let profile = match stage.equilibrium() {
        Ok(p) => p,
        Err(e) => return Outcome::excluded(e.to_string()),
    };
    if !profile.feasible {
        return Outcome::excluded("closed-form efforts outside the oracle grid [0, 1]");
    }
    match oracle_deviation(stage, &profile) {
        Ok((dev, label)) => Outcome::within(dev, tol, || {
            format!("{label}: grid best response is {dev:e} from the closed form {profile:?}")
        }),
        Err(e) => Outcome::excluded(e.to_string()),
    }
}

/// Largest distance between a grid best response and the closed form.
fn oracle_deviation(stage: &HackerStage, profile: &EffortProfile) -> Result<(f64, &'static str)> {
    let mut worst = (0.0, "");
    for t in [
        HackerType::ExpertWhite,
        HackerType::NoviceWhite,
        HackerType::Black,
    ] {
        let best = stage.best_response_oracle(profile, t, ORACLE_STEP)?;
        let closed = FocalEffort::from_profile(profile, t);
        let dev = match (best, closed) {
            (
                FocalEffort::ExpertWhite { severe, nonsevere },
                FocalEffort::ExpertWhite {
                    severe: s,
                    nonsevere: ns,
                },
            ) => (severe - s).abs().max((nonsevere - ns).abs()),
            (
                FocalEffort::NoviceWhite { nonsevere },
                FocalEffort::NoviceWhite { nonsevere: ns },
            ) => (nonsevere - ns).abs(),
            (FocalEffort::Black { severe }, FocalEffort::Black { severe: s }) => (severe - s).abs(),
            _ => unreachable!("oracle returns the requested type"),
        };
        if dev > worst.0 {
            worst = (
                dev,
                match t {
                    HackerType::ExpertWhite => "expert white hat",
                    HackerType::NoviceWhite => "non-expert white hat",
                    HackerType::Black => "black hat",
                },
            );
        }
    }
    Ok(worst)
}

/// `n·P_e + m·P_b = 1` at each draw's optimal bounties.
pub fn verify_normalization(draws: &[Draw], tol: f64) -> PropositionReport {
    single("normalization", draws, |d| {
        let stage = d.stage();
        let probs = stage.success_probabilities(&stage.corner_equilibrium());
        if probs.clipped {
            return Outcome::excluded("clipped probabilities");
        }
        let total = f64::from(d.params.n) * probs.p_e_s + f64::from(d.params.m) * probs.p_b_s;
        Outcome::within((total - 1.0).abs(), tol, || {
            format!("n·P_e + m·P_b = {total:.17}")
        })
    })
}

/// One point of the success-probability sweep in the severe bounty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub p_s: f64,
    pub alpha_s: f64,
    pub mu_s: f64,
    pub p_e_s: f64,
    pub p_b_s: f64,
}

/// Corner-regime efforts and severe success probabilities along `grid`,
/// with everything else held at the values implied by `t`.
pub fn figure1_sweep<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
    bounty_grid: &[f64],
) -> Vec<Figure1Row> {
    let (k_s, k_ns) = (curves.severe_residual(t), curves.nonsevere_residual(t));
    figure1_at(params, k_s, k_ns, bounty_grid)
}

/// [`figure1_sweep`] at given residual likelihoods.
pub fn figure1_at(
    params: &MarketParams,
    k_s: f64,
    k_ns: f64,
    bounty_grid: &[f64],
) -> Vec<Figure1Row> {
    let p_ns = 0.5 * params.tc_ns;
    bounty_grid
        .iter()
        .map(|&p_s| {
            let stage = HackerStage::at_exposure(params, k_s, k_ns, p_s, p_ns);
            let eq = stage.corner_equilibrium();
            let probs = stage.success_probabilities(&eq);
            Figure1Row {
                p_s,
                alpha_s: eq.alpha_s,
                mu_s: eq.mu_s,
                p_e_s: probs.p_e_s,
                p_b_s: probs.p_b_s,
            }
        })
        .collect()
}

/// First bounty where the two success curves meet, by linear
/// interpolation between grid points.
pub fn figure1_crossing(rows: &[Figure1Row]) -> Option<f64> {
    let diff = |r: &Figure1Row| r.p_e_s - r.p_b_s;
    if rows.first().map(diff) == Some(0.0) {
        return rows.first().map(|r| r.p_s);
    }
    rows.windows(2).find_map(|w| {
        let (a, b) = (diff(&w[0]), diff(&w[1]));
        if b == 0.0 {
            Some(w[1].p_s)
        } else if (a < 0.0) != (b < 0.0) {
            Some(w[0].p_s - a * (w[1].p_s - w[0].p_s) / (b - a))
        } else {
            None
        }
    })
}

/// Header plus one record per row; comma separated, shortest round-trip
/// decimal formatting, LF line endings.
pub fn write_figure1_csv<W: Write>(rows: &[Figure1Row], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Domain(format!("writing CSV: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::Domain(format!("writing CSV: {e}")))
}

fn interior_probability(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// The expert's severe effort and success probability rise, and the black
/// hat's success probability falls, as the severe bounty grows along
/// `bounty_grid`. Strict where neither endpoint is clipped.
pub fn verify_proposition_1(draws: &[Draw], bounty_grid: &[f64]) -> Result<PropositionReport> {
    if bounty_grid.len() < 10 || bounty_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "the bounty grid must be strictly increasing with at least 10 points".into(),
        ));
    }
    Ok(single("proposition-1", draws, |d| {
        let e = d.exposure();
        let rows = figure1_at(&d.params, e.k_s, e.k_ns, bounty_grid);
        let mut margin = f64::INFINITY;
        for w in rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let strict_e = interior_probability(a.p_e_s) && interior_probability(b.p_e_s);
            let strict_b = interior_probability(a.p_b_s) && interior_probability(b.p_b_s);
            let steps = [
                ("alpha_s", b.alpha_s - a.alpha_s, true),
                ("p_e_s", b.p_e_s - a.p_e_s, strict_e),
                ("p_b_s", a.p_b_s - b.p_b_s, strict_b),
            ];
            for (name, rise, strict) in steps {
                let ok = if strict { rise > 0.0 } else { rise >= 0.0 };
                if !ok {
                    return Outcome::Fail(
                        rise,
                        format!(
                            "{name} moves the wrong way between p_s = {} and {}",
                            a.p_s, b.p_s
                        ),
                    );
                }
                if strict {
                    margin = margin.min(rise);
                }
            }
        }
        Outcome::Pass(margin)
    }))
}

/// The success curves cross at `p_s = c_w·W/c_b − r_s`.
pub fn verify_figure1_crossing(draws: &[Draw], bounty_grid: &[f64], tol: f64) -> PropositionReport {
    let (lo, hi) = (bounty_grid[0], bounty_grid[bounty_grid.len() - 1]);
    single("figure-1-crossing", draws, |d| {
        let expected = d.params.c_w * d.params.w / d.params.c_b - d.params.r_s;
        if !(expected > lo && expected < hi) {
            return Outcome::excluded("crossing outside the bounty grid");
        }
        let e = d.exposure();
        let rows = figure1_at(&d.params, e.k_s, e.k_ns, bounty_grid);
        let i = bounty_grid.partition_point(|&p| p <= expected);
        let around = &rows[i.saturating_sub(1)..(i + 1).min(rows.len())];
        if around
            .iter()
            .any(|r| !interior_probability(r.p_e_s) || !interior_probability(r.p_b_s))
        {
            return Outcome::excluded("probabilities clipped next to the crossing");
        }
        match figure1_crossing(&rows) {
            Some(found) => Outcome::within((found - expected).abs(), tol, || {
                format!("curves cross at {found}, expected {expected}")
            }),
            None => Outcome::Fail(
                -tol,
                format!("no crossing found; expected one at {expected}"),
            ),
        }
    })
}

/// A program with positive bounties beats no program at the same release
/// time, and the profit gap equals the three decomposition gains.
pub fn verify_proposition_2(draws: &[Draw], decomposition_tol: f64) -> Vec<PropositionReport> {
    run_checks(&["proposition-2", "decomposition-residual"], draws, |d| {
        if !(d.decision.p_s > 0.0 && d.decision.p_ns > 0.0) {
            let r = "optimal bounties not positive";
            return vec![Outcome::excluded(r), Outcome::excluded(r)];
        }
        match decomposition_at(&d.params, &d.exposure()) {
            Ok(dec) => vec![
                Outcome::from_margin(dec.with_bbp - dec.without_bbp, || {
                    format!(
                        "Π_b = {} is not above Π_nb = {}",
                        dec.with_bbp, dec.without_bbp
                    )
                }),
                Outcome::within(dec.residual.abs(), decomposition_tol, || {
                    format!("decomposition residual {:e}", dec.residual)
                }),
            ],
            Err(e) => vec![
                Outcome::excluded(e.to_string()),
                Outcome::excluded(e.to_string()),
            ],
        }
    })
}

/// Relative error with a floor on the scale, for comparing slopes near
/// their roots.
fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// True if the no-program probabilities keep their clipping status on
/// `[t − h, t + h]`, so the profit is smooth there.
fn no_program_smooth<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    curves: &C,
    t: f64,
    h: f64,
) -> bool {
    let sign = |s: f64| {
        let (_, _, e, b) = no_bbp_probabilities(params, curves.severe_residual(s));
        (e > 0.0, b > 0.0)
    };
    sign(t - h) == sign(t) && sign(t) == sign(t + h)
}

/// The program releases earlier, the release-gap term is negative at the
/// no-program optimum, and the analytic release-time slopes agree with
/// finite differences.
///
/// Draws where either optimum sits on a boundary (or an optimizer reports
/// a non-concave objective or no viable window) are excluded, not failed.
pub fn verify_proposition_3(draws: &[Draw], foc_tol: f64) -> Vec<PropositionReport> {
    let ids = ["proposition-3", "release-gap-sign", "release-foc"];
    run_checks(&ids, draws, |d| {
        let (p, c) = (&d.params, &d.curves);
        let both = |o: Outcome| vec![o.clone(), o];
        let nb = match optimal_release_no_bbp(p, c) {
            Ok(o) if o.interior => o,
            Ok(o) => {
                let r = format!(
                    "no-program optimum on boundary {:?}",
                    o.boundary.unwrap_or(Boundary::Start)
                );
                return [
                    both(Outcome::excluded(r)),
                    vec![foc_outcome(d, None, None, foc_tol)],
                ]
                .concat();
            }
            Err(e) => {
                let r = format!("no-program optimizer: {}", error_kind(&e));
                return [
                    both(Outcome::excluded(r)),
                    vec![foc_outcome(d, None, None, foc_tol)],
                ]
                .concat();
            }
        };
        let b = match optimal_release_with_bbp(p, c) {
            Ok(o) if o.interior => o,
            Ok(o) => {
                let r = format!(
                    "program optimum on boundary {:?}",
                    o.boundary.unwrap_or(Boundary::Start)
                );
                return [
                    both(Outcome::excluded(r)),
                    vec![foc_outcome(d, Some(nb.t), None, foc_tol)],
                ]
                .concat();
            }
            Err(e) => {
                let r = format!("program optimizer: {}", error_kind(&e));
                return [
                    both(Outcome::excluded(r)),
                    vec![foc_outcome(d, Some(nb.t), None, foc_tol)],
                ]
                .concat();
            }
        };
        let gap = release_gap_term(p, c, nb.t);
        vec![
            Outcome::from_margin(nb.t - b.t, || {
                format!("t_b* = {} is not before t_nb* = {}", b.t, nb.t)
            }),
            Outcome::from_margin(-gap, || {
                format!("D(t_nb* = {}) = {gap} is not negative", nb.t)
            }),
            foc_outcome(d, Some(nb.t), Some(b.t), foc_tol),
        ]
    })
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NonConcave { .. } => "non-concave objective",
        Error::NoViableProgram(_) => "no viable program",
        _ => "optimizer error",
    }
}

/// Analytic slopes against central differences at the draw's release
/// time and at whichever optima are available.
fn foc_outcome(d: &Draw, t_nb: Option<f64>, t_b: Option<f64>, tol: f64) -> Outcome {
    let (p, c) = (&d.params, &d.curves);
    let h = 1e-5 * c.t_max;
    let inside = |t: f64| t - h >= 0.0 && t + h <= c.t_max;
    let no_program = |s: f64| no_bbp_at(p, &Exposure::at(c, s)).total;
    let with_program = |s: f64| concentrated_profit(p, c, s).unwrap_or(f64::NAN);
    let mut worst: (f64, String) = (0.0, String::new());
    let mut checked = 0;
    let mut compare = |label: &str, t: f64, analytic: f64, fd: f64| {
        let e = rel_err(analytic, fd, c.revenue_slope(t).abs());
        checked += 1;
        if e >= worst.0 {
            worst = (
                e,
                format!("{label} at t = {t}: analytic {analytic}, finite difference {fd}"),
            );
        }
    };
    let points: Vec<f64> = [Some(d.t), t_nb, t_b]
        .into_iter()
        .flatten()
        .filter(|&t| inside(t))
        .collect();
    for t in points {
        if !no_program_smooth(p, c, t, h) {
            continue;
        }
        compare(
            "no-program slope",
            t,
            no_bbp_slope(p, c, t),
            central_difference(no_program, t, h),
        );
        compare(
            "concentrated slope",
            t,
            concentrated_slope(p, c, t),
            central_difference(with_program, t, h),
        );
        if let Ok(fd) = release_gap_fd(p, c, t, h) {
            compare("release gap", t, release_gap_term(p, c, t), fd);
        }
    }
    if checked == 0 {
        return Outcome::excluded("no smooth point to differentiate at");
    }
    let (e, detail) = worst;
    Outcome::within(e, tol, || format!("relative error {e:e}: {detail}"))
}

/// Grid maximization of the closed-form profit over `(p_s, p_ns)`.
///
/// The grid spans `[0, TC_s + c_w·W/c_b] × [0, TC_ns]` with `intervals`
/// steps per axis; the closed-form optimum must lie within half a step of
/// the grid maximizer on each axis.
pub fn verify_bounty_oracle(draws: &[Draw], intervals: usize) -> PropositionReport {
    single("bounty-oracle", draws, |d| {
        let e = d.exposure();
        let p = &d.params;
        let ps_grid = linspace(0.0, p.tc_s + p.c_w * p.w / p.c_b, intervals);
        let pns_grid = linspace(0.0, p.tc_ns, intervals);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for &ps in &ps_grid {
            for &pns in &pns_grid {
                let v = bbp_closed_form(p, &e, ps, pns).total;
                if v > best.0 {
                    best = (v, ps, pns);
                }
            }
        }
        let closed = match optimal_bounties_at(p, e.k_s) {
            Ok(b) => b,
            Err(err) => return Outcome::excluded(err.to_string()),
        };
        let half_s = 0.5 * (ps_grid[1] - ps_grid[0]);
        let half_ns = 0.5 * (pns_grid[1] - pns_grid[0]);
        let slack = (half_s - (best.1 - closed.p_s).abs()) / half_s;
        let slack_ns = (half_ns - (best.2 - closed.p_ns).abs()) / half_ns;
        // the grid maximizer is the nearest point, so ties sit at exactly half a step
        let margin = slack.min(slack_ns) + 1e-9;
        Outcome::from_margin(margin, || {
            format!(
                "grid maximizer ({}, {}) vs closed form ({}, {})",
                best.1, best.2, closed.p_s, closed.p_ns
            )
        })
    })
}

/// `ub > lb` on raw (unfiltered) draws.
pub fn verify_condition1_ordering(sampler: &FeasibleSampler, count: usize) -> PropositionReport {
    let draws: Vec<Draw> = (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.raw_draw(i))
        .collect();
    single("condition-1-ordering", &draws, |d| {
        match condition1(&d.params, &d.curves, d.t) {
            Ok(c) => Outcome::from_margin(c.ub - c.lb, || {
                format!("ub = {} is not above lb = {}", c.ub, c.lb)
            }),
            Err(e) => Outcome::excluded(e.to_string()),
        }
    })
}

/// Fraction of raw draws that satisfy Condition 1 at their release time.
pub fn condition1_feasible_share(sampler: &FeasibleSampler, count: usize) -> f64 {
    let hits = (0..count as u64)
        .into_par_iter()
        .filter(|&i| {
            let d = sampler.raw_draw(i);
            condition1(&d.params, &d.curves, d.t)
                .map(|c| c.feasible)
                .unwrap_or(false)
        })
        .count();
    hits as f64 / count as f64
}

/// Ratio-form equilibrium: convergence, then the signs of the bounty
/// sensitivities and their agreement with finite differences of the
/// re-solved equilibrium.
pub fn verify_ratio_form(draws: &[Draw], fd_tol: f64) -> Vec<PropositionReport> {
    run_checks(&["ratio-convergence", "ratio-sensitivity"], draws, |d| {
        let k_s = d.exposure().k_s;
        let p_s = d.decision.p_s;
        let eq = match ratio::solve_at(&d.params, k_s, p_s, None) {
            Ok(eq) => eq,
            Err(Error::Domain(msg)) => {
                let r = format!("no ratio-form equilibrium: {}", ratio_exclusion(&msg));
                return vec![Outcome::excluded(r.clone()), Outcome::excluded(r)];
            }
            Err(e) => {
                return vec![
                    Outcome::Fail(-1.0, e.to_string()),
                    Outcome::excluded("solver failed"),
                ]
            }
        };
        let residual = eq.residual_alpha.abs().max(eq.residual_mu.abs());
        let convergence = Outcome::within(residual, RESIDUAL_TOLERANCE, || {
            format!("residual {residual:e} after {} iterations", eq.iterations)
        });
        let sens = match ratio::sensitivities_at(&d.params, k_s, p_s, &eq) {
            Ok(s) => s,
            Err(e) => return vec![convergence, Outcome::Fail(-1.0, e.to_string())],
        };
        let h = 1e-4 * p_s.max(1.0);
        let solve = |p: f64| ratio::solve_at(&d.params, k_s, p, Some((eq.alpha_s, eq.mu_s)));
        let (up, down) = match (solve(p_s + h), solve(p_s - h)) {
            (Ok(u), Ok(dn)) => (u, dn),
            _ => {
                return vec![
                    convergence,
                    Outcome::Fail(-1.0, "re-solve for finite difference failed".into()),
                ]
            }
        };
        let fd_alpha = (up.alpha_s - down.alpha_s) / (2.0 * h);
        let fd_mu = (up.mu_s - down.mu_s) / (2.0 * h);
        let err = rel_err(sens.d_alpha_dps, fd_alpha, 0.0).max(rel_err(sens.d_mu_dps, fd_mu, 0.0));
        let sign_margin = sens
            .d_alpha_dps
            .min(-sens.d_mu_dps)
            .min(fd_alpha)
            .min(-fd_mu);
        let sensitivity = if sign_margin <= 0.0 {
            Outcome::Fail(
                sign_margin,
                format!(
                    "wrong sign: analytic ({}, {}), finite difference ({fd_alpha}, {fd_mu})",
                    sens.d_alpha_dps, sens.d_mu_dps
                ),
            )
        } else {
            Outcome::within(err, fd_tol, || {
                format!(
                    "analytic ({}, {}) vs finite difference ({fd_alpha}, {fd_mu})",
                    sens.d_alpha_dps, sens.d_mu_dps
                )
            })
        };
        vec![convergence, sensitivity]
    })
}

fn ratio_exclusion(msg: &str) -> &'static str {
    if msg.contains("n = 1") || msg.contains("m = 1") {
        "single hacker on one side"
    } else if msg.contains("W > 0") {
        "no black-hat reward"
    } else {
        "domain"
    }
}

/// Algebraic identities: the two profit forms agree, the corner and
/// interior efforts meet at the regime boundary, and the no-program
/// probabilities are the zero-bounty case of the program probabilities.
pub fn identity_suite(draws: &[Draw], tol: &Tolerances) -> Vec<PropositionReport> {
    let ids = [
        "profit-forms",
        "regime-continuity",
        "no-program-specialization",
    ];
    run_checks(&ids, draws, |d| {
        let e = d.exposure();
        let bbp = profit_with_bbp_at(&d.params, &e, d.decision.p_s, d.decision.p_ns);
        let gap = (bbp.breakdown.total - bbp.probability_form.total).abs();
        let forms = Outcome::within(
            gap / bbp.breakdown.total.abs().max(1.0),
            tol.profit_forms,
            || {
                format!(
                    "closed form {} vs probability form {}",
                    bbp.breakdown.total, bbp.probability_form.total
                )
            },
        );

        let stage = d.stage();
        let severe_stake = stage.k_s * (d.params.r_s + stage.p_s) / d.params.severe_pool();
        let tie = HackerStage {
            p_ns: severe_stake / d.params.c_w * d.params.nonsevere_pool() / stage.k_ns,
            ..stage
        };
        let continuity = match tie.interior_equilibrium() {
            Ok(inner) => {
                let outer = tie.corner_equilibrium();
                let jump = (inner.alpha_s - outer.alpha_s)
                    .abs()
                    .max((inner.alpha_ns - outer.alpha_ns).abs())
                    .max((inner.mu_s - outer.mu_s).abs());
                Outcome::within(jump, tol.continuity, || {
                    format!("corner {outer:?} vs interior {inner:?} at the boundary")
                })
            }
            Err(err) => Outcome::excluded(err.to_string()),
        };

        let zero = HackerStage { p_s: 0.0, ..stage };
        let probs = zero.success_probabilities(&zero.corner_equilibrium());
        let (p_e, p_b, raw_e, raw_b) = no_bbp_probabilities(&d.params, stage.k_s);
        let specialization = if probs.clipped || p_e != raw_e || p_b != raw_b {
            Outcome::excluded("clipped at zero bounty")
        } else {
            let err = (probs.p_e_s - p_e).abs().max((probs.p_b_s - p_b).abs());
            Outcome::within(err, tol.no_program_specialization, || {
                format!(
                    "zero-bounty ({}, {}) vs no-program ({p_e}, {p_b})",
                    probs.p_e_s, probs.p_b_s
                )
            })
        };
        vec![forms, continuity, specialization]
    })
}

/// Settings for [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub draws: usize,
    pub tolerances: Tolerances,
    pub bounty_grid: Vec<f64>,
    pub bounty_oracle_draws: usize,
    pub bounty_oracle_intervals: usize,
    pub condition1_draws: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64, draws: usize) -> Self {
        Self {
            seed,
            draws,
            tolerances: Tolerances::default(),
            bounty_grid: linspace(0.0, 150.0, 49),
            bounty_oracle_draws: 200.min(draws),
            bounty_oracle_intervals: 1000,
            condition1_draws: 10 * draws,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub reports: Vec<PropositionReport>,
    pub pass: bool,
}

/// Every check on one sampled population.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let sampler = FeasibleSampler::new(config.seed);
    let draws = sampler.draws(config.draws)?;
    let tol = &config.tolerances;
    let mut reports = verify_equilibrium_oracle(&draws, tol.equilibrium_oracle);
    reports.push(verify_normalization(&draws, tol.normalization));
    reports.push(verify_proposition_1(&draws, &config.bounty_grid)?);
    reports.push(verify_figure1_crossing(
        &draws,
        &config.bounty_grid,
        tol.crossing,
    ));
    reports.extend(verify_proposition_2(&draws, tol.decomposition));
    reports.extend(verify_proposition_3(&draws, tol.foc_relative));
    reports.push(verify_bounty_oracle(
        &draws[..config.bounty_oracle_draws.min(draws.len())],
        config.bounty_oracle_intervals,
    ));
    reports.push(verify_condition1_ordering(
        &sampler,
        config.condition1_draws,
    ));
    reports.extend(verify_ratio_form(&draws, tol.ratio_fd_relative));
    reports.extend(identity_suite(&draws, tol));
    let pass = reports.iter().all(|r| r.pass);
    Ok(SuiteReport {
        config: config.clone(),
        reports,
        pass,
    })
}
