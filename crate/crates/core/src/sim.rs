//! Event-level Monte Carlo simulation of a single release.
//!
//! Each trial draws four uniforms: whether a severe bug survives to
//! release, who finds it first, whether a non-severe bug survives, and who
//! finds that one. Costs follow the vendor profit accounting, so the mean
//! profit converges to the analytic expected profit.
//!
//! The random source is ChaCha8 (`rand_chacha::ChaCha8Rng`). Trials are cut
//! into partitions of [`PARTITION_SIZE`]; partition `k` draws from the
//! generator seeded with `seed_from_u64(seed)` on stream `k`. Partitions run
//! in parallel and are merged in index order, so the outcome depends only
//! on `(seed, trials)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hacker::{HackerStage, Regime};
use crate::numerics::CompensatedSum;
use crate::scenario::{MarketParams, ReleaseModel, VendorDecision};
use crate::vendor::{no_bbp_probabilities, Exposure};

pub const PARTITION_SIZE: u64 = 1 << 16;

/// Tolerance on `n·P_e + m·P_b = 1` before a simulation is refused.
const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    WithBbp,
    WithoutBbp,
}

/// Probabilities of the six trial events and the profit they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRates {
    pub severe_by_expert: f64,
    pub severe_by_black: f64,
    pub severe_absent: f64,
    pub nonsevere_by_novice: f64,
    pub nonsevere_by_user: f64,
    pub nonsevere_absent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub mode: SimMode,
    pub seed: u64,
    pub trials: u64,
    pub frequencies: EventRates,
    pub mean_profit: f64,
    /// Standard error of `mean_profit`.
    pub std_error: f64,
}

/// Analytic counterpart of a [`SimOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedOutcome {
    pub mode: SimMode,
    pub rates: EventRates,
    pub revenue: f64,
    pub expected_profit: f64,
}

/// Per-trial conditional probabilities and costs.
#[derive(Debug, Clone, Copy)]
struct TrialModel {
    k_s: f64,
    k_ns: f64,
    /// `n·P_e`, the chance an expert white hat finds an existing severe bug first.
    expert_share: f64,
    /// `l·P_ne`; zero without a program.
    novice_share: f64,
    cost_expert: f64,
    cost_black: f64,
    cost_novice: f64,
    cost_user: f64,
    revenue: f64,
}

impl TrialModel {
    fn build<C: ReleaseModel + ?Sized>(
        params: &MarketParams,
        decision: &VendorDecision,
        curves: &C,
        mode: SimMode,
    ) -> Result<Self> {
        let e = Exposure::at(curves, decision.t);
        let (n, l, m) = (
            f64::from(params.n),
            f64::from(params.l),
            f64::from(params.m),
        );
        let (p_e, p_b, novice_share) = match mode {
            SimMode::WithBbp => {
                let stage =
                    HackerStage::at_exposure(params, e.k_s, e.k_ns, decision.p_s, decision.p_ns);
                if stage.select_regime() == Regime::Interior {
                    return Err(Error::Infeasible(
                        "hackers are in the interior regime; the corner-regime accounting does not apply".into(),
                    ));
                }
                let probs = stage.success_probabilities(&stage.corner_equilibrium());
                if probs.clipped {
                    return Err(Error::Infeasible(
                        "success probabilities are clipped to [0, 1]".into(),
                    ));
                }
                (probs.p_e_s, probs.p_b_s, l * probs.p_ne_ns)
            }
            SimMode::WithoutBbp => {
                let (p_e, p_b, raw_e, raw_b) = no_bbp_probabilities(params, e.k_s);
                if p_e != raw_e || p_b != raw_b || p_e > 1.0 || p_b > 1.0 {
                    return Err(Error::Infeasible(format!(
                        "no-program probabilities ({raw_e}, {raw_b}) leave [0, 1]"
                    )));
                }
                (p_e, p_b, 0.0)
            }
        };
        let total = n * p_e + m * p_b;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Infeasible(format!(
                "severe first-finder masses sum to {total}"
            )));
        }
        if !(0.0..=1.0).contains(&novice_share) {
            return Err(Error::Infeasible(format!(
                "l·P_ne = {novice_share} is not a probability"
            )));
        }
        if !(0.0..=1.0).contains(&e.k_s) || !(0.0..=1.0).contains(&e.k_ns) {
            return Err(Error::Infeasible(format!(
                "residual likelihoods K_s = {}, K_ns = {} are not probabilities",
                e.k_s, e.k_ns
            )));
        }
        let (cost_expert, cost_novice) = match mode {
            SimMode::WithBbp => (decision.p_s, decision.p_ns),
            SimMode::WithoutBbp => (params.x * params.tc_s, params.tc_ns),
        };
        Ok(Self {
            k_s: e.k_s,
            k_ns: e.k_ns,
            expert_share: n * p_e,
            novice_share,
            cost_expert,
            cost_black: params.tc_s,
            cost_novice,
            cost_user: params.tc_ns,
            revenue: e.revenue,
        })
    }

    fn rates(&self) -> EventRates {
        EventRates {
            severe_by_expert: self.k_s * self.expert_share,
            severe_by_black: self.k_s * (1.0 - self.expert_share),
            severe_absent: 1.0 - self.k_s,
            nonsevere_by_novice: self.k_ns * self.novice_share,
            nonsevere_by_user: self.k_ns * (1.0 - self.novice_share),
            nonsevere_absent: 1.0 - self.k_ns,
        }
    }

    fn trial(&self, rng: &mut ChaCha8Rng) -> Trial {
        let u: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
        let severe = if u[0] >= self.k_s {
            SevereEvent::Absent
        } else if u[1] < self.expert_share {
            SevereEvent::Expert
        } else {
            SevereEvent::Black
        };
        let nonsevere = if u[2] >= self.k_ns {
            NonsevereEvent::Absent
        } else if u[3] < self.novice_share {
            NonsevereEvent::Novice
        } else {
            NonsevereEvent::User
        };
        let cost = match severe {
            SevereEvent::Expert => self.cost_expert,
            SevereEvent::Black => self.cost_black,
            SevereEvent::Absent => 0.0,
        } + match nonsevere {
            NonsevereEvent::Novice => self.cost_novice,
            NonsevereEvent::User => self.cost_user,
            NonsevereEvent::Absent => 0.0,
        };
        Trial {
            severe,
            nonsevere,
            cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SevereEvent {
    Expert,
    Black,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonsevereEvent {
    Novice,
    User,
    Absent,
}

impl SevereEvent {
    fn label(self) -> &'static str {
        match self {
            Self::Expert => "expert",
            Self::Black => "black",
            Self::Absent => "none",
        }
    }
}

impl NonsevereEvent {
    fn label(self) -> &'static str {
        match self {
            Self::Novice => "novice",
            Self::User => "user",
            Self::Absent => "none",
        }
    }
}

struct Trial {
    severe: SevereEvent,
    nonsevere: NonsevereEvent,
    cost: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    severe: [u64; 3],
    nonsevere: [u64; 3],
    cost: CompensatedSum,
    cost_sq: CompensatedSum,
}

impl Tally {
    fn record(&mut self, t: &Trial) {
        self.severe[t.severe as usize] += 1;
        self.nonsevere[t.nonsevere as usize] += 1;
        self.cost.add(t.cost);
        self.cost_sq.add(t.cost * t.cost);
    }

    fn merge(&mut self, other: &Tally) {
        for i in 0..3 {
            self.severe[i] += other.severe[i];
            self.nonsevere[i] += other.nonsevere[i];
        }
        self.cost.add(other.cost.value());
        self.cost_sq.add(other.cost_sq.value());
    }
}

fn partition_rng(seed: u64, partition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

fn partition_len(trials: u64, partition: u64) -> u64 {
    (trials - partition * PARTITION_SIZE).min(PARTITION_SIZE)
}

fn run_partition(model: &TrialModel, seed: u64, trials: u64, partition: u64) -> Tally {
    let mut rng = partition_rng(seed, partition);
    let mut tally = Tally::default();
    for _ in 0..partition_len(trials, partition) {
        tally.record(&model.trial(&mut rng));
    }
    tally
}

fn finish(mode: SimMode, seed: u64, trials: u64, model: &TrialModel, tally: &Tally) -> SimOutcome {
    let n = trials as f64;
    let freq = |c: u64| c as f64 / n;
    let mean_cost = tally.cost.value() / n;
    let std_error = if trials > 1 {
        let var = (tally.cost_sq.value() - n * mean_cost * mean_cost) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    } else {
        0.0
    };
    SimOutcome {
        mode,
        seed,
        trials,
        frequencies: EventRates {
            severe_by_expert: freq(tally.severe[SevereEvent::Expert as usize]),
            severe_by_black: freq(tally.severe[SevereEvent::Black as usize]),
            severe_absent: freq(tally.severe[SevereEvent::Absent as usize]),
            nonsevere_by_novice: freq(tally.nonsevere[NonsevereEvent::Novice as usize]),
            nonsevere_by_user: freq(tally.nonsevere[NonsevereEvent::User as usize]),
            nonsevere_absent: freq(tally.nonsevere[NonsevereEvent::Absent as usize]),
        },
        mean_profit: model.revenue - mean_cost,
        std_error,
    }
}

/// Simulates `trials` independent releases at `decision`.
///
/// Refuses to run when the first-finder probabilities are clipped or the
/// hackers are in the interior regime, since the event masses would not
/// form a distribution.
pub fn simulate<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
    trials: u64,
    seed: u64,
    mode: SimMode,
) -> Result<SimOutcome> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let model = TrialModel::build(params, decision, curves, mode)?;
    let partitions = trials.div_ceil(PARTITION_SIZE);
    let tallies: Vec<Tally> = (0..partitions)
        .into_par_iter()
        .map(|k| run_partition(&model, seed, trials, k))
        .collect();
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(finish(mode, seed, trials, &model, &total))
}

/// [`simulate`], also writing one CSV row per trial to `trace`.
///
/// Runs single-threaded; the outcome is identical to [`simulate`].
pub fn simulate_with_trace<C: ReleaseModel + ?Sized, W: Write>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
    trials: u64,
    seed: u64,
    mode: SimMode,
    trace: W,
) -> Result<SimOutcome> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let model = TrialModel::build(params, decision, curves, mode)?;
    let mut out = csv::Writer::from_writer(trace);
    let io_err = |e: csv::Error| Error::Domain(format!("writing trace: {e}"));
    out.write_record(["trial", "severe", "nonsevere", "cost"])
        .map_err(io_err)?;
    let mut total = Tally::default();
    let mut index = 0u64;
    for k in 0..trials.div_ceil(PARTITION_SIZE) {
        let mut rng = partition_rng(seed, k);
        let mut tally = Tally::default();
        for _ in 0..partition_len(trials, k) {
            let t = model.trial(&mut rng);
            out.write_record([
                index.to_string(),
                t.severe.label().to_string(),
                t.nonsevere.label().to_string(),
                t.cost.to_string(),
            ])
            .map_err(io_err)?;
            tally.record(&t);
            index += 1;
        }
        total.merge(&tally);
    }
    out.flush()
        .map_err(|e| Error::Domain(format!("writing trace: {e}")))?;
    Ok(finish(mode, seed, trials, &model, &total))
}

/// Event probabilities and expected profit the simulation converges to.
pub fn expected_outcome<C: ReleaseModel + ?Sized>(
    params: &MarketParams,
    decision: &VendorDecision,
    curves: &C,
    mode: SimMode,
) -> Result<ExpectedOutcome> {
    let model = TrialModel::build(params, decision, curves, mode)?;
    let rates = model.rates();
    let cost = rates.severe_by_expert * model.cost_expert
        + rates.severe_by_black * model.cost_black
        + rates.nonsevere_by_novice * model.cost_novice
        + rates.nonsevere_by_user * model.cost_user;
    Ok(ExpectedOutcome {
        mode,
        rates,
        revenue: model.revenue,
        expected_profit: model.revenue - cost,
    })
}
