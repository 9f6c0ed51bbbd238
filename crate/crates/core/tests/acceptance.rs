//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p bounty-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bounty_core::fixtures::{s0_curves, s0_decision, s0_market};
use bounty_core::numerics::linspace;
use bounty_core::sim::{expected_outcome, simulate, SimMode};
use bounty_core::vendor::optimal_whh_count;
use bounty_core::verify::{
    figure1_at, figure1_crossing, figure1_sweep, verify_bounty_oracle, verify_condition1_ordering,
    verify_equilibrium_oracle, verify_figure1_crossing, verify_normalization, verify_proposition_1,
    verify_proposition_2, verify_proposition_3, verify_ratio_form, write_figure1_csv, Draw,
    FeasibleSampler, Figure1Row, PropositionReport, DEFAULT_SEED,
};

const DRAWS: usize = 1000;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            summary: String::new(),
            details: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.details.push(what.into());
        }
    }

    fn report(&mut self, r: &PropositionReport) {
        let excluded = r.excluded_total();
        self.summary.push_str(&format!(
            "{}: {} tested, {} excluded, {} failed; ",
            r.id,
            r.draws_tested,
            excluded,
            r.failures.len()
        ));
        if !r.pass {
            self.pass = false;
            for f in r.failures.iter().take(3) {
                self.details.push(format!(
                    "{} draw {}: {}\n      {}",
                    r.id,
                    f.draw.index,
                    f.detail,
                    serde_json::to_string(&f.draw).unwrap()
                ));
            }
        }
    }
}

fn population() -> Vec<Draw> {
    FeasibleSampler::new(DEFAULT_SEED)
        .draws(DRAWS)
        .expect("sampler finds feasible draws")
}

fn criterion_1(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    for r in verify_equilibrium_oracle(draws, 1e-3) {
        v.report(&r);
    }
    let elapsed = start.elapsed();
    v.summary
        .push_str(&format!("{:.1}s", elapsed.as_secs_f64()));
    v.require(
        elapsed < Duration::from_secs(120),
        format!("took {elapsed:?}"),
    );
    v
}

fn criterion_2(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    v.report(&verify_normalization(draws, 1e-12));
    // also every unclipped point of the bounty sweep
    let grid = linspace(0.0, 150.0, 49);
    let mut points = 0;
    for d in draws {
        let e = d.exposure();
        for row in figure1_at(&d.params, e.k_s, e.k_ns, &grid) {
            let inside = |p: f64| p > 0.0 && p < 1.0;
            if inside(row.p_e_s) && inside(row.p_b_s) {
                points += 1;
                let total = f64::from(d.params.n) * row.p_e_s + f64::from(d.params.m) * row.p_b_s;
                v.require(
                    (total - 1.0).abs() <= 1e-12,
                    format!("draw {} at p_s = {}: sum {total:.17}", d.index, row.p_s),
                );
            }
        }
    }
    v.summary
        .push_str(&format!("{points} unclipped sweep points"));
    v
}

fn criterion_3(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    let grid = linspace(0.0, 150.0, 49);
    assert_eq!(grid.len(), 50);
    v.report(&verify_proposition_1(draws, &grid).unwrap());
    v.report(&verify_figure1_crossing(draws, &grid, 1e-9));

    let rows = figure1_sweep(
        &s0_market(),
        &s0_curves(),
        s0_decision().t,
        &linspace(0.0, 20.0, 49),
    );
    let mut csv_bytes = Vec::new();
    write_figure1_csv(&rows, &mut csv_bytes).unwrap();
    let parsed: Vec<Figure1Row> = csv::Reader::from_reader(csv_bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    let crossing = figure1_crossing(&parsed).unwrap_or(f64::NAN);
    let p = s0_market();
    let expected = p.c_w * p.w / p.c_b - p.r_s;
    v.require(
        (crossing - expected).abs() <= 1e-9,
        format!("S0 CSV crossing {crossing}, expected {expected}"),
    );
    v.summary
        .push_str(&format!("S0 CSV crossing at {crossing}"));
    v
}

fn criterion_4(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    for r in verify_proposition_2(draws, 1e-9) {
        v.report(&r);
    }
    v
}

fn criterion_5(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    for r in verify_proposition_3(draws, 1e-4) {
        v.report(&r);
    }
    v
}

fn criterion_6(draws: &[Draw]) -> Verdict {
    let mut v = Verdict::new();
    v.report(&verify_bounty_oracle(&draws[..200], 1000));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    v.report(&verify_condition1_ordering(
        &FeasibleSampler::new(DEFAULT_SEED),
        10_000,
    ));
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let (p, c, t) = (s0_market(), s0_curves(), s0_decision().t);
    let mut previous = f64::NEG_INFINITY;
    for m in 1..=20u32 {
        let count = match optimal_whh_count(&p.with_m(m), &c, t) {
            Ok(count) => count,
            Err(e) => {
                v.require(false, format!("m = {m}: {e}"));
                continue;
            }
        };
        v.require(
            (1..=4 * m).contains(&count.n_bruteforce),
            format!("m = {m}: brute force n = {}", count.n_bruteforce),
        );
        v.require(count.note.contains("disagree"), "discrepancy note missing");
        if m <= 10 {
            v.require(
                count.n_quadratic == f64::from(m + 1) / 2.0,
                format!("m = {m}: n_quadratic = {}", count.n_quadratic),
            );
            if m >= 2 {
                v.require(
                    count.n_eq26 < f64::from(m),
                    format!("m = {m}: n_eq26 = {}", count.n_eq26),
                );
                v.require(
                    count.n_eq26 > previous,
                    format!("m = {m}: n_eq26 not increasing"),
                );
            }
            previous = count.n_eq26;
        }
    }
    v.summary.push_str("m = 1..20");
    v
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::new();
    // enough draws that at least 1000 have a ratio-form equilibrium
    let draws = FeasibleSampler::new(DEFAULT_SEED).draws(1200).unwrap();
    for r in verify_ratio_form(&draws, 1e-3) {
        v.require(
            r.draws_tested >= DRAWS,
            format!("{}: only {} draws tested", r.id, r.draws_tested),
        );
        v.report(&r);
    }
    v
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let (p, d, c) = (s0_market(), s0_decision(), s0_curves());
    let trials = 1_000_000u64;
    let start = Instant::now();
    for mode in [SimMode::WithBbp, SimMode::WithoutBbp] {
        let sim = simulate(&p, &d, &c, trials, 2024, mode).unwrap();
        let again = simulate(&p, &d, &c, trials, 2024, mode).unwrap();
        v.require(
            serde_json::to_vec(&sim).unwrap() == serde_json::to_vec(&again).unwrap(),
            format!("{mode:?}: repeated run differs"),
        );
        let exp = expected_outcome(&p, &d, &c, mode).unwrap();
        let (f, r) = (sim.frequencies, exp.rates);
        let pairs = [
            ("severe by expert", f.severe_by_expert, r.severe_by_expert),
            ("severe by black hat", f.severe_by_black, r.severe_by_black),
            ("severe absent", f.severe_absent, r.severe_absent),
            (
                "non-severe by non-expert",
                f.nonsevere_by_novice,
                r.nonsevere_by_novice,
            ),
            (
                "non-severe by user",
                f.nonsevere_by_user,
                r.nonsevere_by_user,
            ),
            ("non-severe absent", f.nonsevere_absent, r.nonsevere_absent),
        ];
        for (name, got, want) in pairs {
            let se = (want * (1.0 - want) / trials as f64).sqrt();
            let ok = if se == 0.0 {
                got == want
            } else {
                (got - want).abs() <= 3.0 * se
            };
            v.require(ok, format!("{mode:?} {name}: {got} vs {want} (se {se:e})"));
        }
        v.require(
            (sim.mean_profit - exp.expected_profit).abs() <= 3.0 * sim.std_error,
            format!(
                "{mode:?} mean profit {} vs {} (se {})",
                sim.mean_profit, exp.expected_profit, sim.std_error
            ),
        );
        if mode == SimMode::WithBbp {
            v.require(
                (r.severe_by_expert - 0.19133).abs() < 1e-5,
                "analytic eWHH rate",
            );
            v.summary.push_str(&format!(
                "severe-by-expert {:.5} vs {:.5}; ",
                f.severe_by_expert, r.severe_by_expert
            ));
        }
    }
    // two modes, each run twice
    let elapsed = start.elapsed() / 4;
    v.summary
        .push_str(&format!("{:.2}s per run", elapsed.as_secs_f64()));
    v.require(
        elapsed < Duration::from_secs(30),
        format!("took {elapsed:?}"),
    );
    v
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let draws = population();
    let criteria: Vec<Criterion> = vec![
        ("equilibrium oracle", Box::new(|| criterion_1(&draws))),
        ("normalization", Box::new(|| criterion_2(&draws))),
        (
            "bounty monotonicity and curve crossing",
            Box::new(|| criterion_3(&draws)),
        ),
        (
            "program beats no program; decomposition",
            Box::new(|| criterion_4(&draws)),
        ),
        (
            "earlier release with a program; slopes",
            Box::new(|| criterion_5(&draws)),
        ),
        ("optimal-bounty oracle", Box::new(|| criterion_6(&draws))),
        ("Condition 1 bound ordering", Box::new(criterion_7)),
        ("white-hat head-count report", Box::new(criterion_8)),
        ("ratio-form equilibrium", Box::new(criterion_9)),
        ("Monte Carlo agreement", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name}: {}",
            i + 1,
            v.summary.trim_end_matches("; ")
        );
        for d in &v.details {
            println!("    {d}");
        }
        if !v.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
