//! The program's release-time advantage rests on the sign of `D(t)`. Its
//! disclosure component, `d(K_s·P_e)/dK_s ∝ 1 − 2m·K_s·(W/c_b − r_s/c_w)/((n+m−1)(n+m))`,
//! turns negative once the incentive gap exceeds half of
//! `(n+m)(n+m−1)/(m·K_s)`, which Condition 1 permits. This scenario sits
//! in that band: both optima are interior and the program releases later.

use bounty_core::scenario::{MarketParams, ReleaseCurves, ReleaseModel};
use bounty_core::vendor::{
    concentrated_profit, condition1, optimal_release_no_bbp, optimal_release_with_bbp,
    profit_without_bbp, release_gap_fd, release_gap_term,
};

fn scenario() -> (MarketParams, ReleaseCurves) {
    let params = MarketParams {
        n: 2,
        l: 8,
        m: 7,
        c_w: 4.139289107027626,
        c_b: 1.3158932053372425,
        r_s: 2.318533892812863,
        w: 17.497670859419244,
        tc_s: 34.7020959237299,
        tc_ns: 0.908539494325155,
        x: 0.808820238799151,
    };
    let curves = ReleaseCurves {
        k_s0: 0.6166972454429385,
        lambda_s: 0.2716850770590832,
        k_ns0: 0.5747656981211104,
        lambda_ns: 0.05621906422560861,
        r0: 305.6552909155168,
        a: 4.70930974217427,
        b: 0.9275288529915313,
        t_max: 10.0,
    };
    (params, curves)
}

#[test]
fn disclosure_term_can_delay_release() {
    let (p, c) = scenario();
    let nb = optimal_release_no_bbp(&p, &c).unwrap();
    let b = optimal_release_with_bbp(&p, &c).unwrap();
    assert!(nb.interior && b.interior);
    assert!(b.t > nb.t, "{} vs {}", b.t, nb.t);

    let d = release_gap_term(&p, &c, nb.t);
    assert!(d > 0.0);
    assert!((d - release_gap_fd(&p, &c, nb.t, 1e-5).unwrap()).abs() < 1e-6);

    // the disclosure bracket is negative at t_nb*
    let k = c.severe_residual(nb.t);
    let pool = f64::from(p.n + p.m);
    let bracket = 1.0 - 2.0 * f64::from(p.m) * k * p.incentive_gap() / ((pool - 1.0) * pool);
    assert!(bracket < 0.0);
}

#[test]
fn optima_agree_with_brute_force() {
    let (p, c) = scenario();
    let nb = optimal_release_no_bbp(&p, &c).unwrap();
    let b = optimal_release_with_bbp(&p, &c).unwrap();
    let grid: Vec<f64> = (0..=100_000)
        .map(|i| c.t_max * f64::from(i) / 100_000.0)
        .collect();
    let argmax = |f: &dyn Fn(f64) -> f64| {
        grid.iter()
            .copied()
            .max_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap()
    };
    let best_nb = argmax(&|t| profit_without_bbp(&p, t, &c).total);
    let best_b = argmax(&|t| {
        if condition1(&p, &c, t).unwrap().feasible {
            concentrated_profit(&p, &c, t).unwrap()
        } else {
            f64::NEG_INFINITY
        }
    });
    assert!((best_nb - nb.t).abs() <= 1e-4);
    assert!((best_b - b.t).abs() <= 1e-4);
}
