use tessellate::experiments::{
    build_counterexample, run_phase, CounterexampleParams, Family, PhaseConfig, PhaseResult, SequentialRunner,
};
use tessellate::RngStream;

fn grid(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = lo as f64;
    while x <= hi as f64 * 1.0001 {
        out.push(x.round() as usize);
        x *= std::f64::consts::SQRT_2;
    }
    out
}

/// Neighbouring pass rates may only drop by two binomial standard errors.
fn assert_monotone_within_2_sigma(r: &PhaseResult) {
    for w in r.pass_curve.windows(2) {
        let t = r.trials_per_m as f64;
        let p = 0.5 * (w[0].pass_rate + w[1].pass_rate);
        let sigma = (2.0 * p * (1.0 - p) / t).sqrt() + 1.0 / t;
        assert!(
            w[1].pass_rate >= w[0].pass_rate - 2.0 * sigma,
            "pass rate drops from {} at m = {} to {} at m = {}",
            w[0].pass_rate,
            w[0].m,
            w[1].pass_rate,
            w[1].m
        );
    }
}

#[test]
fn counterexample_transition_at_quarter_budget() {
    let ce = build_counterexample(&CounterexampleParams::desk(0.25, 0.29).unwrap()).unwrap();
    let cfg = PhaseConfig {
        trials: 20,
        ..PhaseConfig::default()
    };
    let r = run_phase(
        &Family::Counterexample(Box::new(ce)),
        &grid(400, 6400),
        &cfg,
        &RngStream::root(2024),
        &SequentialRunner,
    )
    .unwrap();
    assert!(r.complete, "{:?}", r.pass_curve);
    let mid = r.m_mid.unwrap();
    assert!((800.0..3200.0).contains(&mid), "m_mid = {mid}");
    assert_eq!(r.pass_curve.first().unwrap().passes, 0);
    assert_eq!(r.pass_curve.last().unwrap().passes, 20);
    assert!(r.budget < r.delta);
    assert_monotone_within_2_sigma(&r);
}

#[test]
fn control_transition_is_early() {
    let cfg = PhaseConfig {
        trials: 30,
        ..PhaseConfig::default()
    };
    let r = run_phase(
        &Family::Control { k_sub: 8, delta: 0.25 },
        &grid(4, 1024),
        &cfg,
        &RngStream::root(2025),
        &SequentialRunner,
    )
    .unwrap();
    let mid = r.m_mid.unwrap();
    assert!((16.0..128.0).contains(&mid), "m_mid = {mid}");
    assert_eq!(r.budget, r.delta);
    assert_monotone_within_2_sigma(&r);
}
