//! The subcommands. Each reads its keys from a [`Resolver`], finishes the
//! configuration before doing any work, and returns a JSON report.

use std::path::PathBuf;

use serde_json::{json, Map, Value};
use tessellate::adversary::{self, AdversaryConstants};
use tessellate::complexity::{self, WidthMode};
use tessellate::experiments::{
    self, build_counterexample, ControlComparison, CounterexampleParams, Family, FitAxis, NetCheck, PhaseConfig,
    PhaseResult, TrialMode,
};
use tessellate::feasibility::DykstraParams;
use tessellate::tessellation::{check_uniform, NetParams};
use tessellate::{RngStream, SeededBatch, SetSpec};

use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::report;
use crate::runner::PoolRunner;

/// Stream for width estimates, kept apart from the per-trial streams.
const WIDTH_STREAM: u64 = u64::MAX;
const DM_ROWS_STREAM: u64 = u64::MAX - 1;
const DM_PROBE_STREAM: u64 = u64::MAX - 2;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_C0: f64 = 0.29;
pub const DEFAULT_DELTAS: [f64; 5] = [0.35, 0.3, 0.25, 0.2, 0.15];

/// Result of a command that got far enough to produce a report.
pub struct Output {
    pub config: Map<String, Value>,
    pub report: Value,
    /// Extra CSV rendering for sweeps.
    pub csv: Option<String>,
    /// Set when the report records a violated property or a disagreement.
    pub status: Option<CliError>,
}

impl Output {
    fn ok(config: Map<String, Value>, report: Value) -> Self {
        Self {
            config,
            report,
            csv: None,
            status: None,
        }
    }
}

/// Geometric grid from `lo` to `hi` with ratio `sqrt 2`, rounded to integers.
pub fn sqrt2_grid(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = lo as f64;
    while x <= hi as f64 * (1.0 + 1e-9) {
        let m = x.round() as usize;
        if out.last() != Some(&m) {
            out.push(m);
        }
        x *= std::f64::consts::SQRT_2;
    }
    out
}

pub fn default_counter_grid() -> Vec<usize> {
    sqrt2_grid(100, 25600)
}

pub fn default_control_grid() -> Vec<usize> {
    sqrt2_grid(4, 1024)
}

fn seed(r: &mut Resolver) -> CliResult<RngStream> {
    Ok(RngStream::root(r.get("seed", DEFAULT_SEED)?))
}

fn parse_set(s: &str) -> CliResult<SetSpec> {
    s.parse().map_err(|e: tessellate::Error| CliError::Usage(e.to_string()))
}

fn dykstra(r: &mut Resolver) -> CliResult<DykstraParams> {
    let d = DykstraParams::default();
    Ok(DykstraParams {
        max_iters: r.get("dykstra-iters", d.max_iters)?,
        tol: r.get("dykstra-tol", d.tol)?,
    })
}

fn adversary_constants(r: &mut Resolver) -> CliResult<AdversaryConstants> {
    let d = AdversaryConstants::default();
    Ok(AdversaryConstants {
        c3: r.get("c3", d.c3)?,
        c4: r.get("c4", d.c4)?,
        eta_factor: r.get("eta-factor", d.eta_factor)?,
        dykstra: dykstra(r)?,
    })
}

fn phase_config(r: &mut Resolver) -> CliResult<PhaseConfig> {
    let d = PhaseConfig::default();
    let net_check = match r.get("net-check", d.net_check.as_str().to_string())?.as_str() {
        "spherical" => NetCheck::Spherical,
        "euclidean" => NetCheck::Euclidean,
        other => return Err(CliError::Usage(format!("`net-check` must be spherical or euclidean, got `{other}`"))),
    };
    let mode = match r.get("mode", "reduced".to_string())?.as_str() {
        "reduced" => TrialMode::Reduced,
        "full" => TrialMode::Full,
        other => return Err(CliError::Usage(format!("`mode` must be reduced or full, got `{other}`"))),
    };
    Ok(PhaseConfig {
        trials: r.get("trials", d.trials)?,
        mesh_factor: r.get("mesh-factor", d.mesh_factor)?,
        random_fill: r.get("random-fill", d.random_fill)?,
        max_points: r.get("max-points", d.max_points)?,
        net_check,
        mode,
        adversary: adversary_constants(r)?,
        width_samples: r.get("width-samples", d.width_samples)?,
    })
}

fn counterexample_params(r: &mut Resolver, delta: f64) -> CliResult<CounterexampleParams> {
    let c0 = r.get("c0", DEFAULT_C0)?;
    let eps = r.get_opt::<f64>("eps")?;
    let n = r.get_opt::<usize>("n")?;
    let base = CounterexampleParams::desk(delta, c0)?;
    Ok(match (eps, n) {
        (None, None) => base,
        (e, n) => CounterexampleParams::desk_with(delta, c0, e.unwrap_or(base.eps), n.unwrap_or(base.n))?,
    })
}

pub fn lemmas(mut r: Resolver) -> CliResult<Output> {
    let step = r.get("grid-step", 1e-5)?;
    let sweep = r.get("sweep", 1_000_000usize)?;
    let c0 = r.get("c0", DEFAULT_C0)?;
    let qm = r.get("quantile-m", 1000usize)?;
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    if !(step > 0.0 && step <= 1e-3) {
        return Err(CliError::Usage(format!("`grid-step` must lie in (0, 1e-3], got {step}")));
    }
    if qm < 6 {
        return Err(CliError::Usage("`quantile-m` must be at least 6".into()));
    }

    let (max_ratio, argmax) = experiments::verify_lemma_arccos(step)?;
    let lambda_violations = experiments::verify_lemma_lambda_est(sweep, &rng.child(0));
    let mut sandwich_violations = Vec::new();
    for k in 1..=qm / 6 {
        if !adversary::folded_quantile_bounds(k, qm)?.holds() {
            sandwich_violations.push(k);
        }
    }
    let spot = adversary::folded_quantile_bounds(1000, 6000)?;

    let mut problems = Vec::new();
    if max_ratio > c0 {
        problems.push(format!("arccos ratio {max_ratio} exceeds c0 = {c0}"));
    }
    if lambda_violations > 0 {
        problems.push(format!("{lambda_violations} lift-height violations"));
    }
    if !sandwich_violations.is_empty() {
        problems.push(format!("quantile sandwich fails at k = {sandwich_violations:?}"));
    }
    let report = json!({
        "arccos": {"grid_step": step, "max_ratio": max_ratio, "argmax": argmax, "c0": c0, "holds": max_ratio <= c0},
        "lambda_est": {"sweep": sweep, "violations": lambda_violations},
        "quantile": {
            "m": qm,
            "points": qm / 6,
            "violations": sandwich_violations,
            "spot": {"k": 1000, "m": 6000, "lower": spot.lower, "gamma": spot.gamma, "upper": spot.upper},
        },
        "violations": problems.len(),
    });
    let mut out = Output::ok(config, report);
    if !problems.is_empty() {
        out.status = Some(CliError::Property(problems.join("; ")));
    }
    Ok(out)
}

pub fn width(mut r: Resolver) -> CliResult<Output> {
    let set_str: String = r.require("set")?;
    let samples = r.get("samples", 20_000usize)?;
    let mode = match r.get("mode", "complexity".to_string())?.as_str() {
        "complexity" => WidthMode::Complexity,
        "width" => WidthMode::Width,
        other => return Err(CliError::Usage(format!("`mode` must be complexity or width, got `{other}`"))),
    };
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    let set = parse_set(&set_str)?;
    let est = complexity::estimate_width(&set, mode, samples, &rng)?;
    let closed = match mode {
        WidthMode::Complexity => complexity::closed_form_wstar(&set),
        WidthMode::Width => complexity::closed_form_width(&set),
    };
    let mut status = None;
    let z = closed.map(|c| {
        let diff = est.mean - c;
        let z = if est.std_err > 0.0 {
            diff / est.std_err
        } else if diff.abs() <= 1e-12 * c.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        if z.abs() > 4.0 {
            status = Some(CliError::Statistical(format!(
                "estimate {} is {z:.2} standard errors from the closed form {c}",
                est.mean
            )));
        }
        z
    });
    let mut report = report::width(&est);
    report["set"] = Value::from(set.to_string());
    report["closed_form"] = json!(closed);
    report["z"] = json!(z.filter(|v| v.is_finite()));
    report["agrees"] = Value::from(status.is_none());
    Ok(Output {
        config,
        report,
        csv: None,
        status,
    })
}

pub fn check(mut r: Resolver, runner: &PoolRunner) -> CliResult<Output> {
    let set_str: String = r.require("set")?;
    let delta: f64 = r.require("delta")?;
    let m: usize = r.require("m")?;
    let lambda = r.get("lambda", 0.0)?;
    let trials = r.get("trials", 100usize)?;
    let dn = NetParams::default();
    let net = NetParams {
        mesh: r.get("mesh", dn.mesh)?,
        random_fill: r.get("random-fill", dn.random_fill)?,
        max_points: r.get("max-points", dn.max_points)?,
    };
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    let set = parse_set(&set_str)?;
    if trials == 0 {
        return Err(CliError::Usage("`trials` must be at least 1".into()));
    }
    if lambda > 0.0 {
        adversary::require_budget(m, lambda, delta)?;
    }
    let dim = set.ambient_dim();
    let reports = runner.map(trials, |t| {
        let trial = rng.child(t as u64);
        let batch = SeededBatch::new(trial.child(0), m, dim, lambda)?;
        check_uniform(&batch, &set, delta, &net, &trial.child(1), &[])
    });
    let reports = reports.into_iter().collect::<tessellate::Result<Vec<_>>>()?;
    let passes = reports.iter().filter(|r| r.passed).count();
    let report = json!({
        "set": set.to_string(),
        "trials": trials,
        "passes": passes,
        "pass_rate": passes as f64 / trials as f64,
        "reports": reports.iter().map(report::tessellation).collect::<Vec<_>>(),
    });
    Ok(Output::ok(config, report))
}

pub fn witness(mut r: Resolver, runner: &PoolRunner) -> CliResult<Output> {
    let delta = r.get("delta", 0.2)?;
    let p = counterexample_params(&mut r, delta)?;
    let m: usize = r.require("m")?;
    let k_flag = r.get_opt::<usize>("k")?;
    let trials = r.get("trials", 1usize)?;
    let consts = adversary_constants(&mut r)?;
    let width_samples = r.get("width-samples", 2000usize)?;
    let dm_probes = r.get("dm-probes", 0usize)?;
    let dm_fraction = r.get("dm-probe-fraction", 0.5)?;
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    if trials == 0 {
        return Err(CliError::Usage("`trials` must be at least 1".into()));
    }

    let ce = build_counterexample(&p)?;
    adversary::require_budget(m, p.lambda, p.delta)?;
    let capped = SetSpec::capped(ce.k.clone(), p.delta)?;
    let w_capped = if k_flag.is_none() || dm_probes > 0 {
        Some(complexity::wstar(&capped, width_samples, &rng.child(WIDTH_STREAM))?)
    } else {
        None
    };
    let k = match k_flag {
        Some(k) => k,
        None => adversary::default_k(w_capped.unwrap_or(0.0), p.delta, m, p.lambda, consts.c3, consts.c4),
    };
    let dim = ce.k.ambient_dim();
    let results = runner.map(trials, |t| {
        let batch = SeededBatch::new(rng.child(t as u64), m, dim, p.lambda)?;
        adversary::find_witness(&batch, p.lambda, &ce.k, p.delta, k, &consts)
    });
    let results = results.into_iter().collect::<tessellate::Result<Vec<_>>>()?;
    let successes = results.iter().filter(|w| w.succeeded).count();

    let dm = match (dm_probes, w_capped) {
        (0, _) | (_, None) => Value::Null,
        (probes, Some(w)) => {
            let mut g = rng.child(DM_ROWS_STREAM).generator();
            let mut rows = vec![0.0; k * dim];
            g.fill_normal(&mut rows);
            let rho = dm_fraction * w;
            let frac = adversary::dm_inclusion_check(
                &rows,
                k,
                &capped,
                rho,
                probes,
                &rng.child(DM_PROBE_STREAM),
                &consts.dykstra,
            )?;
            json!({"probes": probes, "rho": rho, "success_fraction": frac})
        }
    };
    let report = json!({
        "delta": p.delta,
        "lambda": p.lambda,
        "n": p.n,
        "m": m,
        "k": k,
        "capped_complexity": w_capped,
        "trials": trials,
        "successes": successes,
        "reports": results.iter().map(report::witness).collect::<Vec<_>>(),
        "dm_inclusion": dm,
        "warnings": ce.warnings,
    });
    Ok(Output::ok(config, report))
}

fn family(r: &mut Resolver, delta: f64) -> CliResult<Family> {
    match r.get("family", "counterexample".to_string())?.as_str() {
        "counterexample" => {
            let p = counterexample_params(r, delta)?;
            Ok(Family::Counterexample(Box::new(build_counterexample(&p)?)))
        }
        "control" => Ok(Family::Control {
            k_sub: r.get("k-sub", 8usize)?,
            delta,
        }),
        other => Err(CliError::Usage(format!("`family` must be counterexample or control, got `{other}`"))),
    }
}

pub fn phase(mut r: Resolver, runner: &PoolRunner) -> CliResult<Output> {
    let delta: f64 = r.require("delta")?;
    let fam = family(&mut r, delta)?;
    let default_grid = match fam {
        Family::Counterexample(_) => default_counter_grid(),
        Family::Control { .. } => default_control_grid(),
    };
    let grid: Vec<usize> = r.get("grid", default_grid)?;
    let cfg = phase_config(&mut r)?;
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    let result = experiments::run_phase(&fam, &grid, &cfg, &rng, runner)?;
    let mut report = report::phase(&result);
    if let Family::Counterexample(ce) = &fam {
        report["lambda"] = Value::from(ce.params.lambda);
        report["n"] = Value::from(ce.params.n);
        report["warnings"] = json!(ce.warnings);
    }
    let name = match fam {
        Family::Counterexample(_) => "counterexample",
        Family::Control { .. } => "control",
    };
    let csv = report::phase_csv(&[(name, std::slice::from_ref(&result))], &report::csv_header("phase", &config));
    Ok(Output {
        config,
        report,
        csv: Some(csv),
        status: None,
    })
}

/// Phase result rebuilt from a `phase` report, enough for fitting.
fn phase_from_report(v: &Value) -> Option<PhaseResult> {
    let v = v.get("payload").unwrap_or(v);
    let v = v.get("report").unwrap_or(v);
    Some(PhaseResult {
        delta: v.get("delta")?.as_f64()?,
        budget: v.get("budget")?.as_f64()?,
        m_low: None,
        m_mid: v.get("m_mid")?.as_f64(),
        m_high: None,
        trials_per_m: v.get("trials_per_m")?.as_u64()? as usize,
        pass_curve: Vec::new(),
        complete: v.get("complete")?.as_bool()?,
        complexity: v.get("complexity")?.as_f64()?,
        capped_complexity: None,
    })
}

pub fn fit(mut r: Resolver) -> CliResult<Output> {
    let inputs: Vec<String> = r.require("inputs")?;
    let axis = match r.get("axis", "budget".to_string())?.as_str() {
        "budget" => FitAxis::Budget,
        "delta" => FitAxis::Delta,
        other => return Err(CliError::Usage(format!("`axis` must be budget or delta, got `{other}`"))),
    };
    let config = r.finish()?;
    let mut results = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let text = std::fs::read_to_string(PathBuf::from(path))?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path} is not JSON: {e}")))?;
        results.push(phase_from_report(&v).ok_or_else(|| CliError::Usage(format!("{path} is not a phase report")))?);
    }
    let f = experiments::fit_exponent_on(&results, axis)?;
    let report = json!({"fit": report::fit(&f), "points": report::fit_points(&f)});
    Ok(Output::ok(config, report))
}

pub fn comparison_report(c: &ControlComparison) -> Value {
    json!({
        "counterexample": report::fit(&c.counterexample),
        "control": report::fit(&c.control),
        "difference": c.counterexample.slope - c.control.slope,
        "counterexample_vs_delta": report::fit(&c.counterexample_vs_delta),
        "counterexample_points": report::fit_points(&c.counterexample),
        "control_points": report::fit_points(&c.control),
        "counterexample_results": c.counterexample_results.iter().map(report::phase).collect::<Vec<_>>(),
        "control_results": c.control_results.iter().map(report::phase).collect::<Vec<_>>(),
    })
}

pub fn control_compare(mut r: Resolver, runner: &PoolRunner) -> CliResult<Output> {
    let deltas = r.get("deltas", DEFAULT_DELTAS.to_vec())?;
    let c0 = r.get("c0", DEFAULT_C0)?;
    let k_sub = r.get("k-sub", 8usize)?;
    let cg = r.get("counter-grid", default_counter_grid())?;
    let kg = r.get("control-grid", default_control_grid())?;
    let cfg = phase_config(&mut r)?;
    let rng = seed(&mut r)?;
    let config = r.finish()?;
    let c = experiments::control_comparison(
        &deltas,
        c0,
        k_sub,
        &vec![cg; deltas.len()],
        &vec![kg; deltas.len()],
        &cfg,
        &rng,
        runner,
    )?;
    let csv = report::phase_csv(
        &[("counterexample", &c.counterexample_results), ("control", &c.control_results)],
        &report::csv_header("control-compare", &config),
    );
    Ok(Output {
        config,
        report: comparison_report(&c),
        csv: Some(csv),
        status: None,
    })
}
