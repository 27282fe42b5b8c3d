//! The lifted segment-ball counterexample, phase-transition sweeps over the
//! number of hyperplanes, exponent fits and numeric checks of the auxiliary
//! inequalities.
//!
//! A counterexample trial at `(delta, m)` draws one affine batch and asks two
//! questions: does the batch pass the net check, and does the witness search
//! find a point of `K` within `delta` of the origin that too many hyperplanes
//! separate from it? The trial passes iff the first answer is yes and the
//! second is no.
//!
//! Trials normally run in reduced coordinates. Only the selected witness
//! rows depend on anything but the shifts; every other row is an independent
//! standard Gaussian vector, so its inner products with the (few) points the
//! trial evaluates are exactly distributed as a standard Gaussian vector in
//! an orthonormal basis of their span. [`TrialMode::Full`] evaluates the same
//! trial with every row in full and serves as the reference path.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::adversary::{default_k, plan_witness, require_budget, AdversaryConstants, WitnessPlan};
use crate::batch::{sign_patterns, HyperplaneBatch, HyperplaneSource, SeededBatch};
use crate::complexity::{closed_form_wstar, wstar};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, SignPattern};
use crate::lifting::{euclidean_budget, lift_height, lift_raw, spherical_budget};
use crate::math;
use crate::rng::RngStream;
use crate::sets::{segment_grid, SetSpec};
use crate::tessellation::{
    anchor_index, check_uniform, euclidean_stats, report_from_stats, spherical_stats, NetParams, PairSet,
    Provenance,
};

/// Ambient dimension cap of the desk rule.
pub const DESK_MAX_N: usize = 4000;
/// Largest ball dimension a phase sweep accepts.
pub const MAX_SWEEP_N: usize = 20_000;
/// Substream of the phase rng reserved for width estimates.
const WIDTH_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamMode {
    PaperStrict,
    DeskScaled,
}

impl ParamMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParamMode::PaperStrict => "paper_strict",
            ParamMode::DeskScaled => "desk_scaled",
        }
    }
}

/// Parameters of `K(delta) = [-3 delta, 3 delta] x B^n(0, eps)` and its
/// lift at height `lambda = 2 c0 / delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleParams {
    pub delta: f64,
    pub c0: f64,
    pub lambda: f64,
    /// Spherical budget `delta^2 / (4 pi c0)`.
    pub delta0: f64,
    pub eps: f64,
    pub n: usize,
    pub mode: ParamMode,
    /// Required ratio `w*(K) / lambda`.
    pub c2: f64,
}

impl CounterexampleParams {
    fn base(delta: f64, c0: f64) -> Result<(f64, f64)> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(invalid("c0", "must be positive"));
        }
        if !(delta > 0.0 && delta <= 2.0 * c0) {
            return Err(invalid("delta", format!("must lie in (0, 2 c0] = (0, {}]", 2.0 * c0)));
        }
        Ok((lift_height(delta, c0), spherical_budget(delta, c0)))
    }

    /// Desk rule: `eps = delta / 2`, `n = ceil((2 lambda / eps)^2)` capped at
    /// [`DESK_MAX_N`], which keeps `w*(K)` near `2 lambda`.
    pub fn desk(delta: f64, c0: f64) -> Result<Self> {
        let (lambda, _) = Self::base(delta, c0)?;
        let eps = delta / 2.0;
        let n = (math::ceil_tolerant((2.0 * lambda / eps) * (2.0 * lambda / eps)) as usize).min(DESK_MAX_N);
        Self::desk_with(delta, c0, eps, n)
    }

    /// Desk mode with an explicit ball radius and dimension.
    pub fn desk_with(delta: f64, c0: f64, eps: f64, n: usize) -> Result<Self> {
        let (lambda, delta0) = Self::base(delta, c0)?;
        let p = Self {
            delta,
            c0,
            lambda,
            delta0,
            eps,
            n,
            mode: ParamMode::DeskScaled,
            c2: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    /// Strict rule: `eps = c12 delta0 / log(1 / delta0)`, `n = ceil(lambda^2 / eps^2)`.
    pub fn strict(delta: f64, c0: f64, c12: f64) -> Result<Self> {
        let (lambda, delta0) = Self::base(delta, c0)?;
        if !(c12 > 0.0 && c12.is_finite()) {
            return Err(invalid("c12", "must be positive"));
        }
        if delta0 >= 1.0 {
            return Err(invalid("delta", "spherical budget must be below 1"));
        }
        let eps = c12 * delta0 / math::ln(1.0 / delta0);
        let ratio = lambda / eps;
        if ratio * ratio > usize::MAX as f64 / 4.0 {
            return Err(invalid("delta", "ball dimension overflows"));
        }
        let p = Self {
            delta,
            c0,
            lambda,
            delta0,
            eps,
            n: math::ceil(ratio * ratio) as usize,
            mode: ParamMode::PaperStrict,
            c2: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_c2(mut self, c2: f64) -> Self {
        self.c2 = c2;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps < self.delta) {
            return Err(invalid("eps", format!("need 0 <= eps < delta, got eps = {}", self.eps)));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.lambda < 1.0 {
            return Err(invalid("lambda", "must be at least 1"));
        }
        Ok(())
    }
}

/// `K(delta)`, its lift `S(delta)` and the checked hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub params: CounterexampleParams,
    pub k: SetSpec,
    pub s: SetSpec,
    pub rad: f64,
    /// Closed-form `w*(K)`.
    pub wstar_k: f64,
    pub warnings: Vec<String>,
}

/// Builds `K = SegmentBall(3 delta, eps, n)` and `S = Q_lambda(K)` and checks
/// `3 delta <= rad(K) <= 1` and `w*(K) >= c2 lambda`.
///
/// `rad(K) > 1` is an error in strict mode and a warning in desk mode, where
/// the largest tested `delta` slightly exceeds it.
pub fn build_counterexample(p: &CounterexampleParams) -> Result<Counterexample> {
    p.validate()?;
    let k = SetSpec::segment_ball(3.0 * p.delta, p.eps, p.n)?;
    let s = SetSpec::lifted(k.clone(), p.lambda)?;
    let rad = k.radius();
    let mut warnings = Vec::new();
    if rad < 3.0 * p.delta {
        return Err(Error::Hypothesis(format!("rad(K) = {rad} < 3 delta = {}", 3.0 * p.delta)));
    }
    if rad > 1.0 {
        let msg = format!("rad(K) = {rad:.6} > 1");
        match p.mode {
            ParamMode::PaperStrict => return Err(Error::Hypothesis(msg)),
            ParamMode::DeskScaled => warnings.push(msg),
        }
    }
    let wstar_k = closed_form_wstar(&k).expect("segment balls have a closed form");
    if wstar_k < p.c2 * p.lambda {
        return Err(Error::Hypothesis(format!(
            "w*(K) = {wstar_k:.6} < c2 lambda = {:.6}",
            p.c2 * p.lambda
        )));
    }
    Ok(Counterexample {
        params: *p,
        k,
        s,
        rad,
        wstar_k,
        warnings,
    })
}

/// Statistic deciding the net part of a counterexample trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetCheck {
    /// `|pi lambda d_hat - ||x - y||| <= delta` on the net of `K`.
    Euclidean,
    /// `|d_H - d_S| <= delta0` on the lifted net of `S`.
    Spherical,
}

impl NetCheck {
    pub fn as_str(&self) -> &'static str {
        match self {
            NetCheck::Euclidean => "euclidean",
            NetCheck::Spherical => "spherical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialMode {
    Reduced,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseConfig {
    pub trials: usize,
    /// Segment grid pitch as a multiple of `delta`.
    pub mesh_factor: f64,
    pub random_fill: usize,
    pub max_points: usize,
    pub net_check: NetCheck,
    pub mode: TrialMode,
    pub adversary: AdversaryConstants,
    /// Monte Carlo samples for `w*` of the capped and lifted sets.
    pub width_samples: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            mesh_factor: 0.25,
            random_fill: 32,
            max_points: crate::tessellation::ALL_PAIRS_MAX_POINTS,
            net_check: NetCheck::Spherical,
            mode: TrialMode::Reduced,
            adversary: AdversaryConstants::default(),
            width_samples: 2000,
        }
    }
}

impl PhaseConfig {
    pub fn net_params(&self, delta: f64) -> NetParams {
        NetParams {
            mesh: self.mesh_factor * delta,
            random_fill: self.random_fill,
            max_points: self.max_points,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WitnessStatus {
    /// `k` rounded to zero or exceeded `m / 6`.
    NotAttempted,
    SelectionFailed,
    /// The selected rows were numerically rank deficient.
    Singular,
    Attempted {
        succeeded: bool,
        violation: f64,
        residual: f64,
        norm_x: f64,
        in_set: bool,
    },
}

impl WitnessStatus {
    pub fn succeeded(&self) -> bool {
        matches!(self, WitnessStatus::Attempted { succeeded: true, .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub passed: bool,
    pub net_passed: bool,
    /// Largest Euclidean statistic over the net (`None` for the control).
    pub euclidean_violation: Option<f64>,
    /// Largest spherical statistic over the (lifted) net.
    pub spherical_violation: f64,
    pub witness: WitnessStatus,
}

/// Gram-Schmidt with one reorthogonalisation pass; vectors whose residual
/// falls below `1e-10` of their norm are dropped.
fn orthonormal_basis(vectors: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = math::norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut r = v.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let c = math::dot(b, &r);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nr = math::norm(&r);
        if nr > 1e-10 * scale {
            r.iter_mut().for_each(|x| *x /= nr);
            basis.push(r);
        }
    }
    basis
}

fn coordinates(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    basis.iter().map(|b| math::dot(b, v)).collect()
}

/// Sign patterns of `points` under `batch`, computed in the span of the
/// points. Rows listed in `exact` are generated in full and projected; the
/// others are drawn directly as basis coordinates from `coords.child(i)`.
fn reduced_patterns(
    batch: &SeededBatch,
    exact: &[usize],
    points: &[&[f64]],
    coords: &RngStream,
) -> Result<Vec<SignPattern>> {
    let basis = orthonormal_basis(points);
    let p = basis.len().max(1);
    let m = batch.count();
    let mut is_exact = vec![false; m];
    for &i in exact {
        is_exact[i] = true;
    }
    let mut full = vec![0.0; batch.dim()];
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            if is_exact[i] {
                batch.row_into(i, &mut full);
                let mut c = coordinates(&basis, &full);
                c.resize(p, 0.0);
                c
            } else {
                let mut c = vec![0.0; p];
                coords.child(i as u64).generator().fill_normal(&mut c[..basis.len()]);
                c
            }
        })
        .collect();
    let reduced = HyperplaneBatch::from_rows(&rows, batch.shifts().to_vec(), batch.shift_scale())?;
    let pc: Vec<Vec<f64>> = points
        .iter()
        .map(|v| {
            let mut c = coordinates(&basis, v);
            c.resize(p, 0.0);
            c
        })
        .collect();
    let refs: Vec<&[f64]> = pc.iter().map(|c| c.as_slice()).collect();
    sign_patterns(&reduced, &refs)
}

/// Net of `K` and its pairs, generated exactly as [`check_uniform`] does
/// from the same stream.
fn counterexample_net(ce: &Counterexample, cfg: &PhaseConfig, net_rng: &RngStream) -> Result<PairSet> {
    let net = cfg.net_params(ce.params.delta);
    let points = ce.k.generate_net(net.mesh, &net_rng.child(0), net.random_fill)?;
    let anchor = anchor_index(&ce.k, &points);
    PairSet::from_net(points, anchor, &net_rng.child(1), net.max_points)
}

/// Per pair, the Euclidean statistic on `K` is at most `pi lambda` times the
/// spherical statistic on the lift plus the lift error
/// `|pi lambda d_S(Q x, Q y) - ||x - y|||`. Both statistics come from the
/// same sign patterns, so a violation means the two sides disagree on the
/// scaling that links the budgets `delta` and `delta0`.
fn check_lift_consistency(pairs: &PairSet, lifted: &PairSet, e: &[f64], s: &[f64], lambda: f64) -> Result<()> {
    let pl = math::pi() * lambda;
    for idx in 0..pairs.len() {
        let (i, j) = pairs.pair(idx);
        let dist = math::distance(pairs.points()[i].as_slice(), pairs.points()[j].as_slice());
        let ds = crate::geometry::geodesic_distance_raw(lifted.points()[i].as_slice(), lifted.points()[j].as_slice());
        let bias = math::abs(pl * ds - dist);
        if e[idx] > pl * s[idx] + bias + 1e-9 * (1.0 + pl) {
            return Err(Error::Hypothesis(format!(
                "Euclidean statistic {} exceeds pi lambda x spherical {} + lift error {bias} at pair {idx}",
                e[idx], s[idx]
            )));
        }
    }
    Ok(())
}

/// One counterexample trial with `m` hyperplanes and witness size `k`.
///
/// Streams: batch from `rng.child(0)`, net from `rng.child(1)`, reduced
/// row coordinates from `rng.child(2)`.
pub fn counterexample_trial(
    ce: &Counterexample,
    m: usize,
    k: usize,
    cfg: &PhaseConfig,
    rng: &RngStream,
) -> Result<TrialOutcome> {
    let p = &ce.params;
    let back = euclidean_budget(spherical_budget(p.delta, p.c0), p.c0);
    if math::abs(back - p.delta) > 1e-12 * p.delta {
        return Err(Error::Hypothesis(format!(
            "budget rescaling is inconsistent: {back} != {}",
            p.delta
        )));
    }
    require_budget(m, p.lambda, p.delta)?;
    let batch = SeededBatch::new(rng.child(0), m, p.n + 1, p.lambda)?;
    let mut status = WitnessStatus::NotAttempted;
    let mut plan: Option<WitnessPlan> = None;
    if k >= 1 && 6 * k <= m {
        match plan_witness(
            batch.shifts(),
            &mut |i, out| batch.row_into(i, out),
            p.lambda,
            &ce.k,
            p.delta,
            k,
            &cfg.adversary,
        ) {
            Ok(w) => plan = Some(w),
            Err(Error::SelectionFailed { .. }) => status = WitnessStatus::SelectionFailed,
            Err(Error::Singular) => status = WitnessStatus::Singular,
            Err(e) => return Err(e),
        }
    }
    let pairs = counterexample_net(ce, cfg, &rng.child(1))?;
    let origin = vec![0.0; p.n + 1];
    let mut refs: Vec<&[f64]> = pairs.points().iter().map(|q| q.as_slice()).collect();
    let net_len = refs.len();
    if let Some(w) = &plan {
        refs.push(&w.x);
        refs.push(&origin);
    }
    let pats = match cfg.mode {
        TrialMode::Full => sign_patterns(&batch, &refs)?,
        TrialMode::Reduced => {
            let exact = plan.as_ref().map_or(&[][..], |w| &w.selection.indices[..]);
            reduced_patterns(&batch, exact, &refs, &rng.child(2))?
        }
    };
    let mut e_stats = euclidean_stats(&pats[..net_len], &pairs, p.lambda);
    let e_stats_raw = e_stats.clone();
    let e_report = report_from_stats(&pairs, &mut e_stats, p.delta);
    let lifted_points: Vec<Point> = pairs
        .points()
        .iter()
        .map(|q| Point::new(lift_raw(q.as_slice(), p.lambda)))
        .collect::<Result<_>>()?;
    let lifted_pairs = PairSet::new(
        lifted_points,
        (0..pairs.len()).map(|i| pairs.pair(i)).collect(),
        Provenance::NetAllPairs,
    )?;
    let mut s_stats = spherical_stats(&pats[..net_len], &lifted_pairs);
    check_lift_consistency(&pairs, &lifted_pairs, &e_stats_raw, &s_stats, p.lambda)?;
    let s_report = report_from_stats(&lifted_pairs, &mut s_stats, p.delta0);
    if let Some(w) = plan {
        let separated = pats[net_len].hamming_count(&pats[net_len + 1])?;
        let r = w.finish(separated, m, p.lambda);
        status = WitnessStatus::Attempted {
            succeeded: r.succeeded,
            violation: r.violation,
            residual: r.residual,
            norm_x: r.norm_x,
            in_set: r.in_set,
        };
    }
    let net_passed = match cfg.net_check {
        NetCheck::Euclidean => e_report.passed,
        NetCheck::Spherical => s_report.passed,
    };
    Ok(TrialOutcome {
        passed: net_passed && !status.succeeded(),
        net_passed,
        euclidean_violation: Some(e_report.max_violation),
        spherical_violation: s_report.max_violation,
        witness: status,
    })
}

/// One control trial: homogeneous hyperplanes on the unit sphere of a
/// `k_sub`-dimensional coordinate subspace, spherical check at `delta`.
///
/// Only the first `k_sub` coordinates of a row meet the set, and they are
/// the prefix of the full row, so the batch is generated in dimension
/// `k_sub`. With `ambient = Some(n)` the rows are generated in `R^n` instead.
pub fn control_trial(
    k_sub: usize,
    ambient: Option<usize>,
    delta: f64,
    m: usize,
    cfg: &PhaseConfig,
    rng: &RngStream,
) -> Result<TrialOutcome> {
    let n = ambient.unwrap_or(k_sub);
    let set = SetSpec::subsphere(n, k_sub)?;
    let batch = SeededBatch::new(rng.child(0), m, n, 0.0)?;
    let report = check_uniform(&batch, &set, delta, &cfg.net_params(delta), &rng.child(1), &[])?;
    Ok(TrialOutcome {
        passed: report.passed,
        net_passed: report.passed,
        euclidean_violation: None,
        spherical_violation: report.max_violation,
        witness: WitnessStatus::NotAttempted,
    })
}

/// Executes independent trial jobs. Results must be returned in job order.
pub trait TrialRunner {
    fn run(&self, jobs: usize, job: &(dyn Fn(usize) -> Result<TrialOutcome> + Sync)) -> Vec<Result<TrialOutcome>>;
}

pub struct SequentialRunner;

impl TrialRunner for SequentialRunner {
    fn run(&self, jobs: usize, job: &(dyn Fn(usize) -> Result<TrialOutcome> + Sync)) -> Vec<Result<TrialOutcome>> {
        (0..jobs).map(job).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Counterexample(Box<Counterexample>),
    Control { k_sub: usize, delta: f64 },
}

impl Family {
    pub fn delta(&self) -> f64 {
        match self {
            Family::Counterexample(c) => c.params.delta,
            Family::Control { delta, .. } => *delta,
        }
    }

    /// Spherical budget of the tessellation the family is tested for.
    pub fn budget(&self) -> f64 {
        match self {
            Family::Counterexample(c) => c.params.delta0,
            Family::Control { delta, .. } => *delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub m: usize,
    pub trials: usize,
    pub passes: usize,
    pub pass_rate: f64,
    pub net_passes: usize,
    pub witness_successes: usize,
    pub selection_failures: usize,
    /// Witness size used at this `m` (0 for the control).
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseResult {
    pub delta: f64,
    /// Spherical budget the tessellation is judged at: `delta0` for the
    /// counterexample, `delta` for the control.
    pub budget: f64,
    /// Largest tested `m` below the crossing with pass rate at most 0.05.
    pub m_low: Option<usize>,
    /// Log-linear interpolation of the first upward crossing of 1/2.
    pub m_mid: Option<f64>,
    /// Smallest tested `m` above the crossing with pass rate at least 0.95.
    pub m_high: Option<usize>,
    pub trials_per_m: usize,
    pub pass_curve: Vec<PhasePoint>,
    pub complete: bool,
    /// `w*` of the set the trials tessellate (`S(delta)` or the subsphere).
    pub complexity: f64,
    /// `w*(K cap B(0, delta))` for the counterexample.
    pub capped_complexity: Option<f64>,
}

/// Locates `m_low`, `m_mid` and `m_high` on a pass curve sorted by `m`.
pub fn locate_phase(delta: f64, budget: f64, curve: Vec<PhasePoint>, trials: usize, complexity: f64) -> PhaseResult {
    let mut m_mid = None;
    let mut cross = None;
    for j in 1..curve.len() {
        let (a, b) = (&curve[j - 1], &curve[j]);
        if a.pass_rate < 0.5 && b.pass_rate >= 0.5 {
            let t = (0.5 - a.pass_rate) / (b.pass_rate - a.pass_rate);
            let (la, lb) = (math::ln(a.m as f64), math::ln(b.m as f64));
            m_mid = Some(math::exp(la + t * (lb - la)));
            cross = Some(j);
            break;
        }
    }
    let (m_low, m_high) = match cross {
        Some(j) => (
            curve[..j].iter().rev().find(|p| p.pass_rate <= 0.05).map(|p| p.m),
            curve[j..].iter().find(|p| p.pass_rate >= 0.95).map(|p| p.m),
        ),
        None => (None, None),
    };
    PhaseResult {
        delta,
        budget,
        m_low,
        m_mid,
        m_high,
        trials_per_m: trials,
        complete: m_low.is_some() && m_mid.is_some() && m_high.is_some(),
        pass_curve: curve,
        complexity,
        capped_complexity: None,
    }
}

/// Witness size for each grid value and the complexities used by a sweep.
pub struct PhasePlan {
    pub ks: Vec<usize>,
    pub complexity: f64,
    pub capped_complexity: Option<f64>,
}

pub fn plan_phase(family: &Family, m_grid: &[usize], cfg: &PhaseConfig, rng: &RngStream) -> Result<PhasePlan> {
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid[0] == 0 {
        return Err(invalid("m_grid", "must be a nonempty, strictly increasing list of positive values"));
    }
    if cfg.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let width_rng = rng.child(WIDTH_STREAM);
    match family {
        Family::Counterexample(ce) => {
            let p = &ce.params;
            if p.n > MAX_SWEEP_N {
                return Err(invalid(
                    "n",
                    format!("ball dimension {} is infeasible at desk scale (limit {MAX_SWEEP_N})", p.n),
                ));
            }
            for &m in m_grid {
                require_budget(m, p.lambda, p.delta)?;
            }
            let capped = SetSpec::capped(ce.k.clone(), p.delta)?;
            let wc = wstar(&capped, cfg.width_samples, &width_rng.child(0))?;
            let ws = wstar(&ce.s, cfg.width_samples, &width_rng.child(1))?;
            let a = &cfg.adversary;
            let ks = m_grid.iter().map(|&m| default_k(wc, p.delta, m, p.lambda, a.c3, a.c4)).collect();
            Ok(PhasePlan {
                ks,
                complexity: ws,
                capped_complexity: Some(wc),
            })
        }
        Family::Control { k_sub, .. } => Ok(PhasePlan {
            ks: vec![0; m_grid.len()],
            complexity: math::chi_mean(*k_sub),
            capped_complexity: None,
        }),
    }
}

/// Runs `cfg.trials` trials at every `m` of the grid. Trial `t` at grid
/// index `j` draws from `rng.child(j).child(t)`.
pub fn run_phase(
    family: &Family,
    m_grid: &[usize],
    cfg: &PhaseConfig,
    rng: &RngStream,
    runner: &dyn TrialRunner,
) -> Result<PhaseResult> {
    let plan = plan_phase(family, m_grid, cfg, rng)?;
    let trials = cfg.trials;
    let job = |idx: usize| -> Result<TrialOutcome> {
        let (j, t) = (idx / trials, idx % trials);
        let trial_rng = rng.child(j as u64).child(t as u64);
        match family {
            Family::Counterexample(ce) => counterexample_trial(ce, m_grid[j], plan.ks[j], cfg, &trial_rng),
            Family::Control { k_sub, delta } => control_trial(*k_sub, None, *delta, m_grid[j], cfg, &trial_rng),
        }
    };
    let outcomes = runner.run(m_grid.len() * trials, &job);
    let mut curve = Vec::with_capacity(m_grid.len());
    for (j, &m) in m_grid.iter().enumerate() {
        let mut pt = PhasePoint {
            m,
            trials,
            passes: 0,
            pass_rate: 0.0,
            net_passes: 0,
            witness_successes: 0,
            selection_failures: 0,
            k: plan.ks[j],
        };
        for o in &outcomes[j * trials..(j + 1) * trials] {
            let o = o.as_ref().map_err(Clone::clone)?;
            pt.passes += o.passed as usize;
            pt.net_passes += o.net_passed as usize;
            pt.witness_successes += o.witness.succeeded() as usize;
            pt.selection_failures += matches!(o.witness, WitnessStatus::SelectionFailed) as usize;
        }
        pt.pass_rate = pt.passes as f64 / trials as f64;
        curve.push(pt);
    }
    let mut result = locate_phase(family.delta(), family.budget(), curve, trials, plan.complexity);
    result.capped_complexity = plan.capped_complexity;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(log(1/delta), log(m_mid / w*^2))`.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line through `points`.
pub fn fit_line(points: Vec<(f64, f64)>) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs at least 2 points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(ExponentFit {
        slope,
        intercept,
        r2,
        points,
    })
}

/// Which parameter the exponent is fitted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitAxis {
    /// The spherical budget of the tessellation.
    Budget,
    /// The Euclidean parameter `delta` of the family.
    Delta,
}

/// Slope of `log(m_mid / w*^2)` against `log(1/budget)`, where the budget is
/// the spherical one the tessellation is judged at.
pub fn fit_exponent(results: &[PhaseResult]) -> Result<ExponentFit> {
    fit_exponent_on(results, FitAxis::Budget)
}

pub fn fit_exponent_on(results: &[PhaseResult], axis: FitAxis) -> Result<ExponentFit> {
    let x = |r: &PhaseResult| match axis {
        FitAxis::Budget => r.budget,
        FitAxis::Delta => r.delta,
    };
    let mut deltas: Vec<f64> = results.iter().map(x).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    if deltas.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need phase results at 3 distinct deltas, got {}",
            deltas.len()
        )));
    }
    let points = results
        .iter()
        .map(|r| {
            let mid = r
                .m_mid
                .ok_or_else(|| Error::InsufficientData(format!("no crossing located at delta = {}", r.delta)))?;
            Ok((math::ln(1.0 / x(r)), math::ln(mid / (r.complexity * r.complexity))))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_line(points)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlComparison {
    pub counterexample: ExponentFit,
    pub control: ExponentFit,
    /// Counterexample slope against the Euclidean `delta` instead of `delta0`.
    pub counterexample_vs_delta: ExponentFit,
    pub counterexample_results: Vec<PhaseResult>,
    pub control_results: Vec<PhaseResult>,
}

/// Phase sweeps for the desk counterexample family and the subsphere
/// control over the same `deltas`. Counterexample sweep `i` draws from
/// `rng.child(0).child(i)`, control sweep `i` from `rng.child(1).child(i)`.
pub fn control_comparison(
    deltas: &[f64],
    c0: f64,
    k_sub: usize,
    counter_grids: &[Vec<usize>],
    control_grids: &[Vec<usize>],
    cfg: &PhaseConfig,
    rng: &RngStream,
    runner: &dyn TrialRunner,
) -> Result<ControlComparison> {
    if counter_grids.len() != deltas.len() || control_grids.len() != deltas.len() {
        return Err(invalid("grids", "need one m grid per delta for each family"));
    }
    let mut counter = Vec::with_capacity(deltas.len());
    let mut control = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        let ce = build_counterexample(&CounterexampleParams::desk(delta, c0)?)?;
        let fam = Family::Counterexample(Box::new(ce));
        counter.push(run_phase(&fam, &counter_grids[i], cfg, &rng.child(0).child(i as u64), runner)?);
        let fam = Family::Control { k_sub, delta };
        control.push(run_phase(&fam, &control_grids[i], cfg, &rng.child(1).child(i as u64), runner)?);
    }
    Ok(ControlComparison {
        counterexample: fit_exponent(&counter)?,
        control: fit_exponent(&control)?,
        counterexample_vs_delta: fit_exponent_on(&counter, FitAxis::Delta)?,
        counterexample_results: counter,
        control_results: control,
    })
}

/// `|arccos(x) - sqrt(2 - 2x)| / (2 - 2x)` evaluated through
/// `arccos(x) = 2 asin(u / 2)` with `u = sqrt(2 - 2x)`, and by its series
/// `u/24 + 3u^3/640 + 5u^5/7168` for `u < 1e-3`.
pub fn arccos_ratio(x: f64) -> f64 {
    let u2 = 2.0 * (1.0 - x);
    let u = math::sqrt(u2);
    if u < 1e-3 {
        let u3 = u2 * u;
        return u / 24.0 + 3.0 * u3 / 640.0 + 5.0 * u3 * u2 / 7168.0;
    }
    math::abs(2.0 * math::asin(0.5 * u) - u) / u2
}

/// Maximum of [`arccos_ratio`] over the grid `-1, -1 + step, ...` up to
/// `1 - step`, with its location.
pub fn verify_lemma_arccos(grid_step: f64) -> Result<(f64, f64)> {
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(invalid("grid_step", "must lie in (0, 1e-3]"));
    }
    let count = math::floor(2.0 / grid_step + 1e-9) as usize;
    let (mut best, mut arg) = (f64::NEG_INFINITY, -1.0);
    for j in 0..count {
        let x = -1.0 + j as f64 * grid_step;
        let r = arccos_ratio(x);
        if r > best {
            best = r;
            arg = x;
        }
    }
    Ok((best, arg))
}

/// Checks `|1/sqrt(r^2 + lambda^2) - 1/lambda| <= r^2 / lambda^3` on `sweep`
/// draws of `(r, lambda)` uniform on `(0, 10]^2`. The left side is evaluated
/// directly; a difference within the rounding of the two reciprocals
/// (`4 eps / lambda`) is not counted.
pub fn verify_lemma_lambda_est(sweep: usize, rng: &RngStream) -> usize {
    let mut g = rng.generator();
    let mut violations = 0;
    for _ in 0..sweep {
        let r = 10.0 * (1.0 - g.uniform());
        let lambda = 10.0 * (1.0 - g.uniform());
        if lambda_est_excess(r, lambda) > 4.0 * f64::EPSILON / lambda {
            violations += 1;
        }
    }
    violations
}

/// `|1/sqrt(r^2 + lambda^2) - 1/lambda| - r^2 / lambda^3`.
pub fn lambda_est_excess(r: f64, lambda: f64) -> f64 {
    let lhs = math::abs(1.0 / math::sqrt(r * r + lambda * lambda) - 1.0 / lambda);
    lhs - r * r / (lambda * lambda * lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringCheck {
    pub grid_count: usize,
    /// `eps(delta)`, the cover radius and grid pitch.
    pub cover_radius: f64,
    pub max_lift_distance: f64,
    pub all_covered: bool,
    /// `grid_count <= 1/eps`, checked only for `delta <= 1/6`.
    pub count_ok: Option<bool>,
    /// `log(grid_count) <= delta^-2`.
    pub log_ok: bool,
    pub notice: Option<String>,
    pub passed: bool,
}

/// Covers `S(delta)` by the lifted segment grid of pitch `eps`: samples
/// `samples` uniform points of `K`, maps each to its nearest grid point
/// `(u, 0)` and measures `||Q(x) - Q(u, 0)||`.
///
/// Only `x_1`, `||x_rest||` and `u` enter that distance, so samples are
/// drawn in those two coordinates (the ball norm as `eps U^(1/n)`).
pub fn verify_covering_bound(p: &CounterexampleParams, samples: usize, rng: &RngStream) -> Result<CoveringCheck> {
    p.validate()?;
    if !(p.eps > 0.0) {
        return Err(invalid("eps", "cover radius must be positive"));
    }
    let a = 3.0 * p.delta;
    let grid = segment_grid(a, p.eps);
    let pitch = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
    let mut g = rng.generator();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x1 = g.uniform_in(-a, a);
        let r = p.eps * math::powf(g.uniform(), 1.0 / p.n as f64);
        let j = math::floor((x1 + a) / pitch + 0.5).clamp(0.0, (grid.len() - 1) as f64) as usize;
        let qx = lift_raw(&[x1, r], p.lambda);
        let qu = lift_raw(&[grid[j], 0.0], p.lambda);
        worst = worst.max(math::distance(&qx, &qu));
    }
    let count = grid.len();
    let all_covered = worst <= p.eps;
    let log_ok = math::ln(count as f64) <= 1.0 / (p.delta * p.delta);
    let (count_ok, notice) = if p.delta <= 1.0 / 6.0 {
        (Some(count as f64 <= 1.0 / p.eps), None)
    } else {
        (None, Some(format!("count bound skipped: delta = {} > 1/6", p.delta)))
    };
    Ok(CoveringCheck {
        grid_count: count,
        cover_radius: p.eps,
        max_lift_distance: worst,
        all_covered,
        count_ok,
        log_ok,
        notice,
        passed: all_covered && log_ok && count_ok.unwrap_or(true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::find_witness;

    const C0: f64 = 0.29;

    #[test]
    fn desk_rule_dimensions() {
        let got: Vec<usize> = [0.35, 0.3, 0.25, 0.2, 0.15]
            .iter()
            .map(|&d| CounterexampleParams::desk(d, C0).unwrap().n)
            .collect();
        assert_eq!(got, vec![359, 665, 1378, 3364, 4000]);
    }

    #[test]
    fn counterexample_examples() {
        let p = CounterexampleParams::desk_with(0.2, C0, 0.1, 900).unwrap();
        let ce = build_counterexample(&p).unwrap();
        assert!((ce.rad - 0.37f64.sqrt()).abs() < 1e-12);
        assert!((ce.wstar_k - 3.478).abs() < 1e-3, "{}", ce.wstar_k);
        assert!((p.lambda - 2.9).abs() < 1e-12);
        assert!(ce.warnings.is_empty());
        assert!(CounterexampleParams::desk_with(0.2, C0, 0.2, 900).is_err());
        let s = CounterexampleParams::strict(0.2, C0, 1.0).unwrap();
        assert!((s.delta0 - 0.010976).abs() < 1e-6, "{}", s.delta0);
        assert!((s.eps - 0.002434).abs() < 2e-6, "{}", s.eps);
        assert!(s.n > 1_400_000 && s.n < 1_440_000, "{}", s.n);
        let ce = build_counterexample(&CounterexampleParams::desk(0.35, C0).unwrap()).unwrap();
        assert_eq!(ce.warnings.len(), 1);
        let strict = CounterexampleParams::strict(0.35, C0, 1.0).unwrap();
        assert!(matches!(build_counterexample(&strict), Err(Error::Hypothesis(_))));
        let thin = CounterexampleParams::desk_with(0.2, C0, 0.01, 10).unwrap();
        assert!(matches!(build_counterexample(&thin), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn strict_sweep_is_refused() {
        let ce = build_counterexample(&CounterexampleParams::strict(0.1, C0, 1.0).unwrap()).unwrap();
        let r = run_phase(
            &Family::Counterexample(Box::new(ce)),
            &[100],
            &PhaseConfig::default(),
            &RngStream::root(1),
            &SequentialRunner,
        );
        assert!(matches!(r, Err(Error::InvalidParameter { name: "n", .. })));
    }

    #[test]
    fn basis_spans_points() {
        let mut g = RngStream::root(3).generator();
        let pts: Vec<Vec<f64>> = (0..5).map(|_| (0..40).map(|_| g.normal()).collect()).collect();
        let mut with_dup = pts.clone();
        with_dup.push(pts[0].iter().zip(&pts[1]).map(|(a, b)| 2.0 * a - b).collect());
        let refs: Vec<&[f64]> = with_dup.iter().map(|v| v.as_slice()).collect();
        let basis = orthonormal_basis(&refs);
        assert_eq!(basis.len(), 5);
        for (i, b) in basis.iter().enumerate() {
            for (j, c) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((math::dot(b, c) - want).abs() < 1e-13);
            }
        }
        for v in &with_dup {
            let c = coordinates(&basis, v);
            assert!((math::norm(&c) - math::norm(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_rescaling_round_trips() {
        for d in [0.35, 0.3, 0.25, 0.2, 0.15, 0.01] {
            let back = euclidean_budget(spherical_budget(d, C0), C0);
            assert!((back - d).abs() <= 1e-12 * d);
        }
    }

    fn small_ce() -> Counterexample {
        build_counterexample(&CounterexampleParams::desk_with(0.25, C0, 0.125, 200).unwrap()).unwrap()
    }

    #[test]
    fn full_mode_net_matches_check_uniform() {
        let ce = small_ce();
        let cfg = PhaseConfig {
            mode: TrialMode::Full,
            ..PhaseConfig::default()
        };
        for t in 0..5 {
            let rng = RngStream::new(70, t);
            let o = counterexample_trial(&ce, 300, 0, &cfg, &rng).unwrap();
            let batch = SeededBatch::new(rng.child(0), 300, 201, ce.params.lambda).unwrap();
            let r = check_uniform(&batch, &ce.k, 0.25, &cfg.net_params(0.25), &rng.child(1), &[]).unwrap();
            assert_eq!(o.euclidean_violation, Some(r.max_violation));
            let hb = batch.materialize().homogenized();
            let rs = check_uniform(&hb, &ce.s, ce.params.delta0, &cfg.net_params(0.25), &rng.child(1), &[]).unwrap();
            assert!((o.spherical_violation - rs.max_violation).abs() < 1e-12);
        }
    }

    #[test]
    fn full_mode_witness_matches_find_witness() {
        let ce = small_ce();
        let cfg = PhaseConfig {
            mode: TrialMode::Full,
            ..PhaseConfig::default()
        };
        for t in 0..5 {
            let rng = RngStream::new(71, t);
            let o = counterexample_trial(&ce, 240, 8, &cfg, &rng).unwrap();
            let batch = SeededBatch::new(rng.child(0), 240, 201, ce.params.lambda).unwrap();
            let w = find_witness(&batch, ce.params.lambda, &ce.k, 0.25, 8, &cfg.adversary).unwrap();
            match o.witness {
                WitnessStatus::Attempted {
                    succeeded, violation, ..
                } => {
                    assert_eq!(succeeded, w.succeeded);
                    assert_eq!(violation, w.violation);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn reduced_and_full_modes_agree_in_distribution() {
        // Same shifts, witness rows and net in both modes; the remaining rows
        // differ but share their law, so summary statistics must agree.
        let ce = small_ce();
        let (m, k, trials) = (400, 10, 150);
        let mut stats = [[0.0f64; 3]; 2];
        for (slot, mode) in [TrialMode::Full, TrialMode::Reduced].into_iter().enumerate() {
            let cfg = PhaseConfig {
                mode,
                ..PhaseConfig::default()
            };
            for t in 0..trials {
                let o = counterexample_trial(&ce, m, k, &cfg, &RngStream::new(72, t)).unwrap();
                stats[slot][0] += o.euclidean_violation.unwrap() / trials as f64;
                stats[slot][1] += o.spherical_violation / trials as f64;
                if let WitnessStatus::Attempted { violation, .. } = o.witness {
                    stats[slot][2] += violation / trials as f64;
                }
            }
        }
        for i in 0..3 {
            let rel = (stats[0][i] - stats[1][i]).abs() / stats[0][i];
            assert!(rel < 0.06, "statistic {i}: {:?}", stats);
        }
    }

    #[test]
    fn control_prefix_matches_full_ambient() {
        let cfg = PhaseConfig::default();
        for t in 0..5 {
            let rng = RngStream::new(73, t);
            let a = control_trial(6, None, 0.2, 80, &cfg, &rng).unwrap();
            let b = control_trial(6, Some(40), 0.2, 80, &cfg, &rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_hyperplane_always_fails() {
        // With m = 1 any separated pair has pi lambda d_hat = pi lambda > 3 delta.
        let ce = small_ce();
        let cfg = PhaseConfig::default();
        let r = run_phase(
            &Family::Counterexample(Box::new(ce)),
            &[2, 3],
            &PhaseConfig { trials: 20, ..cfg },
            &RngStream::root(74),
            &SequentialRunner,
        )
        .unwrap();
        assert!(r.pass_curve.iter().all(|p| p.passes == 0));
        assert!(!r.complete);
        let lonely = build_counterexample(&CounterexampleParams::desk_with(0.25, C0, 0.125, 200).unwrap()).unwrap();
        assert!(run_phase(
            &Family::Counterexample(Box::new(lonely)),
            &[1],
            &cfg,
            &RngStream::root(74),
            &SequentialRunner
        )
        .is_err());
    }

    fn point(m: usize, rate: f64) -> PhasePoint {
        PhasePoint {
            m,
            trials: 100,
            passes: (rate * 100.0) as usize,
            pass_rate: rate,
            net_passes: 0,
            witness_successes: 0,
            selection_failures: 0,
            k: 0,
        }
    }

    #[test]
    fn phase_location() {
        let curve = vec![point(50, 0.0), point(100, 0.04), point(200, 0.3), point(400, 0.7), point(800, 0.96)];
        let r = locate_phase(0.2, 0.2, curve, 100, 1.0);
        assert_eq!(r.m_low, Some(100));
        assert_eq!(r.m_high, Some(800));
        let mid = r.m_mid.unwrap();
        assert!((mid - 200.0 * 2f64.powf(0.5)).abs() < 1e-9, "{mid}");
        assert!(r.complete);
        let r = locate_phase(0.2, 0.2, vec![point(50, 0.6), point(100, 0.9)], 100, 1.0);
        assert!(r.m_mid.is_none() && !r.complete);
    }

    fn synthetic(delta: f64, mid: f64, w: f64) -> PhaseResult {
        PhaseResult {
            delta,
            budget: delta,
            m_low: None,
            m_mid: Some(mid),
            m_high: None,
            trials_per_m: 1,
            pass_curve: Vec::new(),
            complete: false,
            complexity: w,
            capped_complexity: None,
        }
    }

    #[test]
    fn synthetic_fits() {
        let cubic: Vec<PhaseResult> = [0.4, 0.3, 0.2, 0.1]
            .iter()
            .map(|&d: &f64| synthetic(d, 10.0 * d.powi(-3), 2.0))
            .collect();
        let f = fit_exponent(&cubic).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let quad: Vec<PhaseResult> = [0.4, 0.3, 0.2].iter().map(|&d: &f64| synthetic(d, 7.0 * d.powi(-2), 1.0)).collect();
        assert!((fit_exponent(&quad).unwrap().slope - 2.0).abs() < 1e-12);
        assert!(fit_exponent(&quad[..2]).is_err());
        let mut same = quad.clone();
        same[2].budget = same[1].budget;
        assert!(fit_exponent(&same).is_err());
        assert!((fit_exponent_on(&quad, FitAxis::Delta).unwrap().slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arccos_lemma() {
        assert!((arccos_ratio(-1.0) - (math::pi() - 2.0) / 4.0).abs() < 1e-15);
        assert!((arccos_ratio(0.0) - 0.07829).abs() < 1e-5);
        // Series and direct forms agree where both are accurate.
        let x = 1.0 - 0.5 * 1e-6;
        let direct = (math::acos(x) - math::sqrt(2.0 - 2.0 * x)).abs() / (2.0 - 2.0 * x);
        assert!((arccos_ratio(x) - direct).abs() < 1e-6);
        let (mx, arg) = verify_lemma_arccos(1e-5).unwrap();
        assert!((mx - 0.285398).abs() < 1e-6 && arg == -1.0);
        assert!(verify_lemma_arccos(0.5).is_err());
        assert!(verify_lemma_arccos(0.0).is_err());
    }

    #[test]
    fn lambda_lemma() {
        let lhs = (1.0 / 5f64.sqrt() - 0.5f64).abs();
        assert!((lhs - 0.05279).abs() < 1e-5);
        assert!(lambda_est_excess(1.0, 2.0) < 0.0);
        for r in [1e-3, 1e-5, 1e-7] {
            assert!(lambda_est_excess(r, 3.0) <= 4.0 * f64::EPSILON / 3.0);
        }
        assert_eq!(verify_lemma_lambda_est(100_000, &RngStream::root(75)), 0);
    }

    #[test]
    fn covering_checks() {
        let small = CounterexampleParams::desk(0.15, C0).unwrap();
        let c = verify_covering_bound(&small, 10_000, &RngStream::root(76)).unwrap();
        assert!(c.passed && c.count_ok == Some(true), "{c:?}");
        assert!(c.max_lift_distance <= small.eps);
        let big = CounterexampleParams::desk(0.25, C0).unwrap();
        let c = verify_covering_bound(&big, 1000, &RngStream::root(76)).unwrap();
        assert!(c.count_ok.is_none() && c.notice.is_some() && c.passed);
        // Oracle: the covering distance equals the lift distance computed in
        // full coordinates for an explicit point.
        let p = CounterexampleParams::desk_with(0.2, C0, 0.1, 3).unwrap();
        let x = [0.13, 0.05, -0.02, 0.04];
        let r = math::norm(&x[1..]);
        let grid = segment_grid(0.6, 0.1);
        let u = grid.iter().copied().min_by(|a, b| (a - x[0]).abs().total_cmp(&(b - x[0]).abs())).unwrap();
        let full = math::distance(&lift_raw(&x, p.lambda), &lift_raw(&[u, 0.0, 0.0, 0.0], p.lambda));
        let reduced = math::distance(&lift_raw(&[x[0], r], p.lambda), &lift_raw(&[u, 0.0], p.lambda));
        assert!((full - reduced).abs() < 1e-15);
    }
}
