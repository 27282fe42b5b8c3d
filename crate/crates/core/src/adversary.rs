//! Explicit witnesses against Euclidean tessellations with too few
//! hyperplanes.
//!
//! Among `m` shifts drawn from `N(0, lambda^2)` roughly `k` are smaller than
//! `4 sqrt(pi/2) lambda k / m`. If a point `x*` of `K` near the origin lies on
//! the far side of all `k` corresponding hyperplanes, the pair `(x*, 0)` is
//! separated by at least a `k / m` fraction of the batch while being at
//! distance at most `delta`, which breaks the Euclidean statistic once
//! `pi lambda k / m` exceeds `3 delta`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::batch::{sign_patterns, HyperplaneSource};
use crate::error::{invalid, Error, Result};
use crate::feasibility::{find_preimage, DykstraParams};
use crate::geometry::{sign, Point};
use crate::lifting::check_shift_scale;
use crate::linalg::LeastNorm;
use crate::math;
use crate::rng::RngStream;
use crate::sets::SetSpec;

/// Tunable constants of the witness construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdversaryConstants {
    /// Weight of the `w*^2 / delta^2` branch of the default `k`.
    pub c3: f64,
    /// Weight of the `(m w* / lambda)^(2/3)` branch of the default `k`.
    pub c4: f64,
    /// Margin `eta` as a fraction of the shift threshold.
    pub eta_factor: f64,
    pub dykstra: DykstraParams,
}

impl Default for AdversaryConstants {
    fn default() -> Self {
        Self {
            c3: 0.25,
            c4: 0.25,
            eta_factor: 0.01,
            dykstra: DykstraParams::default(),
        }
    }
}

/// Closed-form bounds and the numeric value of the folded-normal quantile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileBounds {
    pub lower: f64,
    pub upper: f64,
    /// Solution of `P(|N(0,1)| <= gamma) = 2k/m`.
    pub gamma: f64,
}

impl QuantileBounds {
    pub fn holds(&self) -> bool {
        self.lower <= self.gamma && self.gamma <= self.upper
    }
}

/// Quantile `gamma` with `P(|g| <= gamma) = 2k/m` and the sandwich
/// `sqrt(pi/2) (2k/m) <= gamma <= 2 sqrt(pi/2) (2k/m)`, valid for `k <= m/6`.
pub fn folded_quantile_bounds(k: usize, m: usize) -> Result<QuantileBounds> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if 6 * k > m {
        return Err(Error::Hypothesis(format!("k = {k} exceeds m/6 = {}", m as f64 / 6.0)));
    }
    let p = 2.0 * k as f64 / m as f64;
    let gamma = math::bisect_increasing(&math::folded_normal_cdf, p, 0.0, 10.0, 1e-12);
    let lower = math::SQRT_HALF_PI * p;
    Ok(QuantileBounds {
        lower,
        upper: 2.0 * lower,
        gamma,
    })
}

/// `4 sqrt(pi/2) lambda k / m`.
pub fn shift_threshold(lambda: f64, k: usize, m: usize) -> f64 {
    4.0 * math::SQRT_HALF_PI * lambda * k as f64 / m as f64
}

/// Indices of `k` small shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSelection {
    /// Sorted increasingly.
    pub indices: Vec<usize>,
    pub threshold: f64,
    /// `||(shift_i)_{i in I}||_2`.
    pub shift_norm: f64,
}

/// The `k` smallest `|shift_i|` (ties broken by index), provided at least
/// `k` of them lie below [`shift_threshold`].
///
/// The ratio `k / m` is not restricted here; [`find_witness`] enforces
/// `k <= m / 6`.
pub fn select_small_shifts(shifts: &[f64], k: usize, lambda: f64) -> Result<ShiftSelection> {
    let m = shifts.len();
    if k == 0 || k > m {
        return Err(invalid("k", "must lie in 1..=m"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be finite and nonnegative"));
    }
    let threshold = shift_threshold(lambda, k, m);
    let mut below: Vec<usize> = (0..m).filter(|&i| math::abs(shifts[i]) <= threshold).collect();
    if below.len() < k {
        return Err(Error::SelectionFailed {
            found: below.len(),
            needed: k,
            threshold,
        });
    }
    below.sort_by(|&a, &b| math::abs(shifts[a]).total_cmp(&math::abs(shifts[b])).then(a.cmp(&b)));
    let mut indices = below[..k].to_vec();
    indices.sort_unstable();
    let sq: Vec<f64> = indices.iter().map(|&i| shifts[i]).collect();
    Ok(ShiftSelection {
        indices,
        threshold,
        shift_norm: math::norm(&sq),
    })
}

/// `floor(min(c3 w^2 / delta^2, c4 (m w / lambda)^(2/3), m / 6))`, where `w`
/// is the Gaussian complexity of `K` intersected with the `delta`-ball.
pub fn default_k(w_capped: f64, delta: f64, m: usize, lambda: f64, c3: f64, c4: f64) -> usize {
    let a = c3 * w_capped * w_capped / (delta * delta);
    let b = c4 * math::powf(m as f64 * w_capped / lambda, 2.0 / 3.0);
    let c = m as f64 / 6.0;
    math::floor(a.min(b).min(c)).max(0.0) as usize
}

/// True iff `m > lambda / 2`. Below that budget a single hyperplane already
/// moves the Euclidean statistic by more than 2.
pub fn min_hyperplane_budget_guard(m: usize, lambda: f64, _delta: f64) -> bool {
    m as f64 > lambda / 2.0
}

/// Errors with [`Error::BudgetGuard`] when [`min_hyperplane_budget_guard`] fails.
pub fn require_budget(m: usize, lambda: f64, delta: f64) -> Result<()> {
    if min_hyperplane_budget_guard(m, lambda, delta) {
        Ok(())
    } else {
        Err(Error::BudgetGuard {
            m,
            half_lambda: lambda / 2.0,
        })
    }
}

/// Fraction of `probes` points `y` of the radius-`rho` sphere of `R^k` that
/// have a preimage `x` in `s` with `G x = y`. `rows` is the row-major
/// `k x n` matrix `G`. Probe `j` is drawn from `rng.child(j)`.
pub fn dm_inclusion_check(
    rows: &[f64],
    k: usize,
    s: &SetSpec,
    rho: f64,
    probes: usize,
    rng: &RngStream,
    params: &DykstraParams,
) -> Result<f64> {
    if probes == 0 {
        return Err(invalid("probes", "must be at least 1"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(invalid("rho", "must be finite and nonnegative"));
    }
    let solver = LeastNorm::new(rows.to_vec(), k, s.ambient_dim())?;
    let mut hits = 0usize;
    let mut y = vec![0.0; k];
    for j in 0..probes {
        let mut g = rng.child(j as u64).generator();
        loop {
            g.fill_normal(&mut y);
            let r = math::norm(&y);
            if r > 0.0 {
                y.iter_mut().for_each(|v| *v *= rho / r);
                break;
            }
        }
        if find_preimage(&solver, &y, s, params)?.converged {
            hits += 1;
        }
    }
    Ok(hits as f64 / probes as f64)
}

/// Result of the witness search before the full-batch statistic is known.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPlan {
    pub selection: ShiftSelection,
    pub target: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: f64,
    pub in_set: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Whether every selected hyperplane separates `x` from the origin.
    pub all_flipped: bool,
    pub delta: f64,
}

/// Witness attempt against a Euclidean tessellation.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub witness: Point,
    pub target: Vec<f64>,
    pub indices: Vec<usize>,
    pub residual: f64,
    pub in_set: bool,
    /// `|pi lambda d_hat(x*, 0) - ||x*|||` over the full batch.
    pub violation: f64,
    pub succeeded: bool,
    pub k: usize,
    pub norm_x: f64,
    /// Hyperplanes of the full batch separating `x*` from the origin.
    pub separated: usize,
    pub iterations: usize,
}

/// Selects `k` small shifts and solves for `x` in `K` intersected with the
/// `delta`-ball such that `<g_i, x> = -shift_i - eta sign(shift_i)` on the
/// selection. `row_of(i, out)` writes row `i` of the batch.
#[allow(clippy::too_many_arguments)]
pub fn plan_witness(
    shifts: &[f64],
    row_of: &mut dyn FnMut(usize, &mut [f64]),
    lambda: f64,
    k_set: &SetSpec,
    delta: f64,
    k: usize,
    consts: &AdversaryConstants,
) -> Result<WitnessPlan> {
    let m = shifts.len();
    if k == 0 || 6 * k > m {
        return Err(invalid("k", format!("need 1 <= k <= m/6, got k = {k}, m = {m}")));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if !k_set.is_convex() {
        return Err(invalid("K", "witness search needs a convex set"));
    }
    let selection = select_small_shifts(shifts, k, lambda)?;
    let eta = consts.eta_factor * selection.threshold;
    let target: Vec<f64> = selection
        .indices
        .iter()
        .map(|&i| -shifts[i] - eta * f64::from(sign(shifts[i])))
        .collect();
    let n = k_set.ambient_dim();
    let mut rows = vec![0.0; k * n];
    for (r, &i) in selection.indices.iter().enumerate() {
        row_of(i, &mut rows[r * n..(r + 1) * n]);
    }
    let solver = LeastNorm::new(rows, k, n)?;
    let feasible = SetSpec::capped(k_set.clone(), delta)?;
    let pre = find_preimage(&solver, &target, &feasible, &consts.dykstra)?;
    let in_set = feasible.membership(&pre.x, 1e-9)?;
    let gx = solver.apply(&pre.x);
    let all_flipped = selection
        .indices
        .iter()
        .zip(&gx)
        .all(|(&i, v)| sign(v + shifts[i]) != sign(shifts[i]));
    Ok(WitnessPlan {
        selection,
        target,
        x: pre.x,
        residual: pre.residual,
        in_set,
        converged: pre.converged,
        iterations: pre.iterations,
        all_flipped,
        delta,
    })
}

impl WitnessPlan {
    /// Completes the report from the number of the batch's `m` hyperplanes
    /// that separate `x` from the origin.
    pub fn finish(self, separated: usize, m: usize, lambda: f64) -> WitnessReport {
        let norm_x = math::norm(&self.x);
        let violation = math::abs(math::pi() * lambda * separated as f64 / m as f64 - norm_x);
        let succeeded = self.converged && self.in_set && self.all_flipped && violation > self.delta;
        WitnessReport {
            k: self.selection.indices.len(),
            witness: Point::from_vec(self.x),
            target: self.target,
            indices: self.selection.indices,
            residual: self.residual,
            in_set: self.in_set,
            violation,
            succeeded,
            norm_x,
            separated,
            iterations: self.iterations,
        }
    }
}

/// Witness search on the batch followed by the Euclidean statistic at
/// `(x*, 0)` over the full batch.
pub fn find_witness(
    batch: &dyn HyperplaneSource,
    lambda: f64,
    k_set: &SetSpec,
    delta: f64,
    k: usize,
    consts: &AdversaryConstants,
) -> Result<WitnessReport> {
    check_shift_scale(batch, lambda)?;
    crate::error::check_dim(k_set.ambient_dim(), batch.dim())?;
    let plan = plan_witness(batch.shifts(), &mut |i, out| batch.row_into(i, out), lambda, k_set, delta, k, consts)?;
    let origin = vec![0.0; batch.dim()];
    let pats = sign_patterns(batch, &[&plan.x, &origin])?;
    let separated = pats[0].hamming_count(&pats[1])?;
    Ok(plan.finish(separated, batch.count(), lambda))
}
