//! The lifting map `Q_lambda(x) = (x, lambda) / ||(x, lambda)||` and the
//! affine separation statistic it turns into a spherical one.
//!
//! For a batch with rows `g_i` and shifts `lambda * tau_i`, the bit
//! `sign(<x, g_i> + lambda tau_i)` equals `sign(<Q_lambda(x), (g_i, tau_i)>)`,
//! since the two arguments differ by the positive factor
//! `||(x, lambda)|| / lambda`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::batch::{sign_patterns, HyperplaneSource};
use crate::complexity::{closed_form_width, WidthEstimate, WidthMode};
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{hamming_fraction, Point, UnitVector};
use crate::math;
use crate::rng::RngStream;
use crate::sets::SetSpec;

/// Parameters tying a Euclidean budget `delta` to the lift height and the
/// spherical budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftParams {
    pub lambda: f64,
    pub c0: f64,
    pub delta: f64,
    pub delta0: f64,
}

impl LiftParams {
    /// `lambda = 2 c0 / delta`, `delta0 = delta^2 / (4 pi c0)`.
    pub fn canonical(delta: f64, c0: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(invalid("c0", "must be positive"));
        }
        Ok(Self {
            lambda: lift_height(delta, c0),
            c0,
            delta,
            delta0: spherical_budget(delta, c0),
        })
    }
}

pub fn lift_height(delta: f64, c0: f64) -> f64 {
    2.0 * c0 / delta
}

/// Spherical budget `delta^2 / (4 pi c0)` matching a Euclidean budget `delta`.
pub fn spherical_budget(delta: f64, c0: f64) -> f64 {
    delta * delta / (4.0 * math::pi() * c0)
}

/// Inverse of [`spherical_budget`]: the Euclidean budget `sqrt(4 pi c0 delta0)`.
pub fn euclidean_budget(delta0: f64, c0: f64) -> f64 {
    math::sqrt(delta0 * 4.0 * math::pi() * c0)
}

/// Lift of raw coordinates; `lambda > 0` is the caller's responsibility.
pub fn lift_raw(x: &[f64], lambda: f64) -> Vec<f64> {
    let r2 = math::norm_sq(x);
    let nrm = math::sqrt(r2 + lambda * lambda);
    let mut out = Vec::with_capacity(x.len() + 1);
    out.extend(x.iter().map(|v| v / nrm));
    out.push(lambda / nrm);
    out
}

pub fn lift_point(x: &[f64], lambda: f64) -> Result<UnitVector> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be positive and finite"));
    }
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x", "coordinates must be finite and nonempty"));
    }
    UnitVector::normalize(lift_raw(x, lambda))
}

/// `| ||Q(x) - Q(y)|| - ||x - y|| / lambda |` for `||x||, ||y|| <= r <= lambda`.
pub fn lift_distance_error(x: &[f64], y: &[f64], lambda: f64, r: f64) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    if r > lambda {
        return Err(Error::Hypothesis(format!("radius {r} exceeds the lift height {lambda}")));
    }
    let slack = 1e-12 * r.max(1.0);
    if math::norm(x) > r + slack || math::norm(y) > r + slack {
        return Err(Error::Hypothesis(format!("a point lies outside the ball of radius {r}")));
    }
    let qx = lift_raw(x, lambda);
    let qy = lift_raw(y, lambda);
    Ok(math::abs(math::distance(&qx, &qy) - math::distance(x, y) / lambda))
}

/// The bound `4 r^2 / lambda^2` on [`lift_distance_error`].
pub fn lift_distance_bound(lambda: f64, r: f64) -> f64 {
    4.0 * r * r / (lambda * lambda)
}

pub(crate) fn check_shift_scale(batch: &dyn HyperplaneSource, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be positive and finite"));
    }
    let s = batch.shift_scale();
    if s > 0.0 && math::abs(s - lambda) > 1e-12 * lambda {
        return Err(invalid("lambda", format!("batch shifts were drawn with scale {s}, not {lambda}")));
    }
    Ok(())
}

/// Fraction of affine hyperplanes `<., g_i> + shift_i = 0` separating `x` and `y`.
pub fn affine_separation(batch: &dyn HyperplaneSource, lambda: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_shift_scale(batch, lambda)?;
    let p = sign_patterns(batch, &[x, y])?;
    hamming_fraction(&p[0], &p[1])
}

/// Outcome of [`lifted_width_ratio`].
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedWidthRatio {
    /// `lambda * w(Q_lambda(K)) / w*(K)`.
    pub ratio: f64,
    pub lifted_width: WidthEstimate,
    pub base_complexity: WidthEstimate,
    /// Preconditions that were not met but did not prevent the estimate.
    pub warnings: Vec<String>,
}

/// Estimates `lambda * w(Q_lambda(K)) / w*(K)` with common random numbers:
/// sample `i` draws one Gaussian vector in the lifted dimension and uses its
/// first `dim(K)` coordinates for the base set.
///
/// `w*(K) * lambda < 0.1` is an error; values in `[0.1, 1)` and
/// `rad(K) > 1` produce warnings. A singleton `K` has `w(Q_lambda(K)) = 0`
/// exactly, so its ratio is 0 (with a warning when `K` is degenerate).
pub fn lifted_width_ratio(k: &SetSpec, lambda: f64, samples: usize, rng: &RngStream) -> Result<LiftedWidthRatio> {
    if samples < 100 {
        return Err(invalid("samples", "need at least 100 samples"));
    }
    let lifted = SetSpec::lifted(k.clone(), lambda)?;
    let mut warnings = Vec::new();
    let rad = k.radius();
    if rad > 1.0 {
        warnings.push(format!("rad(K) = {rad:.6} exceeds 1"));
    }
    let d = lifted.ambient_dim();
    let mut up = Vec::with_capacity(samples);
    let mut base = Vec::with_capacity(samples);
    let mut g = alloc::vec![0.0; d];
    for i in 0..samples {
        rng.child(i as u64).generator().fill_normal(&mut g);
        up.push(lifted.support(&g)?);
        base.push(k.support_abs(&g[..d - 1])?);
    }
    let base_complexity = WidthEstimate::from_samples(&base, WidthMode::Complexity);
    let mut lifted_width = WidthEstimate::from_samples(&up, WidthMode::Width);
    if let Some(exact) = closed_form_width(&lifted) {
        lifted_width = WidthEstimate {
            mean: exact,
            std_err: 0.0,
            ..lifted_width
        };
    }
    let scale = base_complexity.mean * lambda;
    if lifted_width.mean == 0.0 && lifted_width.std_err == 0.0 {
        if scale < 1.0 {
            warnings.push(format!("w*(K) * lambda = {scale:.6} is below 1"));
        }
        return Ok(LiftedWidthRatio {
            ratio: 0.0,
            lifted_width,
            base_complexity,
            warnings,
        });
    }
    if scale < 0.1 {
        return Err(Error::Hypothesis(format!("w*(K) * lambda = {scale:.6} is below 0.1")));
    }
    if scale < 1.0 {
        warnings.push(format!("w*(K) * lambda = {scale:.6} is below 1"));
    }
    Ok(LiftedWidthRatio {
        ratio: lambda * lifted_width.mean / base_complexity.mean,
        lifted_width,
        base_complexity,
        warnings,
    })
}

/// Convenience wrapper returning the lifted point as a [`Point`].
pub fn lift(x: &Point, lambda: f64) -> Result<Point> {
    Ok(lift_point(x.as_slice(), lambda)?.into_point())
}
