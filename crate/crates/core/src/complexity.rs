//! Gaussian width `w(T) = E sup <x, g>`, Gaussian complexity
//! `w*(T) = E sup |<x, g>|`, stable dimension and covering estimates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng::RngStream;
use crate::sets::{segment_grid, SetSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthMode {
    /// One-sided width `w`.
    Width,
    /// Complexity `w*`.
    Complexity,
}

impl WidthMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WidthMode::Width => "width_w",
            WidthMode::Complexity => "complexity_wstar",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub std_err: f64,
    pub samples: usize,
    pub mode: WidthMode,
}

impl WidthEstimate {
    pub fn from_samples(values: &[f64], mode: WidthMode) -> Self {
        let (mean, std_err) = math::mean_and_std_err(values);
        Self {
            mean,
            std_err,
            samples: values.len(),
            mode,
        }
    }
}

/// Monte Carlo estimate over `samples` Gaussian directions; direction `i`
/// comes from substream `i` of `rng`.
pub fn estimate_width(s: &SetSpec, mode: WidthMode, samples: usize, rng: &RngStream) -> Result<WidthEstimate> {
    if samples < 100 {
        return Err(invalid("samples", "need at least 100 samples"));
    }
    let mut g = vec![0.0; s.ambient_dim()];
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        rng.child(i as u64).generator().fill_normal(&mut g);
        values.push(match mode {
            WidthMode::Width => s.support(&g)?,
            WidthMode::Complexity => s.support_abs(&g)?,
        });
    }
    Ok(WidthEstimate::from_samples(&values, mode))
}

/// Exact `w*` where a closed form exists.
pub fn closed_form_wstar(s: &SetSpec) -> Option<f64> {
    match s {
        SetSpec::SegmentBall { a, eps, n } => Some(a * math::SQRT_TWO_OVER_PI + eps * math::chi_mean(*n)),
        SetSpec::Ball { center, radius } => {
            Some(math::SQRT_TWO_OVER_PI * center.norm() + radius * math::chi_mean(center.dim()))
        }
        SetSpec::Subsphere { k, .. } => Some(math::chi_mean(*k)),
        SetSpec::FiniteCloud(p) if p.len() == 1 => Some(math::SQRT_TWO_OVER_PI * p[0].norm()),
        _ => None,
    }
}

/// Exact one-sided width `w` where a closed form exists.
pub fn closed_form_width(s: &SetSpec) -> Option<f64> {
    match s {
        SetSpec::SegmentBall { .. } | SetSpec::Subsphere { .. } => closed_form_wstar(s),
        SetSpec::Ball { center, radius } => Some(radius * math::chi_mean(center.dim())),
        SetSpec::FiniteCloud(p) if p.len() == 1 => Some(0.0),
        SetSpec::Lifted { inner, .. } => match inner.as_ref() {
            SetSpec::FiniteCloud(p) if p.len() == 1 => Some(0.0),
            _ => None,
        },
        _ => None,
    }
}

/// `w*` from the closed form when available, else by Monte Carlo.
pub fn wstar(s: &SetSpec, samples: usize, rng: &RngStream) -> Result<f64> {
    match closed_form_wstar(s) {
        Some(v) => Ok(v),
        None => Ok(estimate_width(s, WidthMode::Complexity, samples, rng)?.mean),
    }
}

/// `d*(S) = (w*(S) / rad(S))^2`.
pub fn stable_dimension(s: &SetSpec, samples: usize, rng: &RngStream) -> Result<f64> {
    let rad = s.radius();
    if !(rad > 0.0) {
        return Err(Error::Hypothesis("stable dimension of a set with radius 0".into()));
    }
    let w = wstar(s, samples, rng)?;
    Ok((w / rad) * (w / rad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringEstimate {
    pub epsilon: f64,
    /// Greedy cover size over the sample.
    pub count_upper: usize,
    /// Greedy `2 epsilon`-separated subset size over the sample.
    pub count_lower: usize,
    /// Size of the analytic covering grid, when one is known for the family.
    pub analytic_count: Option<usize>,
    /// Whether the analytic grid is guaranteed to cover at radius `epsilon`.
    pub analytic_covers: bool,
}

/// Covering grid of a segment ball or its lift: segment grid of pitch
/// `epsilon` with zero ball block. The worst distance from a point of the
/// segment ball to the grid is `sqrt((pitch/2)^2 + eps_ball^2)`; the lift is
/// `1/lambda`-Lipschitz, so for lifted sets that distance shrinks by
/// `lambda`. Returns `(count, covers)`.
pub fn analytic_grid(s: &SetSpec, epsilon: f64) -> Option<(usize, bool)> {
    let (a, eps_ball, lambda) = match s {
        SetSpec::SegmentBall { a, eps, .. } => (*a, *eps, 1.0),
        SetSpec::Lifted { inner, lambda } => match inner.as_ref() {
            SetSpec::SegmentBall { a, eps, .. } => (*a, *eps, *lambda),
            _ => return None,
        },
        SetSpec::Ball { radius, .. } if *radius <= epsilon => return Some((1, true)),
        _ => return None,
    };
    let count = segment_grid(a, epsilon).len();
    let pitch = if count > 1 { 2.0 * a / (count - 1) as f64 } else { 0.0 };
    let worst = math::sqrt(0.25 * pitch * pitch + eps_ball * eps_ball) / lambda;
    Some((count, worst <= epsilon))
}

/// Sample-based covering estimate on the set's grid points followed by
/// `budget` sampled points.
pub fn covering_estimate(s: &SetSpec, epsilon: f64, budget: usize, rng: &RngStream) -> Result<CoveringEstimate> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be positive and finite"));
    }
    let pts = s.generate_net(epsilon, rng, budget)?;
    let greedy = |sep: f64| {
        let mut centers: Vec<&[f64]> = Vec::new();
        for p in &pts {
            if !centers.iter().any(|c| math::distance(c, p.as_slice()) <= sep) {
                centers.push(p.as_slice());
            }
        }
        centers.len()
    };
    let (analytic_count, analytic_covers) = match analytic_grid(s, epsilon) {
        Some((c, ok)) => (Some(c), ok),
        None => (None, false),
    };
    Ok(CoveringEstimate {
        epsilon,
        count_upper: greedy(epsilon),
        count_lower: greedy(2.0 * epsilon),
        analytic_count,
        analytic_covers,
    })
}
