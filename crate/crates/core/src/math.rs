//! Scalar and vector numerics shared by every module.
//!
//! The crate is `no_std`, so transcendental functions come from `libm`.
//! Keeping them behind one module means every build of the crate evaluates
//! the same code path, which the reproducibility contract relies on.

use core::f64::consts::PI;

pub const SQRT_2: f64 = core::f64::consts::SQRT_2;
/// `sqrt(pi / 2)`.
pub const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;
/// `sqrt(2 / pi)`, the mean of the folded standard normal.
pub const SQRT_TWO_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Vectors longer than this are summed pairwise.
pub const PAIRWISE_THRESHOLD: usize = 10_000;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}
#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}
#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `P(|Z| <= x)` for a standard normal `Z`.
pub fn folded_normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x / SQRT_2)
    }
}

/// Mean of the chi distribution with `k` degrees of freedom, `E ||g||_2`
/// for `g` standard Gaussian in dimension `k`. Evaluated in log space so
/// that large `k` does not overflow the Gamma function.
pub fn chi_mean(k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    SQRT_2 * exp(lgamma((k + 1.0) / 2.0) - lgamma(k / 2.0))
}

/// Inverse of the ceiling that tolerates floating noise just above an
/// integer, e.g. `0.9 / 0.3 = 3.0000000000000004` maps to 3.
pub fn ceil_tolerant(x: f64) -> f64 {
    let r = libm::round(x);
    if abs(x - r) <= 1e-9 * r.max(1.0) {
        r
    } else {
        ceil(x)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn pairwise_sum_by(n: usize, f: &dyn Fn(usize) -> f64, lo: usize) -> f64 {
    if n <= 64 {
        let mut s = 0.0;
        for i in lo..lo + n {
            s += f(i);
        }
        s
    } else {
        let half = n / 2;
        pairwise_sum_by(half, f, lo) + pairwise_sum_by(n - half, f, lo + half)
    }
}

/// Sum of a slice; pairwise above [`PAIRWISE_THRESHOLD`].
pub fn sum(xs: &[f64]) -> f64 {
    if xs.len() > PAIRWISE_THRESHOLD {
        pairwise_sum_by(xs.len(), &|i| xs[i], 0)
    } else {
        xs.iter().sum()
    }
}

/// Inner product; pairwise above [`PAIRWISE_THRESHOLD`]. Lengths must match.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() > PAIRWISE_THRESHOLD {
        pairwise_sum_by(a.len(), &|i| a[i] * b[i], 0)
    } else {
        // Four accumulators let the optimiser vectorise the hot loop.
        let mut acc = [0.0f64; 4];
        let chunks = a.len() / 4;
        for c in 0..chunks {
            let i = 4 * c;
            acc[0] += a[i] * b[i];
            acc[1] += a[i + 1] * b[i + 1];
            acc[2] += a[i + 2] * b[i + 2];
            acc[3] += a[i + 3] * b[i + 3];
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for i in 4 * chunks..a.len() {
            s += a[i] * b[i];
        }
        s
    }
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(norm_sq(a))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    sqrt(s)
}

/// Mean and standard error (sample std / sqrt(n)) with compensated sums.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::new();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let mut v = CompensatedSum::new();
    for &x in xs {
        let d = x - mean;
        v.add(d * d);
    }
    let var = v.value() / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`, comparing against the endpoints as well.
pub fn golden_max(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Bisection root of a monotone nondecreasing `f` on `[lo, hi]`.
pub fn bisect_increasing(f: &dyn Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn pi() -> f64 {
    PI
}
