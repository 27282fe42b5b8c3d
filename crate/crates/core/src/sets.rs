//! Structured test sets with support, membership, projection, radius and
//! net oracles.
//!
//! `SegmentBall { a, eps, n }` is `[-a, a] x B_2^n(0; eps)` in `R^{n+1}`; the
//! segment is the first coordinate. `Lifted { inner, lambda }` is the image
//! of `inner` under the lifting map and lives one dimension higher.
//! `Capped { inner, radius }` is `inner` intersected with the centred ball
//! of the given radius.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::Point;
use crate::lifting::lift_raw;
use crate::math;
use crate::rng::{RngStream, StreamRng};

/// Grid resolution of the coarse stage of the lifted support search.
const LIFT_GRID: usize = 64;
/// Golden-section iterations per coordinate sweep.
const LIFT_GOLDEN_ITERS: usize = 40;
/// Inner Dykstra steps when projecting onto a capped set.
pub const CAP_DYKSTRA_STEPS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    FiniteCloud(Vec<Point>),
    SegmentBall { a: f64, eps: f64, n: usize },
    Lifted { inner: Box<SetSpec>, lambda: f64 },
    Subsphere { n: usize, k: usize },
    Ball { center: Point, radius: f64 },
    Capped { inner: Box<SetSpec>, radius: f64 },
}

fn unsupported(op: &'static str, set: &SetSpec) -> Error {
    Error::Unsupported {
        op,
        set: set.to_string(),
    }
}

impl SetSpec {
    pub fn cloud(points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(invalid("cloud", "needs at least one point"));
        };
        let d = first.dim();
        for p in &points {
            check_dim(d, p.dim())?;
        }
        Ok(Self::FiniteCloud(points))
    }

    pub fn segment_ball(a: f64, eps: f64, n: usize) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(invalid("a", "half length must be finite and nonnegative"));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid("eps", "ball radius must be finite and nonnegative"));
        }
        if n == 0 {
            return Err(invalid("n", "ball dimension must be at least 1"));
        }
        Ok(Self::SegmentBall { a, eps, n })
    }

    pub fn lifted(inner: SetSpec, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "lift scale must be positive and finite"));
        }
        if matches!(inner, SetSpec::Lifted { .. }) {
            return Err(invalid("lifted", "nested lifts are not supported"));
        }
        Ok(Self::Lifted {
            inner: Box::new(inner),
            lambda,
        })
    }

    pub fn subsphere(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid("k", "subspace dimension must satisfy 1 <= k <= n"));
        }
        Ok(Self::Subsphere { n, k })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("r", "radius must be finite and nonnegative"));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn capped(inner: SetSpec, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("r", "cap radius must be finite and nonnegative"));
        }
        Ok(Self::Capped {
            inner: Box::new(inner),
            radius,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            SetSpec::FiniteCloud(p) => p[0].dim(),
            SetSpec::SegmentBall { n, .. } => n + 1,
            SetSpec::Lifted { inner, .. } => inner.ambient_dim() + 1,
            SetSpec::Subsphere { n, .. } => *n,
            SetSpec::Ball { center, .. } => center.dim(),
            SetSpec::Capped { inner, .. } => inner.ambient_dim(),
        }
    }

    /// Whether the set is convex, so that [`SetSpec::project`] applies.
    pub fn is_convex(&self) -> bool {
        match self {
            SetSpec::FiniteCloud(p) => p.len() == 1,
            SetSpec::SegmentBall { .. } | SetSpec::Ball { .. } => true,
            SetSpec::Capped { inner, .. } => inner.is_convex(),
            SetSpec::Lifted { .. } | SetSpec::Subsphere { .. } => false,
        }
    }

    /// `sup_{x in S} |<x, g>|`.
    pub fn support_abs(&self, g: &[f64]) -> Result<f64> {
        check_dim(self.ambient_dim(), g.len())?;
        Ok(match self {
            SetSpec::FiniteCloud(p) => p.iter().map(|x| math::abs(math::dot(x.as_slice(), g))).fold(0.0, f64::max),
            SetSpec::Lifted { inner, lambda } => {
                let up = self.lifted_support(inner, *lambda, g, false)?;
                let down = self.lifted_support(inner, *lambda, g, true)?;
                up.max(down).max(0.0)
            }
            SetSpec::Ball { center, radius } => math::abs(math::dot(center.as_slice(), g)) + radius * math::norm(g),
            // The remaining families are symmetric about the origin.
            _ => self.support(g)?.max(0.0),
        })
    }

    /// `sup_{x in S} <x, g>`.
    pub fn support(&self, g: &[f64]) -> Result<f64> {
        check_dim(self.ambient_dim(), g.len())?;
        match self {
            SetSpec::FiniteCloud(p) => Ok(p
                .iter()
                .map(|x| math::dot(x.as_slice(), g))
                .fold(f64::NEG_INFINITY, f64::max)),
            SetSpec::SegmentBall { a, eps, .. } => Ok(a * math::abs(g[0]) + eps * math::norm(&g[1..])),
            SetSpec::Ball { center, radius } => Ok(math::dot(center.as_slice(), g) + radius * math::norm(g)),
            SetSpec::Subsphere { k, .. } => Ok(math::norm(&g[..*k])),
            SetSpec::Lifted { inner, lambda } => self.lifted_support(inner, *lambda, g, false),
            SetSpec::Capped { inner, radius } => match inner.as_ref() {
                SetSpec::SegmentBall { a, eps, .. } => {
                    Ok(capped_box_support(math::abs(g[0]), math::norm(&g[1..]), *a, *eps, *radius))
                }
                SetSpec::Ball { center, radius: r } if center.is_origin() => Ok(r.min(*radius) * math::norm(g)),
                _ => Err(unsupported("support", self)),
            },
        }
    }

    /// Signed support of a lifted set; with `flip` the direction is negated.
    fn lifted_support(&self, inner: &SetSpec, lambda: f64, g: &[f64], flip: bool) -> Result<f64> {
        let d = inner.ambient_dim();
        let sgn = if flip { -1.0 } else { 1.0 };
        match inner {
            SetSpec::SegmentBall { a, eps, .. } => {
                let g1 = sgn * g[0];
                let h = math::norm(&g[1..d]);
                let tau = sgn * g[d];
                Ok(lifted_segball_max(g1, h, tau, *a, *eps, lambda))
            }
            SetSpec::FiniteCloud(points) => Ok(points
                .iter()
                .map(|x| sgn * math::dot(&lift_raw(x.as_slice(), lambda), g))
                .fold(f64::NEG_INFINITY, f64::max)),
            _ => Err(unsupported("support", self)),
        }
    }

    /// True iff the distance from `x` to the set is at most `tol` (exact for
    /// segment balls, balls, clouds and subspheres).
    pub fn membership(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.ambient_dim(), x.len())?;
        if !(tol >= 0.0) {
            return Err(invalid("tol", "tolerance must be nonnegative"));
        }
        match self {
            SetSpec::FiniteCloud(p) => Ok(p.iter().any(|q| math::distance(q.as_slice(), x) <= tol)),
            SetSpec::SegmentBall { a, eps, .. } => Ok(math::abs(x[0]) <= a + tol && math::norm(&x[1..]) <= eps + tol),
            SetSpec::Ball { center, radius } => Ok(math::distance(center.as_slice(), x) <= radius + tol),
            SetSpec::Subsphere { k, .. } => {
                let head = math::norm(&x[..*k]);
                let tail = math::norm(&x[*k..]);
                Ok(math::sqrt((head - 1.0) * (head - 1.0) + tail * tail) <= tol)
            }
            SetSpec::Lifted { inner, lambda } => {
                let d = inner.ambient_dim();
                let last = x[d];
                if last <= 0.0 || math::abs(math::norm(x) - 1.0) > tol {
                    return Ok(false);
                }
                // The inverse lift has local Lipschitz constant about
                // lambda / last^2.
                let scale = lambda / last;
                let base: Vec<f64> = x[..d].iter().map(|v| v * scale).collect();
                inner.membership(&base, tol * scale / last)
            }
            SetSpec::Capped { inner, radius } => Ok(math::norm(x) <= radius + tol && inner.membership(x, tol)?),
        }
    }

    /// Euclidean projection onto a convex set.
    pub fn project(&self, x: &[f64]) -> Result<Point> {
        check_dim(self.ambient_dim(), x.len())?;
        let mut out = x.to_vec();
        self.project_into(&mut out)?;
        Ok(Point::from_vec(out))
    }

    /// In-place variant of [`SetSpec::project`].
    pub fn project_into(&self, x: &mut [f64]) -> Result<()> {
        check_dim(self.ambient_dim(), x.len())?;
        match self {
            SetSpec::SegmentBall { a, eps, .. } => {
                x[0] = x[0].clamp(-a, *a);
                shrink_to(&mut x[1..], *eps);
                Ok(())
            }
            SetSpec::Ball { center, radius } => {
                let c = center.as_slice();
                let r = math::distance(c, x);
                if r > *radius {
                    let t = radius / r;
                    for (v, ci) in x.iter_mut().zip(c) {
                        *v = ci + (*v - ci) * t;
                    }
                }
                Ok(())
            }
            SetSpec::FiniteCloud(p) if p.len() == 1 => {
                x.copy_from_slice(p[0].as_slice());
                Ok(())
            }
            SetSpec::Capped { inner, radius } if inner.is_convex() => {
                dykstra_cap(inner, *radius, x, CAP_DYKSTRA_STEPS)?;
                inner.project_into(x)?;
                shrink_to(x, *radius);
                Ok(())
            }
            _ => Err(unsupported("project", self)),
        }
    }

    /// `sup_{x in S} ||x||_2`.
    pub fn radius(&self) -> f64 {
        match self {
            SetSpec::FiniteCloud(p) => p.iter().map(|x| x.norm()).fold(0.0, f64::max),
            SetSpec::SegmentBall { a, eps, .. } => math::sqrt(a * a + eps * eps),
            SetSpec::Ball { center, radius } => center.norm() + radius,
            SetSpec::Subsphere { .. } | SetSpec::Lifted { .. } => 1.0,
            SetSpec::Capped { inner, radius } => inner.radius().min(*radius),
        }
    }

    /// Deterministic grid part of the net plus `random_fill` sampled points.
    ///
    /// Segment balls contribute the segment grid `{-a, -a + pitch, ..., a}`
    /// with pitch at most `mesh`; lifted sets lift the net of their base.
    pub fn generate_net(&self, mesh: f64, rng: &RngStream, random_fill: usize) -> Result<Vec<Point>> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(invalid("mesh", "must be positive and finite"));
        }
        let mut pts = self.grid_points(mesh)?;
        pts.extend(self.sample_points(rng, random_fill)?);
        Ok(pts)
    }

    fn grid_points(&self, mesh: f64) -> Result<Vec<Point>> {
        Ok(match self {
            SetSpec::SegmentBall { a, n, .. } => segment_grid(*a, mesh)
                .into_iter()
                .map(|u| {
                    let mut v = vec![0.0; n + 1];
                    v[0] = u;
                    Point::from_vec(v)
                })
                .collect(),
            SetSpec::Lifted { inner, lambda } => inner
                .grid_points(mesh)?
                .iter()
                .map(|p| Point::from_vec(lift_raw(p.as_slice(), *lambda)))
                .collect(),
            SetSpec::Subsphere { n, k: 1 } => {
                let mut e = vec![0.0; *n];
                e[0] = 1.0;
                let mut f = vec![0.0; *n];
                f[0] = -1.0;
                vec![Point::from_vec(e), Point::from_vec(f)]
            }
            SetSpec::Subsphere { .. } => Vec::new(),
            SetSpec::FiniteCloud(p) => p.clone(),
            SetSpec::Ball { center, .. } => vec![center.clone()],
            SetSpec::Capped { inner, radius } => inner
                .grid_points(mesh)?
                .into_iter()
                .map(|p| {
                    let mut v = p.into_vec();
                    shrink_to(&mut v, *radius);
                    Point::from_vec(v)
                })
                .collect(),
        })
    }

    /// `count` random points of the set. Segment balls, balls and
    /// subspheres are sampled uniformly; lifted sets are the lift of uniform
    /// base samples; capped sets radially shrink samples of the inner set.
    pub fn sample_points(&self, rng: &RngStream, count: usize) -> Result<Vec<Point>> {
        let mut g = rng.generator();
        (0..count).map(|_| self.sample_one(&mut g)).collect()
    }

    fn sample_one(&self, g: &mut StreamRng) -> Result<Point> {
        Ok(match self {
            SetSpec::SegmentBall { a, eps, n } => {
                let mut v = vec![0.0; n + 1];
                v[0] = g.uniform_in(-a, *a);
                if *eps > 0.0 {
                    sample_ball(g, &mut v[1..], *eps);
                }
                Point::from_vec(v)
            }
            SetSpec::Ball { center, radius } => {
                let mut v = vec![0.0; center.dim()];
                sample_ball(g, &mut v, *radius);
                for (vi, ci) in v.iter_mut().zip(center.as_slice()) {
                    *vi += ci;
                }
                Point::from_vec(v)
            }
            SetSpec::Subsphere { n, k } => {
                let mut v = vec![0.0; *n];
                loop {
                    g.fill_normal(&mut v[..*k]);
                    let r = math::norm(&v[..*k]);
                    if r > 0.0 {
                        for x in &mut v[..*k] {
                            *x /= r;
                        }
                        break;
                    }
                }
                Point::from_vec(v)
            }
            SetSpec::FiniteCloud(p) => p[g.below(p.len())].clone(),
            SetSpec::Lifted { inner, lambda } => {
                let base = inner.sample_one(g)?;
                Point::from_vec(lift_raw(base.as_slice(), *lambda))
            }
            SetSpec::Capped { inner, radius } => {
                let mut v = inner.sample_one(g)?.into_vec();
                shrink_to(&mut v, *radius);
                Point::from_vec(v)
            }
        })
    }
}

/// Grid `{-a, ..., a}` with `ceil(2a / mesh) + 1` equally spaced points.
pub fn segment_grid(a: f64, mesh: f64) -> Vec<f64> {
    if a == 0.0 {
        return vec![0.0];
    }
    let count = math::ceil_tolerant(2.0 * a / mesh) as usize + 1;
    let pitch = 2.0 * a / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { a } else { -a + pitch * i as f64 })
        .collect()
}

fn shrink_to(v: &mut [f64], r: f64) {
    let n = math::norm(v);
    if n > r {
        let t = r / n;
        for x in v {
            *x *= t;
        }
    }
}

fn sample_ball(g: &mut StreamRng, out: &mut [f64], r: f64) {
    loop {
        g.fill_normal(out);
        let nrm = math::norm(out);
        if nrm > 0.0 {
            let scale = r * math::powf(g.uniform(), 1.0 / out.len() as f64) / nrm;
            for x in out.iter_mut() {
                *x *= scale;
            }
            return;
        }
    }
}

/// Dykstra iterations between a convex `inner` set and the centred ball of
/// radius `r`, starting from `x`.
fn dykstra_cap(inner: &SetSpec, r: f64, x: &mut [f64], steps: usize) -> Result<()> {
    let d = x.len();
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut y = vec![0.0; d];
    for _ in 0..steps {
        for i in 0..d {
            y[i] = x[i] + p[i];
        }
        let before = y.clone();
        inner.project_into(&mut y)?;
        for i in 0..d {
            p[i] = before[i] - y[i];
            x[i] = y[i] + q[i];
        }
        let before = x.to_vec();
        shrink_to(x, r);
        for i in 0..d {
            q[i] = before[i] - x[i];
        }
    }
    Ok(())
}

/// `max u * g1 + s * h` over `[-a, a] x [0, eps]` intersected with the disk
/// of radius `r`, for `g1, h >= 0`.
fn capped_box_support(g1: f64, h: f64, a: f64, eps: f64, r: f64) -> f64 {
    let mut best = 0.0f64;
    let mut consider = |u: f64, s: f64| {
        if math::abs(u) <= a * (1.0 + 1e-15) && (0.0..=eps * (1.0 + 1e-15)).contains(&s) && u * u + s * s <= r * r * (1.0 + 1e-12) {
            best = best.max(u * g1 + s * h);
        }
    };
    let gn = math::sqrt(g1 * g1 + h * h);
    if gn > 0.0 {
        consider(r * g1 / gn, r * h / gn);
    }
    for (u, s) in [(a, 0.0), (a, eps), (-a, eps), (-a, 0.0)] {
        consider(u, s);
    }
    if r >= a {
        consider(a, math::sqrt(r * r - a * a));
    }
    if r <= a {
        consider(r, 0.0);
    }
    if r >= eps {
        consider(math::sqrt(r * r - eps * eps), eps);
    }
    best
}

#[inline]
fn lift_objective(u: f64, s: f64, g1: f64, h: f64, tau: f64, lambda: f64) -> f64 {
    (u * g1 + s * h + lambda * tau) / math::sqrt(u * u + s * s + lambda * lambda)
}

/// `max (u g1 + s h + lambda tau) / sqrt(u^2 + s^2 + lambda^2)` over
/// `(u, s) in [-a, a] x [0, eps]`: coarse grid, then alternating
/// golden-section sweeps over full coordinate ranges. Along each coordinate
/// the objective has at most one interior critical point, so each sweep is
/// an exact one-dimensional maximisation.
pub fn lifted_segball_max(g1: f64, h: f64, tau: f64, a: f64, eps: f64, lambda: f64) -> f64 {
    let f = |u: f64, s: f64| lift_objective(u, s, g1, h, tau, lambda);
    let step_u = if a > 0.0 { 2.0 * a / (LIFT_GRID - 1) as f64 } else { 0.0 };
    let step_s = eps / (LIFT_GRID - 1) as f64;
    let (mut u, mut s, mut best) = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..LIFT_GRID {
        let ui = -a + step_u * i as f64;
        for j in 0..LIFT_GRID {
            let sj = step_s * j as f64;
            let v = f(ui, sj);
            if v > best {
                (u, s, best) = (ui, sj, v);
            }
        }
    }
    for _ in 0..50 {
        let prev = best;
        if a > 0.0 {
            let (nu, v) = math::golden_max(&mut |t| f(t, s), -a, a, LIFT_GOLDEN_ITERS);
            if v > best {
                (u, best) = (nu, v);
            }
        }
        if eps > 0.0 {
            let (ns, v) = math::golden_max(&mut |t| f(u, t), 0.0, eps, LIFT_GOLDEN_ITERS);
            if v > best {
                (s, best) = (ns, v);
            }
        }
        if best - prev <= 1e-16 * best.abs().max(1.0) {
            break;
        }
    }
    best
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::FiniteCloud(pts) => {
                f.write_str("cloud:")?;
                for (i, p) in pts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write_coords(f, p.as_slice())?;
                }
                Ok(())
            }
            SetSpec::SegmentBall { a, eps, n } => write!(f, "segball:a={a:?},eps={eps:?},n={n}"),
            SetSpec::Lifted { inner, lambda } => write!(f, "lifted({inner}):lambda={lambda:?}"),
            SetSpec::Subsphere { n, k } => write!(f, "subsphere:n={n},k={k}"),
            SetSpec::Ball { center, radius } => {
                if center.is_origin() {
                    write!(f, "ball:n={},r={radius:?}", center.dim())
                } else {
                    f.write_str("ball:c=")?;
                    write_coords(f, center.as_slice())?;
                    write!(f, ",r={radius:?}")
                }
            }
            SetSpec::Capped { inner, radius } => write!(f, "cap({inner}):r={radius:?}"),
        }
    }
}

fn write_coords(f: &mut fmt::Formatter<'_>, c: &[f64]) -> fmt::Result {
    for (i, v) in c.iter().enumerate() {
        if i > 0 {
            f.write_str(";")?;
        }
        write!(f, "{v:?}")?;
    }
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| parse_err(format!("`{key}` is not a number: `{v}`")))?;
    if !x.is_finite() {
        return Err(parse_err(format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| parse_err(format!("`{key}` is not a nonnegative integer: `{v}`")))
}

fn parse_coords(s: &str) -> Result<Point> {
    let c = s.split(';').map(|v| parse_f64("coordinate", v)).collect::<Result<Vec<_>>>()?;
    Point::new(c).map_err(|e| parse_err(e.to_string()))
}

/// Splits `key=value` pairs and checks that exactly the `allowed` keys
/// appear, each at most once.
fn key_values<'a>(body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for item in body.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{item}`")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(parse_err(format!("unknown key `{k}`")));
        }
        if out.iter().any(|(o, _)| *o == k) {
            return Err(parse_err(format!("duplicate key `{k}`")));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn get<'a>(kv: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn require<'a>(kv: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    get(kv, key).ok_or_else(|| parse_err(format!("missing key `{key}`")))
}

/// Parses `name(<inner>):rest`, returning `(inner, rest)`.
fn wrapped<'a>(s: &'a str, name: &str) -> Result<(&'a str, &'a str)> {
    let open = name.len();
    let mut depth = 0usize;
    for (i, ch) in s[open..].char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    let close = open + i;
                    let rest = s[close + 1..]
                        .strip_prefix(':')
                        .ok_or_else(|| parse_err(format!("expected `:` after `{name}(...)`")))?;
                    return Ok((&s[open + 1..close], rest));
                }
            }
            _ => {}
        }
    }
    Err(parse_err(format!("unbalanced parentheses in `{s}`")))
}

impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let wrap = |e: Error| match e {
            Error::Parse(_) => e,
            other => parse_err(other.to_string()),
        };
        if s.starts_with("lifted(") {
            let (inner, rest) = wrapped(s, "lifted")?;
            let kv = key_values(rest, &["lambda"])?;
            let lambda = parse_f64("lambda", require(&kv, "lambda")?)?;
            return SetSpec::lifted(inner.parse()?, lambda).map_err(wrap);
        }
        if s.starts_with("cap(") {
            let (inner, rest) = wrapped(s, "cap")?;
            let kv = key_values(rest, &["r"])?;
            let r = parse_f64("r", require(&kv, "r")?)?;
            return SetSpec::capped(inner.parse()?, r).map_err(wrap);
        }
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| parse_err(format!("expected `<kind>:<params>`, got `{s}`")))?;
        match kind {
            "segball" => {
                let kv = key_values(body, &["a", "eps", "n"])?;
                SetSpec::segment_ball(
                    parse_f64("a", require(&kv, "a")?)?,
                    parse_f64("eps", require(&kv, "eps")?)?,
                    parse_usize("n", require(&kv, "n")?)?,
                )
                .map_err(wrap)
            }
            "subsphere" => {
                let kv = key_values(body, &["n", "k"])?;
                SetSpec::subsphere(parse_usize("n", require(&kv, "n")?)?, parse_usize("k", require(&kv, "k")?)?)
                    .map_err(wrap)
            }
            "ball" => {
                let kv = key_values(body, &["n", "r", "c"])?;
                let r = parse_f64("r", require(&kv, "r")?)?;
                let center = match (get(&kv, "c"), get(&kv, "n")) {
                    (Some(c), n) => {
                        let c = parse_coords(c)?;
                        if let Some(n) = n {
                            if parse_usize("n", n)? != c.dim() {
                                return Err(parse_err("`n` disagrees with the centre dimension"));
                            }
                        }
                        c
                    }
                    (None, Some(n)) => {
                        let n = parse_usize("n", n)?;
                        if n == 0 {
                            return Err(parse_err("`n` must be at least 1"));
                        }
                        Point::origin(n)
                    }
                    (None, None) => return Err(parse_err("ball needs `n` or `c`")),
                };
                SetSpec::ball(center, r).map_err(wrap)
            }
            "cloud" => {
                let pts = body.split('|').map(parse_coords).collect::<Result<Vec<_>>>()?;
                SetSpec::cloud(pts).map_err(wrap)
            }
            other => Err(parse_err(format!("unknown set kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sb(a: f64, eps: f64, n: usize) -> SetSpec {
        SetSpec::segment_ball(a, eps, n).unwrap()
    }

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn gaussian(g: &mut StreamRng, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        g.fill_normal(&mut v);
        v
    }

    /// Exact lifted support by enumerating the critical points of the
    /// objective: the interior stationary point, the one-dimensional
    /// stationary points on each edge, and the corners.
    fn lifted_max_by_candidates(g1: f64, h: f64, tau: f64, a: f64, eps: f64, lambda: f64) -> f64 {
        let f = |u: f64, s: f64| lift_objective(u, s, g1, h, tau, lambda);
        let mut cands = vec![(a, 0.0), (-a, 0.0), (a, eps), (-a, eps)];
        if tau > 0.0 {
            cands.push((lambda / tau * g1, lambda / tau * h));
        }
        for u in [-a, a] {
            let alpha = u * g1 + lambda * tau;
            if alpha != 0.0 {
                cands.push((u, h * (u * u + lambda * lambda) / alpha));
            }
        }
        for s in [0.0, eps] {
            let alpha = s * h + lambda * tau;
            if alpha != 0.0 {
                cands.push((g1 * (s * s + lambda * lambda) / alpha, s));
            }
        }
        cands
            .into_iter()
            .filter(|&(u, s)| u.abs() <= a && (0.0..=eps).contains(&s))
            .map(|(u, s)| f(u, s))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Brute-force 400 x 400 grid followed by repeated local zoom.
    fn lifted_max_by_grid(g1: f64, h: f64, tau: f64, a: f64, eps: f64, lambda: f64) -> f64 {
        let f = |u: f64, s: f64| lift_objective(u, s, g1, h, tau, lambda);
        let (mut lo_u, mut hi_u, mut lo_s, mut hi_s) = (-a, a, 0.0, eps);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..6 {
            let mut arg = (0.0, 0.0);
            for i in 0..=400 {
                let u = lo_u + (hi_u - lo_u) * i as f64 / 400.0;
                for j in 0..=400 {
                    let s = lo_s + (hi_s - lo_s) * j as f64 / 400.0;
                    let v = f(u, s);
                    if v > best {
                        best = v;
                        arg = (u, s);
                    }
                }
            }
            let (du, ds) = ((hi_u - lo_u) / 100.0, (hi_s - lo_s) / 100.0);
            lo_u = (arg.0 - du).max(-a);
            hi_u = (arg.0 + du).min(a);
            lo_s = (arg.1 - ds).max(0.0);
            hi_s = (arg.1 + ds).min(eps);
        }
        best
    }

    #[test]
    fn support_examples() {
        assert_eq!(sb(1.0, 0.0, 3).support_abs(&[2.0, 1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert!((sb(0.6, 0.1, 2).support_abs(&[1.0, 3.0, 4.0]).unwrap() - 1.1).abs() < 1e-15);
        let single = SetSpec::lifted(sb(0.0, 0.0, 1), 1.0).unwrap();
        assert!((single.support_abs(&[0.0, 0.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(sb(1.0, 0.0, 3).support_abs(&[1.0]).is_err());
    }

    #[test]
    fn membership_examples() {
        let s = sb(0.6, 0.1, 2);
        assert!(s.membership(&[0.5, 0.06, 0.08], 0.0).unwrap());
        assert!(!s.membership(&[0.7, 0.0, 0.0], 0.0).unwrap());
        assert!(s.membership(&[0.61, 0.0, 0.0], 0.02).unwrap());
    }

    #[test]
    fn projection_examples() {
        let s = sb(1.0, 1.0, 2);
        assert_eq!(s.project(&[0.3, 0.2, -0.1]).unwrap().as_slice(), &[0.3, 0.2, -0.1]);
        let p = sb(0.5, 0.1, 1).project(&[2.0, -0.3]).unwrap();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-15 && (p.as_slice()[1] + 0.1).abs() < 1e-15);
        let b = SetSpec::ball(Point::origin(2), 1.0).unwrap();
        let q = b.project(&[3.0, 4.0]).unwrap();
        assert!((q.as_slice()[0] - 0.6).abs() < 1e-15 && (q.as_slice()[1] - 0.8).abs() < 1e-15);
        assert!(SetSpec::subsphere(3, 2).unwrap().project(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn radius_examples() {
        assert!((sb(0.6, 0.1, 5).radius() - 0.37f64.sqrt()).abs() < 1e-15);
        assert!((sb(0.6, 0.1, 5).radius() - 0.6083).abs() < 1e-4);
        assert_eq!(SetSpec::subsphere(10, 3).unwrap().radius(), 1.0);
        assert_eq!(SetSpec::lifted(sb(0.6, 0.1, 5), 3.0).unwrap().radius(), 1.0);
    }

    #[test]
    fn net_examples() {
        let rng = RngStream::root(1);
        let net = sb(0.5, 0.0, 1).generate_net(0.1, &rng, 0).unwrap();
        assert_eq!(net.len(), 11);
        for (i, p) in net.iter().enumerate() {
            assert!((p.as_slice()[0] - (-0.5 + 0.1 * i as f64)).abs() < 1e-12);
        }
        let lifted = SetSpec::lifted(sb(0.5, 0.0, 1), 1.0).unwrap();
        let lnet = lifted.generate_net(0.1, &rng, 0).unwrap();
        assert_eq!(lnet.len(), 11);
        for (p, q) in lnet.iter().zip(&net) {
            assert_eq!(p.as_slice(), lift_raw(q.as_slice(), 1.0).as_slice());
        }
        let s = sb(0.5, 0.1, 50);
        let big = s.generate_net(0.1, &rng, 200).unwrap();
        assert_eq!(big.len(), 211);
        for p in &big {
            assert!(s.membership(p.as_slice(), 1e-9).unwrap());
        }
        let pm = SetSpec::subsphere(3, 1).unwrap().generate_net(0.1, &rng, 0).unwrap();
        assert_eq!(pm.len(), 2);
    }

    #[test]
    fn nets_of_every_family_are_members() {
        let rng = RngStream::root(2);
        let sets = [
            sb(0.6, 0.1, 20),
            SetSpec::lifted(sb(0.6, 0.1, 20), 3.0).unwrap(),
            SetSpec::subsphere(12, 4).unwrap(),
            SetSpec::ball(pt(&[1.0, -1.0, 0.5]), 0.7).unwrap(),
            SetSpec::capped(sb(0.6, 0.1, 20), 0.2).unwrap(),
        ];
        for s in &sets {
            for p in s.generate_net(0.05, &rng, 100).unwrap() {
                assert!(s.membership(p.as_slice(), 1e-9).unwrap(), "{s}");
            }
        }
    }

    #[test]
    fn support_dominates_net_inner_products() {
        let rng = RngStream::root(3);
        let sets = [
            sb(0.6, 0.1, 20),
            SetSpec::lifted(sb(0.6, 0.1, 20), 3.0).unwrap(),
            SetSpec::lifted(sb(0.9, 0.3, 5), 1.5).unwrap(),
            SetSpec::subsphere(12, 4).unwrap(),
            SetSpec::ball(pt(&[1.0, -1.0, 0.5]), 0.7).unwrap(),
            SetSpec::capped(sb(0.6, 0.1, 20), 0.2).unwrap(),
            SetSpec::cloud(vec![pt(&[1.0, 2.0]), pt(&[-3.0, 0.5])]).unwrap(),
        ];
        let mut g = RngStream::root(4).generator();
        for s in &sets {
            let net = s.generate_net(0.05, &rng, 200).unwrap();
            for _ in 0..1000 {
                let dir = gaussian(&mut g, s.ambient_dim());
                let sup = s.support_abs(&dir).unwrap();
                let sgn = s.support(&dir).unwrap();
                for p in &net {
                    let ip = math::dot(p.as_slice(), &dir);
                    assert!(ip.abs() <= sup + 1e-12, "{s}");
                    assert!(ip <= sgn + 1e-12, "{s}");
                }
            }
        }
    }

    #[test]
    fn support_is_positively_homogeneous() {
        let sets = [
            sb(0.6, 0.1, 20),
            SetSpec::lifted(sb(0.6, 0.1, 20), 3.0).unwrap(),
            SetSpec::subsphere(12, 4).unwrap(),
            SetSpec::ball(pt(&[0.2; 5]), 0.3).unwrap(),
            SetSpec::capped(sb(0.6, 0.1, 20), 0.2).unwrap(),
        ];
        let mut g = RngStream::root(5).generator();
        for s in &sets {
            for _ in 0..200 {
                let dir = gaussian(&mut g, s.ambient_dim());
                let c = 0.1 + 5.0 * g.uniform();
                let scaled: Vec<f64> = dir.iter().map(|v| c * v).collect();
                let a = s.support_abs(&scaled).unwrap();
                let b = c * s.support_abs(&dir).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lifted_support_matches_candidate_enumeration_and_grid() {
        let mut g = RngStream::root(6).generator();
        for trial in 0..100 {
            let (a, eps, lambda) = match trial % 3 {
                0 => (0.6, 0.1, 2.9),
                1 => (1.0, 0.5, 1.0),
                _ => (g.uniform_in(0.01, 1.0), g.uniform_in(0.0, 0.5), g.uniform_in(0.5, 5.0)),
            };
            let (g1, h, tau) = (g.normal(), g.normal().abs() * 3.0, g.normal());
            let prod = lifted_segball_max(g1, h, tau, a, eps, lambda);
            let exact = lifted_max_by_candidates(g1, h, tau, a, eps, lambda);
            assert!((prod - exact).abs() <= 1e-8, "trial {trial}: {prod} vs {exact}");
            if trial < 30 {
                let brute = lifted_max_by_grid(g1, h, tau, a, eps, lambda);
                assert!((prod - brute).abs() <= 1e-6, "trial {trial}: {prod} vs grid {brute}");
            }
        }
    }

    #[test]
    fn capped_support_matches_sampled_maximum() {
        let s = SetSpec::capped(sb(0.6, 0.1, 3), 0.2).unwrap();
        let mut g = RngStream::root(7).generator();
        for _ in 0..50 {
            let dir = gaussian(&mut g, 4);
            let sup = s.support(&dir).unwrap();
            // Maximiser lies in the 2-plane spanned by e1 and the ball part of dir.
            let h = math::norm(&dir[1..]);
            let mut best = 0.0f64;
            for i in 0..=2000 {
                let u = -0.6 + 1.2 * i as f64 / 2000.0;
                for j in 0..=100 {
                    let sv = 0.1 * j as f64 / 100.0;
                    if u * u + sv * sv <= 0.04 {
                        best = best.max(u * dir[0] + sv * h);
                    }
                }
            }
            assert!(sup >= best - 1e-12 && sup - best < 1e-3, "{sup} vs {best}");
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let sets = [
            sb(0.6, 0.1, 4),
            SetSpec::ball(pt(&[0.5, -0.2, 0.1, 0.0, 0.3]), 0.4).unwrap(),
            SetSpec::cloud(vec![pt(&[1.0, 2.0, 3.0, 4.0, 5.0])]).unwrap(),
        ];
        let mut g = RngStream::root(8).generator();
        for s in &sets {
            for _ in 0..10_000 {
                let x = gaussian(&mut g, 5);
                let y = gaussian(&mut g, 5);
                let px = s.project(&x).unwrap();
                let py = s.project(&y).unwrap();
                let ppx = s.project(px.as_slice()).unwrap();
                assert!(math::distance(ppx.as_slice(), px.as_slice()) <= 1e-12);
                assert!(math::distance(px.as_slice(), py.as_slice()) <= math::distance(&x, &y) + 1e-12);
            }
        }
    }

    #[test]
    fn capped_projection_lands_in_both_sets() {
        let inner = sb(0.6, 0.1, 6);
        let s = SetSpec::capped(inner.clone(), 0.2).unwrap();
        let mut g = RngStream::root(9).generator();
        for _ in 0..1000 {
            let x = gaussian(&mut g, 7);
            let p = s.project(&x).unwrap();
            assert!(inner.membership(p.as_slice(), 1e-12).unwrap());
            assert!(p.norm() <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn text_form_examples() {
        let s: SetSpec = "segball:a=0.6,eps=0.1,n=900".parse().unwrap();
        assert_eq!(s, sb(0.6, 0.1, 900));
        let l: SetSpec = "lifted(segball:a=0.6,eps=0.1,n=900):lambda=3".parse().unwrap();
        assert_eq!(l, SetSpec::lifted(sb(0.6, 0.1, 900), 3.0).unwrap());
        let q: SetSpec = "subsphere:n=900,k=40".parse().unwrap();
        assert_eq!(q, SetSpec::subsphere(900, 40).unwrap());
        let b: SetSpec = "ball:n=3,r=1".parse().unwrap();
        assert_eq!(b, SetSpec::ball(Point::origin(3), 1.0).unwrap());
        let c: SetSpec = "cap(segball:a=0.6,eps=0.1,n=9):r=0.2".parse().unwrap();
        assert_eq!(c.ambient_dim(), 10);
        for bad in ["", "segball:a=1", "segball:a=1,eps=0,n=1,x=2", "lifted(segball:a=1,eps=0,n=1", "sphere:n=3", "subsphere:n=3,k=4"] {
            assert!(matches!(bad.parse::<SetSpec>(), Err(Error::Parse(_))), "{bad}");
        }
    }

    fn arb_spec() -> impl Strategy<Value = SetSpec> {
        let segball = (0.0f64..2.0, 0.0f64..1.0, 1usize..50).prop_map(|(a, e, n)| sb(a, e, n));
        let sub = (1usize..30).prop_flat_map(|n| (Just(n), 1..=n)).prop_map(|(n, k)| SetSpec::subsphere(n, k).unwrap());
        let ball = (proptest::collection::vec(-3.0f64..3.0, 1..5), 0.0f64..2.0)
            .prop_map(|(c, r)| SetSpec::ball(Point::new(c).unwrap(), r).unwrap());
        let cloud = proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 1..4)
            .prop_map(|pts| SetSpec::cloud(pts.into_iter().map(|c| Point::new(c).unwrap()).collect()).unwrap());
        let base = prop_oneof![segball, sub, ball, cloud];
        (base, 0u8..3, 0.1f64..10.0).prop_map(|(b, wrap, t)| match wrap {
            0 => b,
            1 => SetSpec::lifted(b, t).unwrap(),
            _ => SetSpec::capped(b, t).unwrap(),
        })
    }

    proptest! {
        #[test]
        fn text_form_round_trips(s in arb_spec()) {
            let text = s.to_string();
            let back: SetSpec = text.parse().unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
