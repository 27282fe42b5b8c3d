//! Distortion of a hyperplane tessellation over a collection of pairs.
//!
//! Spherical mode compares the Hamming fraction of homogeneous sign patterns
//! with the normalised geodesic distance. Euclidean mode compares
//! `pi * lambda * d_hat` with `||x - y||`, where `d_hat` is the fraction of
//! affine hyperplanes separating the pair.
//!
//! A pair set is a finite sample of the target set, so a passing report is
//! evidence, never a certificate; every report carries the provenance of its
//! pairs.

use alloc::vec;
use alloc::vec::Vec;

use crate::batch::{sign_patterns, HyperplaneSource};
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{geodesic_distance_raw, Point, SignPattern};
use crate::lifting::check_shift_scale;
use crate::math;
use crate::rng::RngStream;
use crate::sets::SetSpec;

/// Nets larger than this are checked on a random subset of pairs.
pub const ALL_PAIRS_MAX_POINTS: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    NetAllPairs,
    RandomPairs,
    WitnessTargeted,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::NetAllPairs => "net_all_pairs",
            Provenance::RandomPairs => "random_pairs",
            Provenance::WitnessTargeted => "witness_targeted",
        }
    }
}

/// Points plus index pairs into them. Pairs are grouped in runs sharing a
/// provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    points: Vec<Point>,
    pairs: Vec<(u32, u32)>,
    runs: Vec<(Provenance, usize)>,
}

impl PairSet {
    pub fn new(points: Vec<Point>, pairs: Vec<(usize, usize)>, provenance: Provenance) -> Result<Self> {
        let mut s = Self {
            points,
            pairs: Vec::new(),
            runs: Vec::new(),
        };
        if s.points.is_empty() {
            return Err(invalid("pairs", "need at least one point"));
        }
        let d = s.points[0].dim();
        for p in &s.points {
            check_dim(d, p.dim())?;
        }
        s.push_pairs(pairs, provenance)?;
        if s.pairs.is_empty() {
            return Err(invalid("pairs", "need at least one pair"));
        }
        Ok(s)
    }

    /// Single pair `(x, y)`.
    pub fn single(x: Point, y: Point, provenance: Provenance) -> Result<Self> {
        Self::new(vec![x, y], vec![(0, 1)], provenance)
    }

    /// All pairs among `points` when there are at most `max_points` of them;
    /// otherwise `max_points (max_points - 1) / 2` random pairs together with
    /// every pair `(i, anchor)`.
    pub fn from_net(points: Vec<Point>, anchor: Option<usize>, rng: &RngStream, max_points: usize) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Self::new(points, vec![(0, 0)], Provenance::NetAllPairs);
        }
        if let Some(a) = anchor {
            if a >= n {
                return Err(invalid("anchor", "index out of range"));
            }
        }
        if n <= max_points.max(2) {
            let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push((i, j));
                }
            }
            return Self::new(points, pairs, Provenance::NetAllPairs);
        }
        let budget = max_points * (max_points - 1) / 2;
        let mut g = rng.generator();
        let mut pairs = Vec::with_capacity(budget);
        while pairs.len() < budget {
            let i = g.below(n);
            let j = g.below(n);
            if i != j {
                pairs.push((i.min(j), i.max(j)));
            }
        }
        let mut s = Self::new(points, pairs, Provenance::RandomPairs)?;
        if let Some(a) = anchor {
            let anchored: Vec<(usize, usize)> = (0..n).filter(|&i| i != a).map(|i| (i.min(a), i.max(a))).collect();
            s.push_pairs(anchored, Provenance::NetAllPairs)?;
        }
        Ok(s)
    }

    fn push_pairs(&mut self, pairs: Vec<(usize, usize)>, provenance: Provenance) -> Result<()> {
        let n = self.points.len();
        if n > u32::MAX as usize {
            return Err(invalid("pairs", "too many points"));
        }
        if pairs.is_empty() {
            return Ok(());
        }
        for &(i, j) in &pairs {
            if i >= n || j >= n {
                return Err(invalid("pairs", "pair index out of range"));
            }
        }
        self.pairs.extend(pairs.iter().map(|&(i, j)| (i as u32, j as u32)));
        match self.runs.last_mut() {
            Some((p, len)) if *p == provenance => *len += pairs.len(),
            _ => self.runs.push((provenance, pairs.len())),
        }
        Ok(())
    }

    /// Appends explicit pairs of new points, e.g. witness pairs.
    pub fn add_pairs(&mut self, extra: &[(Point, Point)], provenance: Provenance) -> Result<()> {
        let d = self.dim();
        let mut idx = Vec::with_capacity(extra.len());
        for (x, y) in extra {
            check_dim(d, x.dim())?;
            check_dim(d, y.dim())?;
            let i = self.points.len();
            self.points.push(x.clone());
            self.points.push(y.clone());
            idx.push((i, i + 1));
        }
        self.push_pairs(idx, provenance)
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        let (i, j) = self.pairs[idx];
        (i as usize, j as usize)
    }

    pub fn provenance_of(&self, idx: usize) -> Provenance {
        let mut start = 0;
        for &(p, len) in &self.runs {
            if idx < start + len {
                return p;
            }
            start += len;
        }
        unreachable!("pair index within range")
    }

    pub fn provenances(&self) -> Vec<Provenance> {
        let mut out: Vec<Provenance> = Vec::new();
        for &(p, _) in &self.runs {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Checks that every point belongs to `s` up to `tol`.
    pub fn check_membership(&self, s: &SetSpec, tol: f64) -> Result<()> {
        for p in &self.points {
            if !s.membership(p.as_slice(), tol)? {
                return Err(Error::Hypothesis(alloc::format!("a pair point lies outside {s}")));
            }
        }
        Ok(())
    }
}

/// Nearest-rank quantiles of the per-pair statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TessellationReport {
    pub max_violation: f64,
    pub worst_pair: (Point, Point),
    pub worst_pair_index: (usize, usize),
    pub worst_provenance: Provenance,
    pub delta: f64,
    pub passed: bool,
    pub quantiles: Quantiles,
    pub pairs: usize,
    pub provenance: Vec<Provenance>,
}

/// Nearest-rank quantile by selection: the `ceil(q N)`-th smallest value.
pub fn select_quantile(values: &mut [f64], q: f64) -> f64 {
    let n = values.len();
    let rank = (math::ceil(q * n as f64) as usize).clamp(1, n);
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    *v
}

/// Reduces per-pair statistics to a report; ties keep the first pair.
pub fn report_from_stats(pairs: &PairSet, stats: &mut [f64], delta: f64) -> TessellationReport {
    let mut worst = 0;
    for (i, &v) in stats.iter().enumerate() {
        if v > stats[worst] {
            worst = i;
        }
    }
    let max_violation = stats[worst];
    let (i, j) = pairs.pair(worst);
    let quantiles = Quantiles {
        p50: select_quantile(stats, 0.5),
        p90: select_quantile(stats, 0.9),
        p99: select_quantile(stats, 0.99),
    };
    TessellationReport {
        max_violation,
        worst_pair: (pairs.points[i].clone(), pairs.points[j].clone()),
        worst_pair_index: (i, j),
        worst_provenance: pairs.provenance_of(worst),
        delta,
        passed: max_violation <= delta,
        quantiles,
        pairs: pairs.len(),
        provenance: pairs.provenances(),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid("delta", "must be finite and nonnegative"));
    }
    Ok(())
}

fn patterns(batch: &dyn HyperplaneSource, pairs: &PairSet) -> Result<Vec<SignPattern>> {
    let refs: Vec<&[f64]> = pairs.points.iter().map(|p| p.as_slice()).collect();
    sign_patterns(batch, &refs)
}

/// Per-pair spherical statistic `|d_H - d_S|` from precomputed patterns.
pub fn spherical_stats(pats: &[SignPattern], pairs: &PairSet) -> Vec<f64> {
    let m = pats[0].len() as f64;
    (0..pairs.len())
        .map(|idx| {
            let (i, j) = pairs.pair(idx);
            let dh = pats[i].hamming_count(&pats[j]).expect("equal lengths") as f64 / m;
            let ds = geodesic_distance_raw(pairs.points[i].as_slice(), pairs.points[j].as_slice());
            math::abs(dh - ds)
        })
        .collect()
}

/// Per-pair Euclidean statistic `|pi lambda d_hat - ||x - y|||` from
/// precomputed patterns.
pub fn euclidean_stats(pats: &[SignPattern], pairs: &PairSet, lambda: f64) -> Vec<f64> {
    let m = pats[0].len() as f64;
    (0..pairs.len())
        .map(|idx| {
            let (i, j) = pairs.pair(idx);
            let frac = pats[i].hamming_count(&pats[j]).expect("equal lengths") as f64 / m;
            let dist = math::distance(pairs.points[i].as_slice(), pairs.points[j].as_slice());
            math::abs(math::pi() * lambda * frac - dist)
        })
        .collect()
}

pub fn spherical_distortion(batch: &dyn HyperplaneSource, pairs: &PairSet, delta: f64) -> Result<TessellationReport> {
    check_delta(delta)?;
    if !batch.is_homogeneous() {
        return Err(invalid("batch", "spherical distortion needs homogeneous hyperplanes"));
    }
    for p in &pairs.points {
        if math::abs(p.norm() - 1.0) > 1e-9 {
            return Err(invalid("pairs", "spherical distortion needs unit vectors"));
        }
    }
    let pats = patterns(batch, pairs)?;
    let mut stats = spherical_stats(&pats, pairs);
    Ok(report_from_stats(pairs, &mut stats, delta))
}

pub fn euclidean_distortion(
    batch: &dyn HyperplaneSource,
    lambda: f64,
    pairs: &PairSet,
    delta: f64,
) -> Result<TessellationReport> {
    check_delta(delta)?;
    check_shift_scale(batch, lambda)?;
    let pats = patterns(batch, pairs)?;
    let mut stats = euclidean_stats(&pats, pairs, lambda);
    Ok(report_from_stats(pairs, &mut stats, delta))
}

/// Net used by [`check_uniform`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetParams {
    pub mesh: f64,
    pub random_fill: usize,
    pub max_points: usize,
}

impl Default for NetParams {
    fn default() -> Self {
        Self {
            mesh: 0.05,
            random_fill: 64,
            max_points: ALL_PAIRS_MAX_POINTS,
        }
    }
}

/// Index of the net point closest to the origin of the base set: the
/// smallest-norm point, or for lifted sets the point with the largest last
/// coordinate.
pub(crate) fn anchor_index(s: &SetSpec, points: &[Point]) -> Option<usize> {
    let key = |p: &Point| match s {
        SetSpec::Lifted { .. } => -p.as_slice()[p.dim() - 1],
        _ => p.norm(),
    };
    (0..points.len()).min_by(|&a, &b| key(&points[a]).total_cmp(&key(&points[b])))
}

/// Checks `delta`-uniformity of `batch` on a net of `s` plus `extra` pairs.
///
/// Lifted sets and subspheres use the spherical statistic and need a
/// homogeneous batch; segment balls and capped segment balls use the
/// Euclidean statistic with the batch's shift scale as `lambda`.
pub fn check_uniform(
    batch: &dyn HyperplaneSource,
    s: &SetSpec,
    delta: f64,
    net: &NetParams,
    rng: &RngStream,
    extra: &[(Point, Point)],
) -> Result<TessellationReport> {
    check_dim(s.ambient_dim(), batch.dim())?;
    let points = s.generate_net(net.mesh, &rng.child(0), net.random_fill)?;
    let anchor = anchor_index(s, &points);
    let mut pairs = PairSet::from_net(points, anchor, &rng.child(1), net.max_points)?;
    pairs.add_pairs(extra, Provenance::WitnessTargeted)?;
    pairs.check_membership(s, 1e-9)?;
    match s {
        SetSpec::Lifted { .. } | SetSpec::Subsphere { .. } => spherical_distortion(batch, &pairs, delta),
        SetSpec::SegmentBall { .. } | SetSpec::Capped { .. } | SetSpec::Ball { .. } => {
            let lambda = batch.shift_scale();
            if !(lambda > 0.0) {
                return Err(invalid("batch", "Euclidean checks need shifts drawn with a positive scale"));
            }
            euclidean_distortion(batch, lambda, &pairs, delta)
        }
        SetSpec::FiniteCloud(_) => {
            if batch.is_homogeneous() {
                spherical_distortion(batch, &pairs, delta)
            } else {
                euclidean_distortion(batch, batch.shift_scale(), &pairs, delta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{sample_gaussian_batch, HyperplaneBatch, SeededBatch};
    use crate::geometry::UnitVector;

    fn unit(c: &[f64]) -> Point {
        UnitVector::normalize(c.to_vec()).unwrap().into_point()
    }

    #[test]
    fn identical_pair_has_zero_violation() {
        let x = unit(&[0.3, -0.4, 0.5]);
        let p = PairSet::new(vec![x], vec![(0, 0)], Provenance::NetAllPairs).unwrap();
        let b = sample_gaussian_batch(&RngStream::root(1), 100, 3, 0.0).unwrap();
        let r = spherical_distortion(&b, &p, 0.0).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn one_hyperplane_orthogonal_pair_violates_by_half() {
        for seed in 0..50 {
            let b = sample_gaussian_batch(&RngStream::root(seed), 1, 2, 0.0).unwrap();
            let p = PairSet::single(unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), Provenance::NetAllPairs).unwrap();
            let r = spherical_distortion(&b, &p, 0.4).unwrap();
            assert!((r.max_violation - 0.5).abs() < 1e-15);
            assert!(!r.passed);
        }
    }

    #[test]
    fn fixed_pair_concentrates() {
        // d_S = 0.25 for vectors at angle pi/4; 3 sigma = 3 sqrt(0.25 * 0.75 / 1e4) < 0.013.
        let x = unit(&[1.0, 0.0, 0.0]);
        let y = unit(&[1.0, 1.0, 0.0]);
        let p = PairSet::single(x, y, Provenance::RandomPairs).unwrap();
        let mut ok = 0;
        for t in 0..100 {
            let b = SeededBatch::new(RngStream::new(20, t), 10_000, 3, 0.0).unwrap();
            if spherical_distortion(&b, &p, 0.013).unwrap().passed {
                ok += 1;
            }
        }
        assert!(ok >= 99, "{ok}");
    }

    #[test]
    fn spherical_rejects_shifts() {
        let b = sample_gaussian_batch(&RngStream::root(3), 10, 2, 1.0).unwrap();
        let p = PairSet::single(unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), Provenance::NetAllPairs).unwrap();
        assert!(spherical_distortion(&b, &p, 0.1).is_err());
    }

    #[test]
    fn euclidean_examples() {
        let pt = |c: &[f64]| Point::new(c.to_vec()).unwrap();
        let b = HyperplaneBatch::from_rows(&[vec![1.0, 0.0]], vec![-0.5], 1.0).unwrap();
        let same = PairSet::single(pt(&[0.2, 0.1]), pt(&[0.2, 0.1]), Provenance::NetAllPairs).unwrap();
        let r = euclidean_distortion(&b, 1.0, &same, 0.0).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!(r.passed);
        let p = PairSet::single(pt(&[1.0, 0.0]), pt(&[0.0, 0.0]), Provenance::NetAllPairs).unwrap();
        let r = euclidean_distortion(&b, 1.0, &p, 0.1).unwrap();
        assert!((r.max_violation - (core::f64::consts::PI - 1.0)).abs() < 1e-15);
        assert!(euclidean_distortion(&b, 0.0, &p, 0.1).is_err());
    }

    /// Separation probability of `x` and `0` by `<., g> + lambda tau` with
    /// `g, tau` standard normal: `<x, g> = ||x|| Z`, so the probability is
    /// `E_tau P(sign(r Z + lambda tau) != sign(tau))`, integrated over tau
    /// with the midpoint rule.
    fn separation_probability(r: f64, lambda: f64) -> f64 {
        let (lo, hi, steps) = (-10.0, 10.0, 200_000);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let t = lo + (i as f64 + 0.5) * h;
            let density = (-0.5 * t * t).exp() / (2.0 * core::f64::consts::PI).sqrt();
            let flip = if t >= 0.0 {
                math::normal_cdf(-lambda * t / r)
            } else {
                1.0 - math::normal_cdf(-lambda * t / r)
            };
            acc += density * flip * h;
        }
        acc
    }

    #[test]
    fn separation_probability_oracles_agree() {
        // The lifted angle gives the same probability in closed form.
        let (r, lambda) = (0.3, 3.0);
        let p = separation_probability(r, lambda);
        let closed = (r / lambda).atan() / core::f64::consts::PI;
        assert!((p - closed).abs() < 1e-8, "{p} vs {closed}");
        // Brute-force Monte Carlo.
        let mut g = RngStream::root(4).generator();
        let n = 400_000;
        let mut hits = 0;
        for _ in 0..n {
            let (z, t) = (g.normal(), g.normal());
            if (r * z + lambda * t < 0.0) != (t < 0.0) {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64;
        assert!((mc - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn euclidean_statistic_concentrates_on_a_short_pair() {
        let (r, lambda) = (0.3, 3.0);
        let expected = core::f64::consts::PI * lambda * separation_probability(r, lambda);
        assert!((expected - r).abs() < 0.005);
        let x = Point::new(vec![0.3, 0.0]).unwrap();
        let p = PairSet::single(x, Point::origin(2), Provenance::WitnessTargeted).unwrap();
        let mut ok = 0;
        for t in 0..100 {
            let b = SeededBatch::new(RngStream::new(5, t), 10_000, 2, lambda).unwrap();
            let rep = euclidean_distortion(&b, lambda, &p, 0.05).unwrap();
            if rep.passed {
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}");
    }

    #[test]
    fn antipodal_pairs_are_exact() {
        let s = SetSpec::subsphere(3, 1).unwrap();
        let b = sample_gaussian_batch(&RngStream::root(6), 37, 3, 0.0).unwrap();
        let r = check_uniform(&b, &s, 0.0, &NetParams::default(), &RngStream::root(7), &[]).unwrap();
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn budget_one_always_passes() {
        let s = SetSpec::subsphere(6, 3).unwrap();
        for t in 0..20 {
            let b = sample_gaussian_batch(&RngStream::new(8, t), 3, 6, 0.0).unwrap();
            let net = NetParams {
                random_fill: 20,
                ..NetParams::default()
            };
            assert!(check_uniform(&b, &s, 1.0, &net, &RngStream::new(9, t), &[]).unwrap().passed);
        }
    }

    #[test]
    fn antipodal_symmetry_of_the_statistic() {
        let mut g = RngStream::root(10).generator();
        let b = sample_gaussian_batch(&RngStream::root(11), 257, 4, 0.0).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| g.normal()).collect();
            let y: Vec<f64> = (0..4).map(|_| g.normal()).collect();
            let (x, y) = (unit(&x), unit(&y));
            let neg = Point::new(x.as_slice().iter().map(|v| -v).collect()).unwrap();
            let p = PairSet::single(x, y.clone(), Provenance::RandomPairs).unwrap();
            let q = PairSet::single(neg, y, Provenance::RandomPairs).unwrap();
            let a = spherical_distortion(&b, &p, 0.1).unwrap().max_violation;
            let c = spherical_distortion(&b, &q, 0.1).unwrap().max_violation;
            // d_H and d_S both map to 1 - value; Gaussian rows never vanish on x.
            assert!((a - c).abs() <= 1e-12, "{a} vs {c}");
        }
    }

    #[test]
    fn max_violation_is_monotone_under_inclusion() {
        let s = SetSpec::lifted(SetSpec::segment_ball(0.6, 0.1, 10).unwrap(), 2.9).unwrap();
        let pts = s.generate_net(0.1, &RngStream::root(12), 30).unwrap();
        let b = sample_gaussian_batch(&RngStream::root(13), 200, 12, 0.0).unwrap();
        let small = PairSet::from_net(pts[..20].to_vec(), None, &RngStream::root(0), 3000).unwrap();
        let big = PairSet::from_net(pts, None, &RngStream::root(0), 3000).unwrap();
        let a = spherical_distortion(&b, &small, 0.1).unwrap();
        let c = spherical_distortion(&b, &big, 0.1).unwrap();
        assert!(c.max_violation >= a.max_violation);
    }

    #[test]
    fn large_nets_keep_anchor_pairs() {
        let pts: Vec<Point> = (0..50).map(|i| Point::new(vec![i as f64]).unwrap()).collect();
        let p = PairSet::from_net(pts, Some(7), &RngStream::root(14), 10).unwrap();
        assert_eq!(p.len(), 45 + 49);
        for i in (0..50).filter(|&i| i != 7) {
            assert!((0..p.len()).any(|k| p.pair(k) == (i.min(7), i.max(7))));
        }
        assert_eq!(p.provenances(), vec![Provenance::RandomPairs, Provenance::NetAllPairs]);
    }

    #[test]
    fn quantiles_use_nearest_rank() {
        let mut v: Vec<f64> = (1..=100).rev().map(|i| i as f64).collect();
        assert_eq!(select_quantile(&mut v, 0.5), 50.0);
        assert_eq!(select_quantile(&mut v, 0.9), 90.0);
        assert_eq!(select_quantile(&mut v, 0.99), 99.0);
        let mut w = vec![3.0];
        assert_eq!(select_quantile(&mut w, 0.99), 3.0);
    }
}
