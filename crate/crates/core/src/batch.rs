//! Gaussian hyperplane batches.
//!
//! A batch holds `m` directions `g_i` in `R^n` and shifts `lambda * tau_i`.
//! Sampled batches are addressed by an [`RngStream`]: the shifts come from
//! child stream 0 and row `i` from child stream `i + 1`. This layout lets
//! [`SeededBatch`] regenerate any row on demand, so large sweeps can stream
//! rows without materialising the `m x n` matrix while producing exactly the
//! values [`sample_gaussian_batch`] would store.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::geometry::SignPattern;
use crate::math;
use crate::rng::RngStream;

/// Read access to a hyperplane collection, materialised or streamed.
pub trait HyperplaneSource {
    /// Number of hyperplanes `m`.
    fn count(&self) -> usize;
    /// Ambient dimension `n`.
    fn dim(&self) -> usize;
    /// The scale `lambda` the shifts were drawn with (0 for homogeneous).
    fn shift_scale(&self) -> f64;
    /// Shifts `lambda * tau_i`.
    fn shifts(&self) -> &[f64];
    /// Unscaled shifts `tau_i`.
    fn taus(&self) -> &[f64];
    /// Copy row `i` into `out` (length `dim`).
    fn row_into(&self, i: usize, out: &mut [f64]);
    /// Visit every row in order with its shift.
    fn for_each_row(&self, f: &mut dyn FnMut(usize, &[f64], f64));

    fn is_homogeneous(&self) -> bool {
        self.shifts().iter().all(|&s| s == 0.0)
    }
}

/// Materialised batch with row-major directions.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneBatch {
    directions: Vec<f64>,
    shifts: Vec<f64>,
    taus: Vec<f64>,
    m: usize,
    n: usize,
    shift_scale: f64,
    stream: Option<RngStream>,
}

impl HyperplaneBatch {
    /// Batch from explicit rows and shifts. With `shift_scale > 0` the
    /// unscaled shifts are `shift / shift_scale`; with `shift_scale == 0`
    /// every shift must be zero.
    pub fn from_rows(rows: &[Vec<f64>], shifts: Vec<f64>, shift_scale: f64) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(invalid("batch", "need at least one hyperplane"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(invalid("batch", "dimension must be at least 1"));
        }
        check_dim(m, shifts.len())?;
        if !(shift_scale >= 0.0) || !shift_scale.is_finite() {
            return Err(invalid("shift_scale", "must be finite and nonnegative"));
        }
        let mut directions = Vec::with_capacity(m * n);
        for r in rows {
            check_dim(n, r.len())?;
            if r.iter().any(|v| !v.is_finite()) {
                return Err(invalid("batch", "directions must be finite"));
            }
            directions.extend_from_slice(r);
        }
        let taus = if shift_scale > 0.0 {
            shifts.iter().map(|s| s / shift_scale).collect()
        } else {
            if shifts.iter().any(|&s| s != 0.0) {
                return Err(invalid("shifts", "nonzero shifts need a positive shift_scale"));
            }
            vec![0.0; m]
        };
        Ok(Self {
            directions,
            shifts,
            taus,
            m,
            n,
            shift_scale,
            stream: None,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.directions[i * self.n..(i + 1) * self.n]
    }

    pub fn stream(&self) -> Option<RngStream> {
        self.stream
    }

    /// The homogeneous batch `[G | tau]` in dimension `n + 1` that acts on
    /// lifted points exactly as this batch's affine hyperplanes act on the
    /// base points.
    pub fn homogenized(&self) -> HyperplaneBatch {
        let n1 = self.n + 1;
        let mut directions = Vec::with_capacity(self.m * n1);
        for i in 0..self.m {
            directions.extend_from_slice(self.row(i));
            directions.push(self.taus[i]);
        }
        HyperplaneBatch {
            directions,
            shifts: vec![0.0; self.m],
            taus: vec![0.0; self.m],
            m: self.m,
            n: n1,
            shift_scale: 0.0,
            stream: None,
        }
    }

    /// The first `rows` hyperplanes.
    pub fn truncated(&self, rows: usize) -> Result<HyperplaneBatch> {
        if rows == 0 || rows > self.m {
            return Err(invalid("rows", "must lie in 1..=m"));
        }
        Ok(HyperplaneBatch {
            directions: self.directions[..rows * self.n].to_vec(),
            shifts: self.shifts[..rows].to_vec(),
            taus: self.taus[..rows].to_vec(),
            m: rows,
            n: self.n,
            shift_scale: self.shift_scale,
            stream: None,
        })
    }
}

impl HyperplaneSource for HyperplaneBatch {
    fn count(&self) -> usize {
        self.m
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn shift_scale(&self) -> f64 {
        self.shift_scale
    }
    fn shifts(&self) -> &[f64] {
        &self.shifts
    }
    fn taus(&self) -> &[f64] {
        &self.taus
    }
    fn row_into(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
    fn for_each_row(&self, f: &mut dyn FnMut(usize, &[f64], f64)) {
        for i in 0..self.m {
            f(i, self.row(i), self.shifts[i]);
        }
    }
}

/// Lazily generated Gaussian batch; rows are regenerated from their
/// substreams on every access.
#[derive(Clone, Debug)]
pub struct SeededBatch {
    stream: RngStream,
    m: usize,
    n: usize,
    shift_scale: f64,
    shifts: Vec<f64>,
    taus: Vec<f64>,
}

impl SeededBatch {
    pub fn new(stream: RngStream, m: usize, n: usize, shift_scale: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("batch", "m and n must be at least 1"));
        }
        if !(shift_scale >= 0.0) || !shift_scale.is_finite() {
            return Err(invalid("shift_scale", "must be finite and nonnegative"));
        }
        let (taus, shifts) = if shift_scale > 0.0 {
            let mut g = stream.child(0).generator();
            let taus: Vec<f64> = (0..m).map(|_| g.normal()).collect();
            let shifts = taus.iter().map(|t| shift_scale * t).collect();
            (taus, shifts)
        } else {
            (vec![0.0; m], vec![0.0; m])
        };
        Ok(Self {
            stream,
            m,
            n,
            shift_scale,
            shifts,
            taus,
        })
    }

    pub fn stream(&self) -> RngStream {
        self.stream
    }

    pub fn materialize(&self) -> HyperplaneBatch {
        let mut directions = vec![0.0; self.m * self.n];
        for (i, row) in directions.chunks_exact_mut(self.n).enumerate() {
            self.row_into(i, row);
        }
        HyperplaneBatch {
            directions,
            shifts: self.shifts.clone(),
            taus: self.taus.clone(),
            m: self.m,
            n: self.n,
            shift_scale: self.shift_scale,
            stream: Some(self.stream),
        }
    }
}

impl HyperplaneSource for SeededBatch {
    fn count(&self) -> usize {
        self.m
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn shift_scale(&self) -> f64 {
        self.shift_scale
    }
    fn shifts(&self) -> &[f64] {
        &self.shifts
    }
    fn taus(&self) -> &[f64] {
        &self.taus
    }
    fn row_into(&self, i: usize, out: &mut [f64]) {
        self.stream.child(i as u64 + 1).generator().fill_normal(out);
    }
    fn for_each_row(&self, f: &mut dyn FnMut(usize, &[f64], f64)) {
        let mut buf = vec![0.0; self.n];
        for i in 0..self.m {
            self.row_into(i, &mut buf);
            f(i, &buf, self.shifts[i]);
        }
    }
}

/// Sample `m` standard Gaussian directions in `R^n` with shifts drawn from
/// `N(0, lambda^2)`; `lambda = 0` gives homogeneous hyperplanes.
pub fn sample_gaussian_batch(rng: &RngStream, m: usize, n: usize, shift_scale: f64) -> Result<HyperplaneBatch> {
    Ok(SeededBatch::new(*rng, m, n, shift_scale)?.materialize())
}

/// Cell code of `x`: bit `i` is `sign(<g_i, x> + shift_i)` with `sign(0) = +1`.
pub fn sign_embed(batch: &dyn HyperplaneSource, x: &[f64]) -> Result<SignPattern> {
    check_dim(batch.dim(), x.len())?;
    Ok(sign_patterns(batch, &[x])?.pop().expect("one pattern"))
}

/// Sign patterns of several points in a single pass over the rows.
///
/// Trailing zero coordinates of each point are skipped, which makes points
/// supported on a few leading coordinates cheap to embed.
pub fn sign_patterns(batch: &dyn HyperplaneSource, points: &[&[f64]]) -> Result<Vec<SignPattern>> {
    let n = batch.dim();
    for p in points {
        check_dim(n, p.len())?;
    }
    let support: Vec<usize> = points
        .iter()
        .map(|p| p.iter().rposition(|&c| c != 0.0).map_or(0, |j| j + 1))
        .collect();
    let mut out: Vec<SignPattern> = points.iter().map(|_| SignPattern::positive(batch.count())).collect();
    batch.for_each_row(&mut |i, row, shift| {
        for (k, p) in points.iter().enumerate() {
            let len = support[k];
            let v = math::dot(&row[..len], &p[..len]) + shift;
            if v < 0.0 {
                out[k].set_negative(i);
            }
        }
    });
    Ok(out)
}
