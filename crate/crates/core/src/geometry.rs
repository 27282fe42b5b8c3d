//! Points, unit vectors, sign patterns and the two metrics compared by a
//! tessellation: normalised geodesic distance and normalised Hamming distance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::math;

/// A finite point of `R^n`, `n >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("point", "dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    /// Constructor for coordinates produced by this crate's own arithmetic.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.0)
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A point of the unit sphere, normalised at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("unit vector", "coordinates must be finite and nonempty"));
        }
        let n = math::norm(&coords);
        if n == 0.0 {
            return Err(invalid("unit vector", "cannot normalise the zero vector"));
        }
        for c in &mut coords {
            *c /= n;
        }
        Ok(Self(coords))
    }

    /// Basis vector `e_i` in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(invalid("unit vector", "basis index out of range"));
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    pub fn into_point(self) -> Point {
        Point(self.0)
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Element of `{-1, +1}^m`, bit-packed. A set bit means `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignPattern {
    words: Vec<u64>,
    len: usize,
}

impl SignPattern {
    /// All-`+1` pattern of length `len`.
    pub fn positive(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut p = Self::positive(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => p.set_negative(i),
                _ => return Err(invalid("sign pattern", "entries must be -1 or +1")),
            }
        }
        Ok(p)
    }

    #[inline]
    pub(crate) fn set_negative(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> i8 {
        if (self.words[i / 64] >> (i % 64)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Number of coordinates where the patterns differ.
    pub fn hamming_count(&self, other: &Self) -> Result<usize> {
        check_dim(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }
}

/// Sign with the convention `sign(0) = +1`.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// `arccos(clamp(<x, y>, -1, 1)) / pi` on raw coordinates of unit vectors.
///
/// Evaluated as `2 atan2(||x - y||, ||x + y||) / pi`, which equals the
/// arccos form on the sphere but keeps full relative accuracy for nearly
/// parallel or antipodal vectors, where arccos of a rounded inner product
/// loses about half the digits.
#[inline]
pub fn geodesic_distance_raw(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let (mut dm, mut dp) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    (2.0 * libm::atan2(math::sqrt(dm), math::sqrt(dp)) / math::pi()).clamp(0.0, 1.0)
}

/// The literal `arccos(clamp(<x, y>, -1, 1)) / pi`.
pub fn geodesic_distance_acos(x: &[f64], y: &[f64]) -> f64 {
    math::acos(math::dot(x, y).clamp(-1.0, 1.0)) / math::pi()
}

/// Normalised geodesic distance on the sphere, in `[0, 1]`.
pub fn geodesic_distance(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(geodesic_distance_raw(x.as_slice(), y.as_slice()))
}

/// Normalised Hamming distance, in `[0, 1]`.
pub fn hamming_fraction(a: &SignPattern, b: &SignPattern) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InsufficientData("empty sign patterns".into()));
    }
    Ok(a.hamming_count(b)? as f64 / a.len() as f64)
}
