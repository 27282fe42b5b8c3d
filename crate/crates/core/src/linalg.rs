//! Least-norm solutions of short, wide systems `A x = t` through a Cholesky
//! factorisation of `A A^T`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::math;

/// Cached factorisation for a `k x d` matrix with `k <= d` and full row rank.
#[derive(Clone, Debug)]
pub struct LeastNorm {
    rows: Vec<f64>,
    k: usize,
    d: usize,
    /// Lower-triangular Cholesky factor of `A A^T`, row-major `k x k`.
    chol: Vec<f64>,
}

impl LeastNorm {
    pub fn new(rows: Vec<f64>, k: usize, d: usize) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(invalid("matrix", "needs at least one row and column"));
        }
        check_dim(k * d, rows.len())?;
        if k > d {
            return Err(invalid("matrix", "more rows than columns"));
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            let ri = &rows[i * d..(i + 1) * d];
            for j in 0..=i {
                let v = math::dot(ri, &rows[j * d..(j + 1) * d]);
                gram[i * k + j] = v;
                gram[j * k + i] = v;
            }
        }
        let chol = cholesky(&gram, k)?;
        Ok(Self { rows, k, d, chol })
    }

    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// `(A A^T)^{-1} b` by forward and back substitution.
    fn gram_solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let l = &self.chol;
        let mut y = b.to_vec();
        for i in 0..k {
            let mut s = y[i];
            for j in 0..i {
                s -= l[i * k + j] * y[j];
            }
            y[i] = s / l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for j in i + 1..k {
                s -= l[j * k + i] * y[j];
            }
            y[i] = s / l[i * k + i];
        }
        y
    }

    /// Adds `A^T c` to `out`.
    fn add_transpose(&self, c: &[f64], out: &mut [f64]) {
        for (i, &ci) in c.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += ci * a;
            }
        }
    }

    /// Minimum-norm solution `A^T (A A^T)^{-1} t`.
    pub fn solve(&self, t: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.k, t.len())?;
        let c = self.gram_solve(t);
        let mut x = vec![0.0; self.d];
        self.add_transpose(&c, &mut x);
        Ok(x)
    }

    /// Projects `z` onto the affine set `{x : A x = t}` in place.
    pub fn project_affine(&self, z: &mut [f64], t: &[f64]) -> Result<()> {
        check_dim(self.d, z.len())?;
        check_dim(self.k, t.len())?;
        let r: Vec<f64> = self.apply(z).iter().zip(t).map(|(a, b)| b - a).collect();
        let c = self.gram_solve(&r);
        self.add_transpose(&c, z);
        Ok(())
    }

    /// `||A x - t||_2`.
    pub fn residual(&self, x: &[f64], t: &[f64]) -> f64 {
        let ax = self.apply(x);
        let r: Vec<f64> = ax.iter().zip(t).map(|(a, b)| a - b).collect();
        math::norm(&r)
    }
}

/// Cholesky factor of a symmetric positive definite row-major matrix.
pub fn cholesky(a: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::Singular);
                }
                l[i * k + i] = math::sqrt(s);
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use nalgebra::{DMatrix, DVector};

    fn random(k: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut g = RngStream::root(seed).generator();
        (0..k * d).map(|_| g.normal()).collect()
    }

    #[test]
    fn least_norm_matches_pseudoinverse_oracle() {
        for (k, d, seed) in [(1, 1, 1), (3, 10, 2), (20, 60, 3), (40, 41, 4)] {
            let a = random(k, d, seed);
            let t = random(k, 1, seed + 100);
            let ln = LeastNorm::new(a.clone(), k, d).unwrap();
            let x = ln.solve(&t).unwrap();
            let am = DMatrix::from_row_slice(k, d, &a);
            let pinv = am.clone().pseudo_inverse(1e-12).unwrap();
            let oracle = pinv * DVector::from_column_slice(&t);
            for (u, v) in x.iter().zip(oracle.iter()) {
                assert!((u - v).abs() < 1e-9, "k={k} d={d}: {u} vs {v}");
            }
            assert!(ln.residual(&x, &t) < 1e-10);
        }
    }

    #[test]
    fn affine_projection_is_idempotent_and_orthogonal() {
        let (k, d) = (5, 12);
        let ln = LeastNorm::new(random(k, d, 5), k, d).unwrap();
        let t = random(k, 1, 6);
        let mut z = random(d, 1, 7);
        let z0 = z.clone();
        ln.project_affine(&mut z, &t).unwrap();
        assert!(ln.residual(&z, &t) < 1e-10);
        let mut again = z.clone();
        ln.project_affine(&mut again, &t).unwrap();
        assert!(math::distance(&again, &z) < 1e-12);
        // z0 - z lies in the row space, so it is orthogonal to the null space
        // direction x - z for any other solution x.
        let x = ln.solve(&t).unwrap();
        let diff: Vec<f64> = z0.iter().zip(&z).map(|(a, b)| a - b).collect();
        let along: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
        assert!(math::dot(&diff, &along).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_rows_are_rejected() {
        let a = vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        assert!(matches!(LeastNorm::new(a, 2, 3), Err(Error::Singular)));
        assert!(LeastNorm::new(vec![1.0; 6], 3, 2).is_err());
    }
}
