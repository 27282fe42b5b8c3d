//! Dykstra's alternating projections between an affine solution set
//! `{x : A x = t}` and a convex set.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::LeastNorm;
use crate::math;
use crate::sets::SetSpec;

/// Iteration cap and tolerance of the feasibility solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DykstraParams {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for DykstraParams {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preimage {
    /// Last iterate projected onto the convex set, so it is always a member.
    pub x: Vec<f64>,
    /// `||A x - t||_2` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    /// Whether the residual reached the tolerance.
    pub converged: bool,
}

/// Looks for `x` in `set` with `A x = t`, starting from the least-norm
/// solution. Success means the projection of the current iterate onto the
/// set solves the system to `params.tol`.
pub fn find_preimage(solver: &LeastNorm, t: &[f64], set: &SetSpec, params: &DykstraParams) -> Result<Preimage> {
    if !set.is_convex() {
        return Err(invalid("set", "feasibility needs a convex set"));
    }
    if !(params.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let d = solver.cols();
    let mut x = solver.solve(t)?;
    let mut y = x.clone();
    set.project_into(&mut y)?;
    let mut residual = solver.residual(&y, t);
    if residual <= params.tol {
        return Ok(Preimage {
            x: y,
            residual,
            iterations: 0,
            converged: true,
        });
    }
    let mut p = alloc::vec![0.0; d];
    let mut q = alloc::vec![0.0; d];
    let mut buf = alloc::vec![0.0; d];
    for it in 1..=params.max_iters {
        for i in 0..d {
            buf[i] = x[i] + p[i];
        }
        y.copy_from_slice(&buf);
        set.project_into(&mut y)?;
        for i in 0..d {
            p[i] = buf[i] - y[i];
            buf[i] = y[i] + q[i];
        }
        x.copy_from_slice(&buf);
        solver.project_affine(&mut x, t)?;
        for i in 0..d {
            q[i] = buf[i] - x[i];
        }
        y.copy_from_slice(&x);
        set.project_into(&mut y)?;
        residual = solver.residual(&y, t);
        if residual <= params.tol {
            return Ok(Preimage {
                x: y,
                residual,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(Preimage {
        x: y,
        residual,
        iterations: params.max_iters,
        converged: false,
    })
}

/// Distance from `x` to a convex set.
pub fn distance_to(set: &SetSpec, x: &[f64]) -> Result<f64> {
    let p = set.project(x)?;
    Ok(math::distance(p.as_slice(), x))
}
