//! Quadrature weights: uniform, Bayesian-quadrature optimal, and optimal under a
//! bound on `Σ w_i²`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::par::Execution;
use crate::point_sets::PointSet;

/// Relative jitter levels tried after the unjittered attempt, times `trace / n`.
const JITTER_LEVELS: [f64; 9] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// A factorization is accepted only if the jittered system is solved to this
/// relative residual.
const RESIDUAL_TOL: f64 = 1e-8;

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: PointSet,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: PointSet) -> Self {
        let weights = uniform_weights(points.len());
        Self { points, weights }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ w_i f(X_i)`.
    pub fn apply<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Outcome of a weight solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub weights: Vec<f64>,
    /// Diagonal shift that made the factorization succeed.
    pub jitter_used: f64,
    /// Ridge parameter of the constrained solve; zero when unconstrained.
    pub lambda: f64,
    pub weight_sq_norm: f64,
}

impl SolveReport {
    fn new(weights: Vec<f64>, jitter_used: f64, lambda: f64) -> Self {
        let weight_sq_norm = sq_norm(&weights);
        Self {
            weights,
            jitter_used,
            lambda,
            weight_sq_norm,
        }
    }
}

pub fn sq_norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Gram matrix `K_ij = k(X_i, X_j)`, filled row-parallel.
pub fn gram_matrix<K: Kernel + ?Sized>(
    kernel: &K,
    points: &PointSet,
    exec: Execution,
) -> DMatrix<f64> {
    let n = points.len();
    let rows = exec.map_range(n, |i| {
        let xi = points.point(i);
        (0..n)
            .map(|j| kernel.eval(xi, points.point(j)))
            .collect::<Vec<f64>>()
    });
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn check_system(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<()> {
    if !matrix.is_square() || matrix.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            found: rhs.len(),
        });
    }
    if matrix.nrows() == 0 {
        return Err(Error::TooFewPoints {
            required: 1,
            found: 0,
        });
    }
    Ok(())
}

/// Solves `(A + jitter·I) x = b` for symmetric `A`, escalating the jitter from
/// zero through `ε·trace/n`, `ε = 1e-12 … 1e-4`, until a Cholesky factorization
/// succeeds and solves the shifted system to relative residual `1e-8`.
pub fn solve_spd(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    check_system(matrix, rhs)?;
    let n = matrix.nrows();
    let scale = {
        let t = matrix.trace() / n as f64;
        if t > 0.0 && t.is_finite() {
            t
        } else {
            1.0
        }
    };
    let rhs_norm = rhs.norm();
    let levels = std::iter::once(0.0).chain(JITTER_LEVELS.iter().map(|e| e * scale));
    for jitter in levels {
        let mut shifted = matrix.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        let Some(chol) = Cholesky::new(shifted) else {
            continue;
        };
        let x = chol.solve(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mut residual = matrix * &x - rhs;
        residual.axpy(jitter, &x, 1.0);
        if residual.norm() <= RESIDUAL_TOL * rhs_norm {
            return Ok((x, jitter));
        }
    }
    Err(Error::Conditioning {
        n,
        max_jitter: JITTER_LEVELS[JITTER_LEVELS.len() - 1] * scale,
    })
}

/// Weights minimizing the worst-case error for fixed points: `K w = z` with
/// `z_j = ∫ k(x, X_j) dP(x)`.
pub fn bq_weights_exact(gram: &DMatrix<f64>, kmean: &DVector<f64>) -> Result<SolveReport> {
    let (w, jitter) = solve_spd(gram, kmean)?;
    Ok(SolveReport::new(w.as_slice().to_vec(), jitter, 0.0))
}

fn ridge_solve(gram: &DMatrix<f64>, kmean: &DVector<f64>, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let mut shifted = gram.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += lambda;
    }
    let (w, jitter) = solve_spd(&shifted, kmean)?;
    Ok((w.as_slice().to_vec(), jitter))
}

/// Worst-case-error minimizing weights subject to `Σ w_i² ≤ bound`.
///
/// If the unconstrained optimum is feasible it is returned unchanged.
/// Otherwise the ridge parameter `λ` of `(K + λI) w = z` is bracketed by
/// doubling and then bisected until `Σ w_i(λ)²` is within `1e-6` relative of
/// `bound`.
pub fn bq_weights_constrained(
    gram: &DMatrix<f64>,
    kmean: &DVector<f64>,
    bound: f64,
) -> Result<SolveReport> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "norm bound must be positive, got {bound}"
        )));
    }
    let exact = bq_weights_exact(gram, kmean)?;
    if exact.weight_sq_norm <= bound {
        return Ok(exact);
    }

    let within = |norm: f64| (norm - bound).abs() <= BISECTION_REL_TOL * bound;
    let mut lo = 0.0;
    let mut hi = (gram.trace() / gram.nrows() as f64).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    loop {
        let (w, jitter) = ridge_solve(gram, kmean, hi)?;
        let norm = sq_norm(&w);
        if within(norm) {
            return Ok(SolveReport::new(w, jitter, hi));
        }
        if norm < bound {
            break;
        }
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations >= BISECTION_MAX_ITER {
            return Err(Error::BisectionStalled(iterations));
        }
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let (w, jitter) = ridge_solve(gram, kmean, mid)?;
        let norm = sq_norm(&w);
        if within(norm) {
            return Ok(SolveReport::new(w, jitter, mid));
        }
        if norm > bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BisectionStalled(BISECTION_MAX_ITER))
}
