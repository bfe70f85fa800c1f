//! Korobov, power-of-Korobov and Matérn kernels on `[0,1]^d`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default number of frequency pairs kept in truncated Mercer series.
pub const DEFAULT_TRUNCATION: usize = 10_000;

/// Largest Korobov order backed by a hard-coded Bernoulli polynomial.
pub const MAX_ALPHA: u32 = 6;

// Ascending monomial coefficients of B_2, B_4, ..., B_12.
const BERNOULLI: [&[f64]; 6] = [
    &[1.0 / 6.0, -1.0, 1.0],
    &[-1.0 / 30.0, 0.0, 1.0, -2.0, 1.0],
    &[1.0 / 42.0, 0.0, -0.5, 0.0, 2.5, -3.0, 1.0],
    &[
        -1.0 / 30.0,
        0.0,
        2.0 / 3.0,
        0.0,
        -7.0 / 3.0,
        0.0,
        14.0 / 3.0,
        -4.0,
        1.0,
    ],
    &[
        5.0 / 66.0,
        0.0,
        -1.5,
        0.0,
        5.0,
        0.0,
        -7.0,
        0.0,
        7.5,
        -5.0,
        1.0,
    ],
    &[
        -691.0 / 2730.0,
        0.0,
        5.0,
        0.0,
        -16.5,
        0.0,
        22.0,
        0.0,
        -16.5,
        0.0,
        11.0,
        -6.0,
        1.0,
    ],
];

/// Anything that can be evaluated as a kernel on `[0,1]^d`.
///
/// Implementations are immutable and `Sync`, so Gram matrices and embeddings
/// can be filled from several threads.
pub trait Kernel: Sync {
    fn dim(&self) -> usize;

    /// Evaluates `k(x, y)`. Both slices must have length [`Kernel::dim`].
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    /// `∫ k(x, y) dx` under the uniform distribution, when it is known to be
    /// the same constant for every `y`.
    fn uniform_mean_closed_form(&self) -> Option<f64> {
        None
    }
}

/// Fractional part in `[0, 1)`, with `-0.0` and round-up to `1.0` folded to `0.0`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 || f <= 0.0 {
        0.0
    } else {
        f
    }
}

// `{|x - y|}`. Even Bernoulli polynomials and cosines take the same value at `t`
// and `1 - t`, so this equals the kernel argument `{x - y}` while being
// bitwise symmetric in `x` and `y`.
#[inline]
fn periodic_gap(x: f64, y: f64) -> f64 {
    frac((x - y).abs())
}

/// Bernoulli polynomial `B_m(x)` for even `m` in `2..=12`.
pub fn bernoulli_poly(m: u32, x: f64) -> Result<f64> {
    if m == 0 || !m.is_multiple_of(2) || m > 2 * MAX_ALPHA {
        return Err(Error::UnsupportedBernoulliDegree(m));
    }
    let coeffs = BERNOULLI[(m / 2 - 1) as usize];
    Ok(coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c))
}

fn check_alpha(alpha: u32) -> Result<()> {
    if (1..=MAX_ALPHA).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(alpha))
    }
}

/// `(-1)^(α-1) (2π)^(2α) / (2α)!`
fn korobov_scale(alpha: u32) -> f64 {
    let two_alpha = 2 * alpha as i32;
    let factorial: f64 = (1..=two_alpha).map(f64::from).product();
    let sign = if alpha % 2 == 1 { 1.0 } else { -1.0 };
    sign * (2.0 * PI).powi(two_alpha) / factorial
}

/// One-dimensional Korobov kernel of order `alpha`.
pub fn korobov_eval_1d(alpha: u32, x: f64, y: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let b = bernoulli_poly(2 * alpha, periodic_gap(x, y))?;
    Ok(1.0 + korobov_scale(alpha) * b)
}

/// Tensor-product Korobov kernel on `[0,1]^d`.
pub fn korobov_eval(alpha: u32, d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    KorobovKernel::new(alpha, d)?.checked_eval(x, y)
}

fn check_lengths(dim: usize, x: &[f64], y: &[f64]) -> Result<()> {
    for v in [x, y] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KorobovKernel {
    alpha: u32,
    dim: usize,
    scale: f64,
    coeffs: &'static [f64],
}

impl KorobovKernel {
    pub fn new(alpha: u32, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            alpha,
            dim,
            scale: korobov_scale(alpha),
            coeffs: BERNOULLI[(alpha - 1) as usize],
        })
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    /// Kernel as a function of one fractional difference `t = {x - y}`.
    #[inline]
    pub fn eval_diff_1d(&self, t: f64) -> f64 {
        let b = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        1.0 + self.scale * b
    }

    /// `k(x, x) = (1 + 2ζ(2α))^d`.
    pub fn diagonal(&self) -> f64 {
        self.eval_diff_1d(0.0).powi(self.dim as i32)
    }

    pub fn checked_eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_lengths(self.dim, x, y)?;
        Ok(self.eval(x, y))
    }
}

impl Kernel for KorobovKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        x.iter()
            .zip(y)
            .map(|(&a, &b)| self.eval_diff_1d(periodic_gap(a, b)))
            .product()
    }

    fn uniform_mean_closed_form(&self) -> Option<f64> {
        Some(1.0)
    }
}

fn check_power(alpha: u32, theta: f64) -> Result<f64> {
    let exponent = 2.0 * f64::from(alpha) * theta;
    if !(theta > 0.0 && theta <= 1.0) || exponent <= 1.0 {
        return Err(Error::NotSummable { alpha, theta });
    }
    Ok(exponent)
}

/// Truncated Mercer series of the `theta`-power of the order-`alpha` Korobov kernel:
/// `1 + Σ_{i=1}^{N} i^(-2αθ) [c_i(x) c_i(y) + s_i(x) s_i(y)]`.
pub fn mercer_truncated(alpha: u32, theta: f64, n: usize, x: f64, y: f64) -> Result<f64> {
    let exponent = check_power(alpha, theta)?;
    if n == 0 {
        return Err(Error::InvalidArgument("truncation must be positive".into()));
    }
    Ok(cosine_series(exponent, n, periodic_gap(x, y)))
}

// c_i(x)c_i(y) + s_i(x)s_i(y) = 2 cos(2πi(x - y)); summed from the smallest term up.
fn cosine_series(exponent: f64, n: usize, t: f64) -> f64 {
    let mut sum = 0.0;
    for i in (1..=n).rev() {
        let fi = i as f64;
        let phase = frac(fi * t);
        sum += 2.0 * fi.powf(-exponent) * (2.0 * PI * phase).cos();
    }
    1.0 + sum
}

/// `θ`-power of a Korobov kernel, evaluated only through its truncated Mercer series.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerKernel {
    base: KorobovKernel,
    theta: f64,
    truncation: usize,
    exponent: f64,
}

impl PowerKernel {
    pub fn new(base: KorobovKernel, theta: f64, truncation: usize) -> Result<Self> {
        let exponent = check_power(base.alpha, theta)?;
        if truncation == 0 {
            return Err(Error::InvalidArgument("truncation must be positive".into()));
        }
        Ok(Self {
            base,
            theta,
            truncation,
            exponent,
        })
    }

    pub fn base(&self) -> &KorobovKernel {
        &self.base
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Per-coordinate bound `2 N^(1-2αθ) / (2αθ - 1)` on the dropped tail.
    pub fn tail_bound(&self) -> f64 {
        mercer_tail_bound(self.exponent, self.truncation)
    }

    /// Diagonal `1 + 2 Σ_{i≤N} i^(-2αθ)` of one coordinate.
    pub fn diagonal_1d(&self) -> f64 {
        cosine_series(self.exponent, self.truncation, 0.0)
    }
}

/// `2 N^(1-p) / (p - 1)`, an upper bound on `2 Σ_{i>N} i^(-p)`.
pub fn mercer_tail_bound(exponent: f64, truncation: usize) -> f64 {
    2.0 * (truncation as f64).powf(1.0 - exponent) / (exponent - 1.0)
}

impl Kernel for PowerKernel {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| cosine_series(self.exponent, self.truncation, periodic_gap(a, b)))
            .product()
    }

    fn uniform_mean_closed_form(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Half-integer Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

/// Unit-variance Matérn kernel whose RKHS is the Sobolev space `W_2^r([0,1]^d)`,
/// with `ν = r - d/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaternKernel {
    r: u32,
    dim: usize,
    lengthscale: f64,
    nu: MaternNu,
}

impl MaternKernel {
    pub fn new(r: u32, dim: usize, lengthscale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lengthscale must be positive, got {lengthscale}"
            )));
        }
        let nu = match (2 * r as i64) - dim as i64 {
            1 => MaternNu::Half,
            3 => MaternNu::ThreeHalves,
            5 => MaternNu::FiveHalves,
            _ => return Err(Error::UnsupportedMatern { r, dim }),
        };
        Ok(Self {
            r,
            dim,
            lengthscale,
            nu,
        })
    }

    /// Unit lengthscale.
    pub fn with_order(r: u32, dim: usize) -> Result<Self> {
        Self::new(r, dim, 1.0)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn nu(&self) -> MaternNu {
        self.nu
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Kernel as a function of Euclidean distance.
    #[inline]
    pub fn eval_distance(&self, dist: f64) -> f64 {
        let t = dist / self.lengthscale;
        match self.nu {
            MaternNu::Half => (-t).exp(),
            MaternNu::ThreeHalves => {
                let a = 3f64.sqrt() * t;
                (1.0 + a) * (-a).exp()
            }
            MaternNu::FiveHalves => {
                let a = 5f64.sqrt() * t;
                (1.0 + a + a * a / 3.0) * (-a).exp()
            }
        }
    }
}

impl Kernel for MaternKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.eval_distance(sq.sqrt())
    }
}

/// Matérn kernel evaluation with dimension checks.
pub fn matern_eval(kernel: &MaternKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(kernel.dim, x, y)?;
    Ok(kernel.eval(x, y))
}
