//! Worst-case integration error under the uniform distribution on `[0,1]^d`.
//!
//! For a rule `(w_i, X_i)` and kernel `k`,
//!
//! ```text
//! e² = ∫∫ k dP dP − 2 Σ_i w_i ∫ k(x, X_i) dP(x) + Σ_i Σ_j w_i w_j k(X_i, X_j)
//! ```
//!
//! Korobov kernels have the constant embedding `∫ k(x, y) dx = 1`. Other
//! kernels (Matérn) go through a composite-Simpson reference quadrature whose
//! per-axis panels are split at the embedding point, where the kernel has a
//! kink.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, MaternKernel};
use crate::par::Execution;
use crate::point_sets::GeneratorVector;
use crate::weights::QuadratureRule;

/// Radicands in `[-NEGATIVE_TOL, 0)` are treated as round-off and clamped.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Minimum reference-quadrature resolution per axis.
pub const MIN_RESOLUTION: usize = 64;

/// Largest change allowed when the reference resolution is doubled.
pub const SELF_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingSpec {
    /// `∫ k(x, y) dx` is the same known constant for every `y` (Korobov, uniform P).
    KorobovClosedForm,
    /// Reference quadrature with `resolution` panels per axis.
    NumericReference { resolution: usize },
}

/// Decomposed worst-case error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WceReport {
    /// `∫∫ k(x, x') dP(x) dP(x')`
    pub initial_sq: f64,
    /// `Σ w_i ∫ k(x, X_i) dP(x)`
    pub cross: f64,
    /// `Σ Σ w_i w_j k(X_i, X_j)`
    pub quad: f64,
    pub e: f64,
}

impl WceReport {
    pub fn radicand(&self) -> f64 {
        self.initial_sq - 2.0 * self.cross + self.quad
    }
}

/// `sqrt(r)`, with `r` in `[-1e-10, 0)` treated as rounding and mapped to zero.
pub fn clamp_radicand(r: f64) -> Result<f64> {
    if r >= 0.0 {
        Ok(r.sqrt())
    } else if r >= -NEGATIVE_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand(r))
    }
}

// Composite Simpson nodes and weights on [0, 1], one block of panels per
// sub-interval between consecutive breakpoints.
fn axis_rule(resolution: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    cuts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut rule: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let mut m = ((resolution as f64 * len).round() as usize).max(2);
        if m % 2 == 1 {
            m += 1;
        }
        let h = len / m as f64;
        for k in 0..=m {
            let coef = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let x = if k == m { b } else { a + k as f64 * h };
            let wt = coef * h / 3.0;
            match rule.last_mut() {
                Some(last) if k == 0 && last.0 == x => last.1 += wt,
                _ => rule.push((x, wt)),
            }
        }
    }
    rule
}

/// Integrates `f` over `[0,1]^d` (`d ≤ 2`) with composite Simpson panels,
/// split per axis at the given coordinates of `split`.
pub fn integrate_unit_cube<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    dim: usize,
    resolution: usize,
    split: Option<&[f64]>,
) -> Result<f64> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "reference quadrature supports d <= 2, got {dim}"
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    let axes: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|j| {
            let brk: Vec<f64> = split.map(|s| vec![s[j]]).unwrap_or_default();
            axis_rule(resolution, &brk)
        })
        .collect();
    let mut total = 0.0;
    if dim == 1 {
        for &(x, w) in &axes[0] {
            total += w * f(&[x]);
        }
    } else {
        for &(x0, w0) in &axes[0] {
            let mut inner = 0.0;
            for &(x1, w1) in &axes[1] {
                inner += w1 * f(&[x0, x1]);
            }
            total += w0 * inner;
        }
    }
    Ok(total)
}

/// `∫ k(x, y) dx` over `[0,1]^d` by reference quadrature.
pub fn numeric_kernel_mean<K: Kernel>(kernel: &K, y: &[f64], resolution: usize) -> Result<f64> {
    if y.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: y.len(),
        });
    }
    integrate_unit_cube(|x| kernel.eval(x, y), kernel.dim(), resolution, Some(y))
}

/// Matérn kernel mean under the uniform distribution.
pub fn kernel_mean_numeric(kernel: &MaternKernel, y: &[f64], resolution: usize) -> Result<f64> {
    numeric_kernel_mean(kernel, y, resolution)
}

/// [`numeric_kernel_mean`] at `resolution`, rejected if doubling the
/// resolution moves it by [`SELF_CHECK_TOL`] or more.
pub fn numeric_kernel_mean_checked<K: Kernel>(
    kernel: &K,
    y: &[f64],
    resolution: usize,
) -> Result<f64> {
    let coarse = numeric_kernel_mean(kernel, y, resolution)?;
    let fine = numeric_kernel_mean(kernel, y, 2 * resolution)?;
    let change = (fine - coarse).abs();
    if change >= SELF_CHECK_TOL {
        return Err(Error::EmbeddingNotConverged { resolution, change });
    }
    Ok(coarse)
}

/// Korobov kernel mean under the uniform distribution: exactly one.
pub fn kernel_mean_korobov(_y: &[f64]) -> f64 {
    1.0
}

/// Kernel mean embedding of the uniform distribution for one kernel.
///
/// Numeric values are memoized per point; the cache only grows, and repeated
/// lookups of the same point always return the first computed value.
#[derive(Debug)]
pub struct MeanEmbedding<K> {
    kernel: K,
    spec: EmbeddingSpec,
    constant: Option<f64>,
    cache: RwLock<HashMap<Vec<u64>, f64>>,
    initial: OnceLock<f64>,
}

impl<K: Kernel> MeanEmbedding<K> {
    pub fn new(kernel: K, spec: EmbeddingSpec) -> Result<Self> {
        let constant = match spec {
            EmbeddingSpec::KorobovClosedForm => {
                Some(kernel.uniform_mean_closed_form().ok_or_else(|| {
                    Error::InvalidArgument(
                        "closed-form embedding needs a Korobov-type kernel".into(),
                    )
                })?)
            }
            EmbeddingSpec::NumericReference { resolution } => {
                let probe = vec![0.3; kernel.dim()];
                numeric_kernel_mean_checked(&kernel, &probe, resolution)?;
                None
            }
        };
        Ok(Self {
            kernel,
            spec,
            constant,
            cache: RwLock::new(HashMap::new()),
            initial: OnceLock::new(),
        })
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn spec(&self) -> EmbeddingSpec {
        self.spec
    }

    fn resolution(&self) -> usize {
        match self.spec {
            EmbeddingSpec::NumericReference { resolution } => resolution,
            EmbeddingSpec::KorobovClosedForm => 0,
        }
    }

    /// `∫ k(x, y) dP(x)`, computed without touching the cache.
    pub fn mean_uncached(&self, y: &[f64]) -> Result<f64> {
        match self.constant {
            Some(c) => Ok(c),
            None => numeric_kernel_mean(&self.kernel, y, self.resolution()),
        }
    }

    /// `∫ k(x, y) dP(x)`.
    pub fn mean_at(&self, y: &[f64]) -> Result<f64> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        let key: Vec<u64> = y.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self
            .cache
            .read()
            .expect("embedding cache poisoned")
            .get(&key)
        {
            return Ok(*v);
        }
        let v = self.mean_uncached(y)?;
        let mut cache = self.cache.write().expect("embedding cache poisoned");
        Ok(*cache.entry(key).or_insert(v))
    }

    /// `∫∫ k(x, x') dP(x) dP(x')`.
    pub fn initial_sq(&self) -> Result<f64> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        if let Some(v) = self.initial.get() {
            return Ok(*v);
        }
        let resolution = self.resolution();
        let mut failure = None;
        let v = integrate_unit_cube(
            |y| match numeric_kernel_mean(&self.kernel, y, resolution) {
                Ok(m) => m,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            self.kernel.dim(),
            resolution,
            None,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(*self.initial.get_or_init(|| v))
    }
}

/// Worst-case error of `rule`, evaluated with the kernel symmetry.
pub fn wce_eval<K: Kernel>(
    embedding: &MeanEmbedding<K>,
    rule: &QuadratureRule,
) -> Result<WceReport> {
    wce_eval_with(embedding, rule, Execution::default())
}

pub fn wce_eval_with<K: Kernel>(
    embedding: &MeanEmbedding<K>,
    rule: &QuadratureRule,
    exec: Execution,
) -> Result<WceReport> {
    let points = rule.points();
    if points.dim() != embedding.kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: embedding.kernel.dim(),
            found: points.dim(),
        });
    }
    let w = rule.weights();
    let n = w.len();
    let kernel = &embedding.kernel;

    let means = exec.map_range(n, |i| embedding.mean_at(points.point(i)));
    let mut cross = 0.0;
    for (wi, m) in w.iter().zip(means) {
        cross += wi * m?;
    }

    // Row i contributes w_i (w_i k_ii / 2 + Σ_{j>i} w_j k_ij); the total is doubled.
    let rows = exec.map_range(n, |i| {
        let xi = points.point(i);
        let upper: f64 = (i + 1..n)
            .map(|j| w[j] * kernel.eval(xi, points.point(j)))
            .sum();
        w[i] * (0.5 * w[i] * kernel.eval(xi, xi) + upper)
    });
    let quad = 2.0 * rows.iter().sum::<f64>();

    let initial_sq = embedding.initial_sq()?;
    let radicand = initial_sq - 2.0 * cross + quad;
    Ok(WceReport {
        initial_sq,
        cross,
        quad,
        e: clamp_radicand(radicand)?,
    })
}

/// Independent worst-case error: a literal double loop over all `(i, j)`
/// pairs, kernel means recomputed for every node.
#[allow(clippy::needless_range_loop)]
pub fn wce_bruteforce<K: Kernel>(
    embedding: &MeanEmbedding<K>,
    rule: &QuadratureRule,
) -> Result<f64> {
    let points = rule.points();
    let w = rule.weights();
    let mut radicand = embedding.initial_sq()?;
    for i in 0..w.len() {
        radicand -= 2.0 * w[i] * embedding.mean_uncached(points.point(i))?;
    }
    for i in 0..w.len() {
        for j in 0..w.len() {
            radicand += w[i] * w[j] * embedding.kernel.eval(points.point(i), points.point(j));
        }
    }
    clamp_radicand(radicand)
}

/// Squared worst-case error of the equal-weight lattice rule from `gen` in the
/// order-`alpha` Korobov space: `−1 + (1/n) Σ_i Π_l k_α({i z_l / n})`.
pub fn lattice_wce_sq(gen: &GeneratorVector, alpha: u32) -> Result<f64> {
    let k = crate::kernels::KorobovKernel::new(alpha, 1)?;
    let n = gen.n();
    let sum: f64 = (0..n)
        .map(|i| {
            gen.z()
                .iter()
                .map(|&z| k.eval_diff_1d(((i * z) % n) as f64 / n as f64))
                .product::<f64>()
        })
        .sum();
    Ok(-1.0 + sum / n as f64)
}
