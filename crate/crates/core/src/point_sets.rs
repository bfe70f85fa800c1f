//! Quadrature node sets: i.i.d. samples, rank-1 lattices, random shifts and grids.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{frac, KorobovKernel};
use crate::par::Execution;

/// `n` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from row-major coordinates, each in `[0, 1]`.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form a non-empty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {bad} lies outside [0, 1]"
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Rank-1 lattice generating vector: prime `n` and `z ∈ {1, …, n-1}^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorVector {
    n: u64,
    z: Vec<u64>,
}

impl GeneratorVector {
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self> {
        if !is_prime(n) {
            return Err(Error::NotPrime(n));
        }
        if z.is_empty() {
            return Err(Error::InvalidArgument(
                "generator needs at least one component".into(),
            ));
        }
        if let Some(bad) = z.iter().find(|&&zj| zj == 0 || zj >= n) {
            return Err(Error::InvalidArgument(format!(
                "generator component {bad} not in 1..={}",
                n - 1
            )));
        }
        Ok(Self { n, z })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Writes the two-line text form `"n d alpha"` / `"z_1 … z_d"`.
    pub fn write_text<W: Write>(&self, alpha: u32, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.n, self.z.len(), alpha)?;
        let z: Vec<String> = self.z.iter().map(u64::to_string).collect();
        writeln!(out, "{}", z.join(" "))?;
        Ok(())
    }

    /// Reads the text form written by [`GeneratorVector::write_text`], returning
    /// the generator and the smoothness order it was built for.
    pub fn read_text<R: BufRead>(input: R) -> Result<(Self, u32)> {
        let bad = |line: u64, message: String| Error::Parse {
            path: "<generator>".into(),
            line,
            message,
        };
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing header line".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(1, format!("expected \"n d alpha\", got {header:?}")));
        }
        let parse = |s: &str| s.parse::<u64>().map_err(|e| bad(1, format!("{s:?}: {e}")));
        let (n, d, alpha) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        let body = lines
            .next()
            .ok_or_else(|| bad(2, "missing generator line".into()))??;
        let z = body
            .split_whitespace()
            .map(|s| s.parse::<u64>().map_err(|e| bad(2, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if z.len() as u64 != d {
            return Err(bad(2, format!("expected {d} components, got {}", z.len())));
        }
        let alpha = u32::try_from(alpha).map_err(|_| bad(1, format!("alpha {alpha} too large")))?;
        Ok((Self::new(n, z)?, alpha))
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime_at_least(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` i.i.d. uniform points on `[0,1)^d`, reproducible from `seed`.
pub fn sample_iid_uniform(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::TooFewPoints {
            required: 1,
            found: 0,
        });
    }
    let mut rng = seeded_rng(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointSet::new(d, coords)
}

/// Points `{i z / n}` for `i = 1, …, n`; the last one is the origin.
pub fn rank1_lattice(gen: &GeneratorVector) -> PointSet {
    let n = gen.n;
    let mut coords = Vec::with_capacity(n as usize * gen.z.len());
    for i in 1..=n {
        for &zj in &gen.z {
            coords.push(((i * zj) % n) as f64 / n as f64);
        }
    }
    PointSet {
        dim: gen.z.len(),
        coords,
    }
}

/// Maps every point to `{x + Δ}` for one uniform `Δ` drawn from `seed`.
pub fn random_shift(ps: &PointSet, seed: u64) -> PointSet {
    let mut rng = seeded_rng(seed);
    let delta: Vec<f64> = (0..ps.dim).map(|_| rng.random::<f64>()).collect();
    shift_by(ps, &delta)
}

/// Deterministic shift `{x + delta}`.
pub fn shift_by(ps: &PointSet, delta: &[f64]) -> PointSet {
    assert_eq!(delta.len(), ps.dim, "shift dimension");
    let coords = ps
        .coords
        .chunks_exact(ps.dim)
        .flat_map(|p| p.iter().zip(delta).map(|(x, s)| frac(x + s)))
        .collect();
    PointSet {
        dim: ps.dim,
        coords,
    }
}

/// The `m^d` midpoints `((i_1 + 1/2)/m, …, (i_d + 1/2)/m)`.
pub fn regular_grid(m: usize, d: usize) -> Result<PointSet> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "grid needs m >= 1 and d >= 1".into(),
        ));
    }
    let n = u32::try_from(d)
        .ok()
        .and_then(|e| m.checked_pow(e))
        .filter(|n| n.checked_mul(d).is_some())
        .ok_or(Error::GridOverflow { m, dim: d })?;
    let mut coords = Vec::with_capacity(n * d);
    let mut idx = vec![0usize; d];
    for _ in 0..n {
        coords.extend(idx.iter().map(|&i| (i as f64 + 0.5) / m as f64));
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    PointSet::new(d, coords)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn torus(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = (x - y).abs();
            let t = t.min(1.0 - t);
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

fn min_pairwise(ps: &PointSet, dist: fn(&[f64], &[f64]) -> f64) -> Result<f64> {
    let n = ps.len();
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: n,
        });
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(dist(ps.point(i), ps.point(j)));
        }
    }
    Ok(best)
}

/// Separation radius `min_{i≠j} ‖X_i − X_j‖`.
pub fn separation_radius(ps: &PointSet) -> Result<f64> {
    min_pairwise(ps, euclidean)
}

/// Separation radius in the wrap-around metric of the unit torus.
pub fn separation_radius_torus(ps: &PointSet) -> Result<f64> {
    min_pairwise(ps, torus)
}

/// Largest pairwise Euclidean distance; zero for a single point.
pub fn diameter(ps: &PointSet) -> f64 {
    let n = ps.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(euclidean(ps.point(i), ps.point(j)));
        }
    }
    best
}

/// Component-by-component search for a lattice generator in the order-`alpha`
/// Korobov space.
pub fn cbc_construct(n: u64, d: usize, alpha: u32) -> Result<GeneratorVector> {
    cbc_construct_with(n, d, alpha, Execution::default())
}

// First index whose score is within summation rounding (`2 terms ε Σ|term|`)
// of the minimum, so exact ties resolve to the smallest candidate regardless of
// the order the terms were added in.
fn smallest_near_min(scores: &[(f64, f64)], terms: usize) -> usize {
    let rel = 2.0 * terms as f64 * f64::EPSILON;
    let (best, best_mag) =
        scores.iter().copied().fold(
            (f64::INFINITY, 0.0),
            |acc, s| if s.0 < acc.0 { s } else { acc },
        );
    scores
        .iter()
        .position(|&(s, mag)| s - best <= rel * (mag + best_mag))
        .unwrap_or(0)
}

/// [`cbc_construct`] with an explicit execution mode. The candidate scan is the
/// parallel loop; the argmin runs sequentially and ties resolve to the
/// smallest candidate.
pub fn cbc_construct_with(
    n: u64,
    d: usize,
    alpha: u32,
    exec: Execution,
) -> Result<GeneratorVector> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let kernel = KorobovKernel::new(alpha, 1)?;
    let nn = n as usize;
    // k_α({j/n}) − 1 for j = 0..n. The candidate score Σ_i P_i (1 + a) splits
    // into Σ_i P_i, common to all candidates, and Σ_i P_i a, which is compared
    // without the cancellation against 1.
    let table: Vec<f64> = (0..nn)
        .map(|j| kernel.eval_diff_1d(j as f64 / n as f64) - 1.0)
        .collect();
    let mut running = vec![1.0f64; nn];
    let mut z = Vec::with_capacity(d);
    for _ in 0..d {
        let scores = exec.map_range(nn - 1, |c| {
            let cand = (c + 1) as u64;
            running
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(sum, mag), (i, p)| {
                    let term = p * table[((i as u64 * cand) % n) as usize];
                    (sum + term, mag + term.abs())
                })
        });
        let zj = (smallest_near_min(&scores, nn) + 1) as u64;
        for (i, p) in running.iter_mut().enumerate() {
            *p *= 1.0 + table[((i as u64 * zj) % n) as usize];
        }
        z.push(zj);
    }
    GeneratorVector::new(n, z)
}
