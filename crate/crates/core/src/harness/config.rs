use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::DEFAULT_TRUNCATION;
use crate::point_sets::next_prime_at_least;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// i.i.d. uniform points, equal weights.
    Mc,
    /// CBC lattice for the assumed order, one random shift per replicate, equal weights.
    LatticeShift,
    /// i.i.d. uniform points, unconstrained Bayesian-quadrature weights.
    BqExact,
    /// i.i.d. uniform points, Bayesian-quadrature weights with `Σ w² ≤ 4/n`.
    BqConstrained,
    /// Midpoint grid, Bayesian-quadrature weights for a Matérn kernel.
    GridBq,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mc,
        Method::LatticeShift,
        Method::BqExact,
        Method::BqConstrained,
        Method::GridBq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::LatticeShift => "lattice-shift",
            Method::BqExact => "bq-exact",
            Method::BqConstrained => "bq-constrained",
            Method::GridBq => "grid-bq",
        }
    }

    /// Whether replicates differ (random points or shifts).
    pub fn is_randomized(self) -> bool {
        !matches!(self, Method::GridBq)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Which test function a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandFamily {
    /// Korobov kernel section `k_s(·, y)`.
    Section,
    /// Fourier coefficients `i^-(s+1/2)`: smoothness just below `s`.
    Fourier,
    /// `f ≡ 1`.
    Constant,
}

impl FromStr for IntegrandFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "section" => Ok(Self::Section),
            "fourier" => Ok(Self::Fourier),
            "constant" => Ok(Self::Constant),
            _ => Err(Error::Config(format!(
                "unknown integrand {s:?} (expected section, fourier or constant)"
            ))),
        }
    }
}

impl IntegrandFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Section => "section",
            Self::Fourier => "fourier",
            Self::Constant => "constant",
        }
    }
}

/// One convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Korobov order α of the rule, or Sobolev order r for `grid-bq`.
    pub assumed_order: u32,
    pub smoothness_s: u32,
    pub dim: usize,
    pub j_min: u32,
    pub j_max: u32,
    pub replicates: u32,
    pub seed: u64,
    pub n_min_fit: usize,
    pub integrand: IntegrandFamily,
    /// Common anchor coordinate `y_j` of the integrand.
    pub anchor: f64,
    /// Frequencies kept by the `fourier` integrand.
    pub truncation: usize,
    /// Reference-quadrature panels per axis for Matérn embeddings.
    pub resolution: usize,
}

impl ExperimentConfig {
    pub const DEFAULT_ANCHOR: f64 = 0.3;
    pub const DEFAULT_RESOLUTION: usize = 2048;
    pub const DEFAULT_N_MIN_FIT: usize = 16;

    pub fn new(method: Method, assumed_order: u32, smoothness_s: u32, dim: usize) -> Self {
        Self {
            method,
            assumed_order,
            smoothness_s,
            dim,
            j_min: 4,
            j_max: 10,
            replicates: 20,
            seed: 0,
            n_min_fit: Self::DEFAULT_N_MIN_FIT,
            integrand: IntegrandFamily::Fourier,
            anchor: Self::DEFAULT_ANCHOR,
            truncation: DEFAULT_TRUNCATION,
            resolution: Self::DEFAULT_RESOLUTION,
        }
    }

    /// Parses `key=value` lines. Blank lines and `#` comments are ignored.
    ///
    /// Required keys: `method`, `alpha`, `s`, `d`, `j_min`, `j_max`,
    /// `replicates`, `seed`. Optional: `n_min_fit`, `integrand`, `anchor`,
    /// `truncation`, `resolution`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut method = None;
        let mut alpha = None;
        let mut s = None;
        let mut d = None;
        let mut j_min = None;
        let mut j_max = None;
        let mut replicates = None;
        let mut seed = None;
        let mut cfg = Self::new(Method::Mc, 1, 1, 1);

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected key=value")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(lineno: usize, key: &str, value: &str) -> Result<T> {
                value.parse().map_err(|_| {
                    Error::Config(format!("line {lineno}: bad value {value:?} for {key}"))
                })
            }
            match key {
                "method" => method = Some(value.parse::<Method>()?),
                "alpha" => alpha = Some(num(lineno, key, value)?),
                "s" => s = Some(num(lineno, key, value)?),
                "d" => d = Some(num(lineno, key, value)?),
                "j_min" => j_min = Some(num(lineno, key, value)?),
                "j_max" => j_max = Some(num(lineno, key, value)?),
                "replicates" => replicates = Some(num(lineno, key, value)?),
                "seed" => seed = Some(num(lineno, key, value)?),
                "n_min_fit" => cfg.n_min_fit = num(lineno, key, value)?,
                "integrand" => cfg.integrand = value.parse()?,
                "anchor" => cfg.anchor = num(lineno, key, value)?,
                "truncation" => cfg.truncation = num(lineno, key, value)?,
                "resolution" => cfg.resolution = num(lineno, key, value)?,
                other => {
                    return Err(Error::Config(format!(
                        "line {lineno}: unknown key {other:?}"
                    )))
                }
            }
        }
        let missing = |k: &str| Error::Config(format!("missing key {k}"));
        cfg.method = method.ok_or_else(|| missing("method"))?;
        cfg.assumed_order = alpha.ok_or_else(|| missing("alpha"))?;
        cfg.smoothness_s = s.ok_or_else(|| missing("s"))?;
        cfg.dim = d.ok_or_else(|| missing("d"))?;
        cfg.j_min = j_min.ok_or_else(|| missing("j_min"))?;
        cfg.j_max = j_max.ok_or_else(|| missing("j_max"))?;
        cfg.replicates = replicates.ok_or_else(|| missing("replicates"))?;
        cfg.seed = seed.ok_or_else(|| missing("seed"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.assumed_order == 0 || self.smoothness_s == 0 || self.dim == 0 {
            return bad("alpha, s and d must be positive".into());
        }
        if self.j_min > self.j_max || self.j_max > 20 {
            return bad(format!(
                "need j_min <= j_max <= 20, got {}..{}",
                self.j_min, self.j_max
            ));
        }
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.anchor) {
            return bad(format!("anchor {} outside [0, 1]", self.anchor));
        }
        if self.truncation == 0 {
            return bad("truncation must be positive".into());
        }
        if self.method == Method::GridBq && self.smoothness_s > self.assumed_order {
            return bad("grid-bq needs s <= r".into());
        }
        Ok(())
    }

    /// Sample sizes of the sweep, one per `j` in `j_min..=j_max`.
    pub fn sizes(&self) -> Vec<usize> {
        (self.j_min..=self.j_max)
            .map(|j| {
                let target = 1usize << j;
                match self.method {
                    Method::LatticeShift => next_prime_at_least(target as u64) as usize,
                    Method::GridBq => grid_side(target, self.dim).pow(self.dim as u32),
                    _ => target,
                }
            })
            .collect()
    }

    /// Replicates actually run per size.
    pub fn effective_replicates(&self) -> u32 {
        if self.method.is_randomized() {
            self.replicates
        } else {
            1
        }
    }
}

/// Smallest `m` with `m^d >= target`.
pub(crate) fn grid_side(target: usize, d: usize) -> usize {
    let mut m = (target as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
    while m.pow(d as u32) < target {
        m += 1;
    }
    while m > 1 && (m - 1).pow(d as u32) >= target {
        m -= 1;
    }
    m
}
