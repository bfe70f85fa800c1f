use std::collections::BTreeMap;

use super::config::{ExperimentConfig, Method};
use super::run::ConvergenceRecord;
use crate::error::{Error, Result};

/// Decay exponent of `E|P_n f − P f|` for `f` in the `θ`-power of a space in
/// which the rule's worst-case error decays like `n^-b` and `Σ w_i²` like
/// `n^-2c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalRate {
    pub b: f64,
    pub c: f64,
    pub theta: f64,
    pub exponent: f64,
}

impl TheoreticalRate {
    pub fn new(b: f64, c: f64, theta: f64) -> Result<Self> {
        let in_range = b > 0.0 && c > 0.0 && c <= 0.5 && theta > 0.0 && theta <= 1.0;
        if !in_range {
            return Err(Error::InvalidArgument(format!(
                "need b > 0, 0 < c <= 1/2, 0 < theta <= 1 (got b={b}, c={c}, theta={theta})"
            )));
        }
        Ok(Self {
            b,
            c,
            theta,
            exponent: predicted_rate(b, c, theta),
        })
    }
}

/// `θ b − (1/2 − c)(1 − θ)`; positive means the error decays.
pub fn predicted_rate(b: f64, c: f64, theta: f64) -> f64 {
    theta * b - (0.5 - c) * (1.0 - theta)
}

/// Sobolev version with `θ = s/r`: `b s/r − (1/2 − c)(1 − s/r)`.
pub fn predicted_rate_sobolev(b: f64, c: f64, s: u32, r: u32) -> Result<f64> {
    if s > r || r == 0 {
        return Err(Error::InvalidArgument(format!(
            "integrand smoothness s={s} exceeds the assumed order r={r}"
        )));
    }
    Ok(predicted_rate(b, c, f64::from(s) / f64::from(r)))
}

/// Exponent the run is expected to show: `1/2` for Monte Carlo, `min(s, α)` for
/// the Korobov rules (`b = α`, `c = 1/2`, `θ = s/α`), and `s/d` for grids
/// (`b = r/d`, `c = 1/2`).
pub fn predicted_exponent(config: &ExperimentConfig) -> f64 {
    let alpha = f64::from(config.assumed_order);
    let s = f64::from(config.smoothness_s);
    match config.method {
        Method::Mc => 0.5,
        Method::LatticeShift | Method::BqExact | Method::BqConstrained => {
            predicted_rate(alpha, 0.5, (s / alpha).min(1.0))
        }
        Method::GridBq => {
            let r = config.assumed_order;
            let b = f64::from(r) / config.dim as f64;
            predicted_rate_sobolev(b, 0.5, config.smoothness_s.min(r), r).expect("s clamped to r")
        }
    }
}

/// Least-squares line through `(log2 n, log2 mean error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_min: usize,
    pub points_used: usize,
}

/// Mean absolute error per `n` over the replicates present.
pub fn mean_errors(records: &[ConvergenceRecord]) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.n).or_default();
        e.0 += r.abs_error;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(n, (s, c))| (n, s / c as f64))
        .collect()
}

pub fn aggregate_and_fit(records: &[ConvergenceRecord], n_min: usize) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = mean_errors(records)
        .into_iter()
        .filter(|&(n, _)| n >= n_min)
        .map(|(n, e)| ((n as f64).log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 distinct n >= {n_min}, found {}",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Fit(
            "a mean error is zero or not finite; log-log fit undefined".into(),
        ));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        n_min,
        points_used: pts.len(),
    })
}

/// Records that share a method, assumed order and smoothness label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub method: Method,
    pub assumed_order: u32,
    pub smoothness_s: u32,
}

pub fn fit_groups(records: &[ConvergenceRecord], n_min: usize) -> Vec<(GroupKey, Result<RateFit>)> {
    let mut groups: BTreeMap<GroupKey, Vec<ConvergenceRecord>> = BTreeMap::new();
    for r in records {
        let key = GroupKey {
            method: r.method,
            assumed_order: r.assumed_order,
            smoothness_s: r.smoothness_s,
        };
        groups.entry(key).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(k, recs)| (k, aggregate_and_fit(&recs, n_min)))
        .collect()
}
