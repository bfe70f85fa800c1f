use std::collections::BTreeMap;

use nalgebra::DVector;

use super::config::{ExperimentConfig, IntegrandFamily, Method};
use super::integrand::{
    constant_integrand, make_fourier_integrand, make_integrand, make_matern_integrand, Integrand,
};
use crate::error::{Error, Result};
use crate::kernels::{KorobovKernel, MaternKernel};
use crate::par::Execution;
use crate::point_sets::{
    cbc_construct_with, random_shift, rank1_lattice, regular_grid, sample_iid_uniform,
    GeneratorVector,
};
use crate::wce::{wce_eval_with, EmbeddingSpec, MeanEmbedding};
use crate::weights::{
    bq_weights_constrained, bq_weights_exact, gram_matrix, sq_norm, QuadratureRule,
};

/// One `(n, replicate)` cell of a convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Method,
    pub assumed_order: u32,
    pub smoothness_s: u32,
    pub dim: usize,
    pub n: usize,
    pub replicate: u32,
    pub seed: u64,
    pub abs_error: f64,
    pub wce: f64,
    pub weight_sq_norm: f64,
}

/// A cell whose rule could not be built; it is left out of the records.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub n: usize,
    pub replicate: u32,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub config: ExperimentConfig,
    /// Sorted by `(n, replicate)`.
    pub records: Vec<ConvergenceRecord>,
    pub failures: Vec<CellFailure>,
}

/// Fraction of failed replicates per size above which a run is rejected.
const MAX_FAILURE_FRACTION: f64 = 0.2;

impl ConvergenceRun {
    /// Errors if more than 20% of the replicates at any `n` failed.
    pub fn check_failure_rate(&self) -> Result<()> {
        let attempted = self.config.effective_replicates() as usize;
        let mut failed: BTreeMap<usize, usize> = BTreeMap::new();
        for f in &self.failures {
            *failed.entry(f.n).or_default() += 1;
        }
        for (n, failed) in failed {
            if failed as f64 > MAX_FAILURE_FRACTION * attempted as f64 {
                return Err(Error::TooManyFailures {
                    n,
                    failed,
                    attempted,
                });
            }
        }
        Ok(())
    }
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceRun> {
    run_convergence_with(config, Execution::default())
}

/// Runs every `(n, replicate)` cell. Cells are independent given their seeds
/// (`seed + replicate`) and are evaluated in parallel under
/// [`Execution::Parallel`]; the output does not depend on the mode.
pub fn run_convergence_with(config: &ExperimentConfig, exec: Execution) -> Result<ConvergenceRun> {
    config.validate()?;
    let sizes = config.sizes();
    let reps = config.effective_replicates();
    let cells: Vec<(usize, u32)> = sizes
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (n, r)))
        .collect();
    let seed_of = |r: u32| config.seed.wrapping_add(u64::from(r));

    let outcomes: Vec<Result<ConvergenceRecord>> = match config.method {
        Method::GridBq => {
            let ctx = GridContext::new(config)?;
            exec.map_range(cells.len(), |c| {
                let (n, r) = cells[c];
                ctx.cell(config, n, seed_of(r), exec)
            })
        }
        _ => {
            let ctx = KorobovContext::new(config, &sizes, exec)?;
            exec.map_range(cells.len(), |c| {
                let (n, r) = cells[c];
                ctx.cell(config, n, r, seed_of(r), exec)
            })
        }
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((n, replicate), outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(CellFailure {
                n,
                replicate,
                seed: seed_of(replicate),
                message: Error::Cell {
                    n,
                    replicate,
                    source: Box::new(e),
                }
                .to_string(),
            }),
        }
    }
    records.sort_by_key(|r| (r.method, r.n, r.replicate));
    Ok(ConvergenceRun {
        config: config.clone(),
        records,
        failures,
    })
}

fn korobov_integrand(config: &ExperimentConfig) -> Result<Integrand> {
    let anchor = vec![config.anchor; config.dim];
    match config.integrand {
        IntegrandFamily::Section => make_integrand(config.smoothness_s, config.dim, &anchor),
        IntegrandFamily::Fourier => {
            make_fourier_integrand(config.smoothness_s, config.dim, &anchor, config.truncation)
        }
        IntegrandFamily::Constant => Ok(constant_integrand(config.dim)),
    }
}

struct KorobovContext {
    embedding: MeanEmbedding<KorobovKernel>,
    integrand: Integrand,
    generators: BTreeMap<usize, GeneratorVector>,
}

impl KorobovContext {
    fn new(config: &ExperimentConfig, sizes: &[usize], exec: Execution) -> Result<Self> {
        let kernel = KorobovKernel::new(config.assumed_order, config.dim)?;
        let embedding = MeanEmbedding::new(kernel, EmbeddingSpec::KorobovClosedForm)?;
        let mut generators = BTreeMap::new();
        if config.method == Method::LatticeShift {
            for &n in sizes {
                let g = cbc_construct_with(n as u64, config.dim, config.assumed_order, exec)?;
                generators.insert(n, g);
            }
        }
        Ok(Self {
            embedding,
            integrand: korobov_integrand(config)?,
            generators,
        })
    }

    fn cell(
        &self,
        config: &ExperimentConfig,
        n: usize,
        replicate: u32,
        seed: u64,
        exec: Execution,
    ) -> Result<ConvergenceRecord> {
        let d = config.dim;
        let rule = match config.method {
            Method::Mc => QuadratureRule::uniform(sample_iid_uniform(n, d, seed)?),
            Method::LatticeShift => {
                let lattice = rank1_lattice(&self.generators[&n]);
                QuadratureRule::uniform(random_shift(&lattice, seed))
            }
            Method::BqExact | Method::BqConstrained => {
                let points = sample_iid_uniform(n, d, seed)?;
                let gram = gram_matrix(self.embedding.kernel(), &points, exec);
                let kmean = DVector::from_element(n, 1.0);
                let report = if config.method == Method::BqExact {
                    bq_weights_exact(&gram, &kmean)?
                } else {
                    bq_weights_constrained(&gram, &kmean, 4.0 / n as f64)?
                };
                QuadratureRule::new(points, report.weights)?
            }
            Method::GridBq => unreachable!("grid-bq uses the Matérn context"),
        };
        let wce = wce_eval_with(&self.embedding, &rule, exec)?;
        Ok(record(
            config,
            &self.integrand,
            &rule,
            n,
            replicate,
            seed,
            wce.e,
        ))
    }
}

fn record(
    config: &ExperimentConfig,
    integrand: &Integrand,
    rule: &QuadratureRule,
    n: usize,
    replicate: u32,
    seed: u64,
    wce: f64,
) -> ConvergenceRecord {
    let estimate = rule.apply(|x| integrand.eval(x));
    ConvergenceRecord {
        method: config.method,
        assumed_order: config.assumed_order,
        smoothness_s: config.smoothness_s,
        dim: config.dim,
        n,
        replicate,
        seed,
        abs_error: (estimate - integrand.true_integral()).abs(),
        wce,
        weight_sq_norm: sq_norm(rule.weights()),
    }
}

struct GridContext {
    embedding: MeanEmbedding<MaternKernel>,
    integrand: Integrand,
}

impl GridContext {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let kernel = MaternKernel::with_order(config.assumed_order, config.dim)?;
        let embedding = MeanEmbedding::new(
            kernel,
            EmbeddingSpec::NumericReference {
                resolution: config.resolution,
            },
        )?;
        let anchor = vec![config.anchor; config.dim];
        let integrand = match config.integrand {
            IntegrandFamily::Constant => constant_integrand(config.dim),
            _ => {
                make_matern_integrand(config.smoothness_s, config.dim, &anchor, config.resolution)?
            }
        };
        // Computed once up front so that cells only read it.
        embedding.initial_sq()?;
        Ok(Self {
            embedding,
            integrand,
        })
    }

    fn cell(
        &self,
        config: &ExperimentConfig,
        n: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<ConvergenceRecord> {
        let m = super::config::grid_side(n, config.dim);
        let points = regular_grid(m, config.dim)?;
        let gram = gram_matrix(self.embedding.kernel(), &points, exec);
        let kmean: Vec<f64> = points
            .iter()
            .map(|p| self.embedding.mean_at(p))
            .collect::<Result<_>>()?;
        let report = bq_weights_exact(&gram, &DVector::from_vec(kmean))?;
        let rule = QuadratureRule::new(points, report.weights)?;
        let wce = wce_eval_with(&self.embedding, &rule, exec)?;
        Ok(record(config, &self.integrand, &rule, n, 0, seed, wce.e))
    }
}
