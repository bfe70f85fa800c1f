use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use kquad::harness::{
    aggregate_and_fit, export_table, fit_groups, import_table, predicted_exponent, run_convergence,
    ExperimentConfig,
};
use kquad::kernels::KorobovKernel;
use kquad::point_sets::{cbc_construct, rank1_lattice, GeneratorVector, PointSet};
use kquad::wce::{clamp_radicand, lattice_wce_sq, wce_eval, EmbeddingSpec, MeanEmbedding};
use kquad::weights::{
    bq_weights_constrained, bq_weights_exact, gram_matrix, sq_norm, QuadratureRule,
};
use kquad::{Error, Execution, Result};

/// Kernel quadrature in Korobov and Sobolev spaces: lattice construction,
/// worst-case errors and convergence experiments.
#[derive(Parser)]
#[command(name = "kquad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a rank-1 lattice generator component by component.
    Cbc {
        /// Number of points (prime).
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        /// Korobov smoothness order.
        #[arg(long)]
        alpha: u32,
        /// Output file for the generator vector.
        #[arg(long)]
        out: PathBuf,
    },
    /// Worst-case error of a single rule in the Korobov space.
    #[command(group(ArgGroup::new("source").required(true).args(["rule", "lattice"])))]
    Wce {
        /// Rule file: one node per line, weight followed by the coordinates.
        #[arg(long)]
        rule: Option<PathBuf>,
        /// Lattice `n,z1,z2,...`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        lattice: Option<Vec<u64>>,
        #[arg(long)]
        alpha: u32,
        /// Dimension; checked against the input when given.
        #[arg(long)]
        d: Option<usize>,
        /// Weight mode. Defaults to `file` for rule files and `uniform` for lattices.
        #[arg(long, value_enum)]
        weights: Option<WeightMode>,
    },
    /// Run a convergence experiment and write its records as CSV.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit log-log slopes per (method, alpha, s) group of a CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = ExperimentConfig::DEFAULT_N_MIN_FIT)]
        n_min: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightMode {
    Uniform,
    Bq,
    BqConstrained,
    File,
}

impl WeightMode {
    fn as_str(self) -> &'static str {
        match self {
            WeightMode::Uniform => "uniform",
            WeightMode::Bq => "bq",
            WeightMode::BqConstrained => "bq-constrained",
            WeightMode::File => "file",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cbc { n, d, alpha, out } => cmd_cbc(n, d, alpha, &out),
        Command::Wce {
            rule,
            lattice,
            alpha,
            d,
            weights,
        } => cmd_wce(rule.as_deref(), lattice.as_deref(), alpha, d, weights),
        Command::Convergence { config, out } => cmd_convergence(&config, &out),
        Command::Fit { input, n_min } => cmd_fit(&input, n_min),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn cmd_cbc(n: u64, d: usize, alpha: u32, out: &Path) -> Result<()> {
    let gen = cbc_construct(n, d, alpha)?;
    let e = clamp_radicand(lattice_wce_sq(&gen, alpha)?)?;
    let mut file = BufWriter::new(File::create(out)?);
    gen.write_text(alpha, &mut file)?;
    file.flush()?;
    let z: Vec<String> = gen.z().iter().map(u64::to_string).collect();
    println!("n={n}\nd={d}\nalpha={alpha}\nz={}\nwce={e}", z.join(","));
    Ok(())
}

// One node per line: weight then coordinates, separated by whitespace or commas.
fn read_rule(path: &Path) -> Result<(PointSet, Vec<f64>)> {
    let bad = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut weights = Vec::new();
    let mut coords = Vec::new();
    let mut dim = None;
    for (idx, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let lineno = idx as u64 + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(lineno, format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 2 {
            return Err(bad(
                lineno,
                "expected a weight and at least one coordinate".into(),
            ));
        }
        let d = *dim.get_or_insert(values.len() - 1);
        if values.len() - 1 != d {
            return Err(bad(
                lineno,
                format!("expected {d} coordinates, got {}", values.len() - 1),
            ));
        }
        weights.push(values[0]);
        coords.extend_from_slice(&values[1..]);
    }
    let d = dim.ok_or_else(|| bad(1, "rule file has no nodes".into()))?;
    Ok((PointSet::new(d, coords)?, weights))
}

fn cmd_wce(
    rule: Option<&Path>,
    lattice: Option<&[u64]>,
    alpha: u32,
    d: Option<usize>,
    mode: Option<WeightMode>,
) -> Result<()> {
    let (points, file_weights) = match (rule, lattice) {
        (Some(path), _) => {
            let (p, w) = read_rule(path)?;
            (p, Some(w))
        }
        (None, Some([n, z @ ..])) => (rank1_lattice(&GeneratorVector::new(*n, z.to_vec())?), None),
        _ => {
            return Err(Error::InvalidArgument(
                "--lattice needs n followed by z".into(),
            ))
        }
    };
    if let Some(d) = d {
        if d != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: points.dim(),
            });
        }
    }
    let mode = mode.unwrap_or(if file_weights.is_some() {
        WeightMode::File
    } else {
        WeightMode::Uniform
    });
    let n = points.len();
    let emb = MeanEmbedding::new(
        KorobovKernel::new(alpha, points.dim())?,
        EmbeddingSpec::KorobovClosedForm,
    )?;
    let weights = match mode {
        WeightMode::Uniform => vec![1.0 / n as f64; n],
        WeightMode::File => file_weights
            .ok_or_else(|| Error::InvalidArgument("--weights file needs a --rule file".into()))?,
        WeightMode::Bq | WeightMode::BqConstrained => {
            let gram = gram_matrix(emb.kernel(), &points, Execution::default());
            let kmean = DVector::from_element(n, 1.0);
            let report = if mode == WeightMode::Bq {
                bq_weights_exact(&gram, &kmean)?
            } else {
                bq_weights_constrained(&gram, &kmean, 4.0 / n as f64)?
            };
            report.weights
        }
    };
    let weight_sq_norm = sq_norm(&weights);
    let d = points.dim();
    let report = wce_eval(&emb, &QuadratureRule::new(points, weights)?)?;
    println!("n={n}\nd={d}\nalpha={alpha}\nweights={}", mode.as_str());
    println!(
        "initial_sq={}\ncross={}\nquad={}\ne={}\nweight_sq_norm={weight_sq_norm}",
        report.initial_sq, report.cross, report.quad, report.e
    );
    Ok(())
}

fn cmd_convergence(config_path: &Path, out: &Path) -> Result<()> {
    let config = ExperimentConfig::from_file(config_path)?;
    let run = run_convergence(&config)?;
    export_table(&run.records, out)?;
    for f in &run.failures {
        eprintln!("warning: {}", f.message);
    }
    run.check_failure_rate()?;
    // Exact integration (all errors zero) or too few sizes leave the slope
    // undefined; the records are still valid output.
    let fit = match aggregate_and_fit(&run.records, config.n_min_fit) {
        Ok(fit) => format!(
            "slope={:?} intercept={:?} points_used={}",
            fit.slope, fit.intercept, fit.points_used
        ),
        Err(e) => {
            eprintln!("warning: {e}");
            "slope=none".to_string()
        }
    };
    println!(
        "method={} alpha={} s={} d={} records={} failures={} {fit} predicted_exponent={:?}",
        config.method,
        config.assumed_order,
        config.smoothness_s,
        config.dim,
        run.records.len(),
        run.failures.len(),
        predicted_exponent(&config)
    );
    Ok(())
}

fn cmd_fit(input: &Path, n_min: usize) -> Result<()> {
    let records = import_table(input)?;
    let mut failed = 0;
    for (key, fit) in fit_groups(&records, n_min) {
        match fit {
            Ok(fit) => println!(
                "method={} alpha={} s={} slope={:?} intercept={:?} points_used={}",
                key.method,
                key.assumed_order,
                key.smoothness_s,
                fit.slope,
                fit.intercept,
                fit.points_used
            ),
            Err(e) => {
                eprintln!(
                    "method={} alpha={} s={}: {e}",
                    key.method, key.assumed_order, key.smoothness_s
                );
                failed += 1;
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Fit("no records".into()));
    }
    if failed > 0 {
        return Err(Error::Fit(format!("{failed} group(s) could not be fitted")));
    }
    Ok(())
}
