//! Acceptance checks, one PASS/FAIL line each. Runs as a plain binary so the
//! lines are always printed; exits non-zero if any check fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kquad::harness::{
    aggregate_and_fit, predicted_rate, predicted_rate_sobolev, run_convergence, write_table,
    ConvergenceRecord, ExperimentConfig, IntegrandFamily, Method,
};
use kquad::kernels::{korobov_eval_1d, mercer_tail_bound, mercer_truncated, Kernel, KorobovKernel};
use kquad::point_sets::{
    random_shift, rank1_lattice, regular_grid, sample_iid_uniform, separation_radius,
    GeneratorVector,
};
use kquad::wce::{wce_bruteforce, wce_eval, EmbeddingSpec, MeanEmbedding};
use kquad::weights::{bq_weights_constrained, bq_weights_exact, gram_matrix, QuadratureRule};
use kquad::Execution;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn korobov_embedding(alpha: u32, d: usize) -> MeanEmbedding<KorobovKernel> {
    MeanEmbedding::new(
        KorobovKernel::new(alpha, d).unwrap(),
        EmbeddingSpec::KorobovClosedForm,
    )
    .unwrap()
}

fn mercer_vs_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let alpha = rng.random_range(1..=3u32);
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let series = mercer_truncated(alpha, 1.0, n, x, y).map_err(|e| e.to_string())?;
        let exact = korobov_eval_1d(alpha, x, y).map_err(|e| e.to_string())?;
        let bound = mercer_tail_bound(2.0 * f64::from(alpha), n) + 1e-9;
        let slack = (series - exact).abs() - bound;
        worst = worst.max(slack);
        if slack > 0.0 {
            return Err(format!(
                "alpha={alpha} x={x} y={y}: diff exceeds bound by {slack:e}"
            ));
        }
    }
    Ok(format!("max (diff - bound) = {worst:.3e}"))
}

fn power_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    let bound = mercer_tail_bound(2.0, n);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let power = mercer_truncated(2, 0.5, n, x, y).map_err(|e| e.to_string())?;
        let base = korobov_eval_1d(1, x, y).map_err(|e| e.to_string())?;
        worst = worst.max((power - base).abs());
    }
    if worst <= bound {
        Ok(format!("max diff {worst:.3e} <= tail bound {bound:.3e}"))
    } else {
        Err(format!("max diff {worst:.3e} > tail bound {bound:.3e}"))
    }
}

fn wce_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let n = rng.random_range(1..=64usize);
        let d = rng.random_range(1..=2usize);
        let alpha = rng.random_range(1..=3u32);
        let points = sample_iid_uniform(n, d, 100 + case).unwrap();
        let weights: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..2.0) / n as f64)
            .collect();
        let rule = QuadratureRule::new(points, weights).unwrap();
        let emb = korobov_embedding(alpha, d);
        let fast = wce_eval(&emb, &rule).map_err(|e| e.to_string())?.e;
        let slow = wce_bruteforce(&emb, &rule).map_err(|e| e.to_string())?;
        let rel = (fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    if worst <= 1e-10 {
        Ok(format!("max relative difference {worst:.3e}"))
    } else {
        Err(format!("max relative difference {worst:.3e} > 1e-10"))
    }
}

fn bq_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..20u64 {
        let n = rng.random_range(2..=48usize);
        let d = rng.random_range(1..=2usize);
        let alpha = rng.random_range(1..=3u32);
        let emb = korobov_embedding(alpha, d);
        let points = sample_iid_uniform(n, d, 200 + case).unwrap();
        let gram = gram_matrix(emb.kernel(), &points, Execution::default());
        let kmean = DVector::from_element(n, 1.0);
        let exact = bq_weights_exact(&gram, &kmean).map_err(|e| e.to_string())?;
        let constrained =
            bq_weights_constrained(&gram, &kmean, 4.0 / n as f64).map_err(|e| e.to_string())?;
        let wce = |w: Vec<f64>| -> Result<f64, String> {
            let rule = QuadratureRule::new(points.clone(), w).map_err(|e| e.to_string())?;
            Ok(wce_eval(&emb, &rule).map_err(|e| e.to_string())?.e)
        };
        let e_uniform = wce(vec![1.0 / n as f64; n])?;
        let e_exact = wce(exact.weights.to_vec())?;
        let e_constrained = wce(constrained.weights.to_vec())?;
        if e_exact > e_uniform + 1e-12 {
            return Err(format!(
                "case {case}: bq {e_exact:e} > uniform {e_uniform:e}"
            ));
        }
        if e_constrained < e_exact - 1e-12 {
            return Err(format!(
                "case {case}: constrained {e_constrained:e} < exact {e_exact:e}"
            ));
        }
    }
    Ok("20 point sets".into())
}

fn shift_unbiased() -> Outcome {
    let lattice = rank1_lattice(&GeneratorVector::new(13, vec![1]).unwrap());
    let k1 = KorobovKernel::new(1, 1).unwrap();
    let shifts = 10_000u64;
    let estimates: Vec<f64> = (0..shifts)
        .map(|seed| {
            let shifted = random_shift(&lattice, seed);
            QuadratureRule::uniform(shifted).apply(|x| k1.eval(x, &[0.3]))
        })
        .collect();
    let m = shifts as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (var / m).sqrt();
    let z = (mean - 1.0) / se;
    let msg = format!("mean {mean:.6}, standard error {se:.2e}, z = {z:.2}");
    if z.abs() <= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn config(
    method: Method,
    alpha: u32,
    s: u32,
    reps: u32,
    integrand: IntegrandFamily,
) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(method, alpha, s, 1);
    c.replicates = reps;
    c.integrand = integrand;
    c
}

fn fitted_slope(c: &ExperimentConfig) -> Result<f64, String> {
    let run = run_convergence(c).map_err(|e| e.to_string())?;
    run.check_failure_rate().map_err(|e| e.to_string())?;
    Ok(aggregate_and_fit(&run.records, c.n_min_fit)
        .map_err(|e| e.to_string())?
        .slope)
}

fn well_specified_config() -> ExperimentConfig {
    config(Method::LatticeShift, 2, 2, 20, IntegrandFamily::Section)
}

fn lattice_well_specified() -> Outcome {
    let slope = fitted_slope(&well_specified_config())?;
    let msg = format!("slope {slope:.3}");
    if slope <= -1.5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn misspecified_bands(method: Method, reps: u32) -> Outcome {
    let s1 = fitted_slope(&config(method, 3, 1, reps, IntegrandFamily::Fourier))?;
    let s2 = fitted_slope(&config(method, 3, 2, reps, IntegrandFamily::Fourier))?;
    let ok = (-1.6..=-0.6).contains(&s1) && (-2.6..=-1.4).contains(&s2) && s1 > s2;
    let msg = format!("slope(s=1) {s1:.3}, slope(s=2) {s2:.3}");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn monte_carlo() -> Outcome {
    let slope = fitted_slope(&config(Method::Mc, 3, 1, 50, IntegrandFamily::Fourier))?;
    let msg = format!("slope {slope:.3}");
    if (-0.8..=-0.2).contains(&slope) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rate_arithmetic() -> Outcome {
    let mut checked = 0;
    for b in [0.5, 1.0, 2.0, 3.0, 1.5] {
        for c in [0.1, 0.25, 0.5] {
            if predicted_rate(b, c, 1.0) != b {
                return Err(format!("theta=1: b={b} c={c}"));
            }
            checked += 1;
        }
        for theta in [0.25, 0.5, 1.0 / 3.0, 2.0 / 3.0, 1.0] {
            if predicted_rate(b, 0.5, theta) != theta * b {
                return Err(format!("c=1/2: b={b} theta={theta}"));
            }
            checked += 1;
        }
    }
    for d in 1..=2u32 {
        for r in 1..=4u32 {
            for s in 1..=r {
                let got = predicted_rate_sobolev(f64::from(r) / f64::from(d), 0.5, s, r)
                    .map_err(|e| e.to_string())?;
                let want = f64::from(s) / f64::from(d);
                if got != want {
                    return Err(format!("sobolev: r={r} d={d} s={s}: {got} != {want}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} identities"))
}

fn grid_property() -> Outcome {
    let mut c = config(Method::GridBq, 3, 2, 1, IntegrandFamily::Fourier);
    c.j_min = 3;
    c.j_max = 6;
    // Domain centre; the Matérn section is not periodic, so the anchor matters.
    c.anchor = 0.5;
    let run = run_convergence(&c).map_err(|e| e.to_string())?;
    if !run.failures.is_empty() {
        return Err(format!("{} failed cells", run.failures.len()));
    }
    let recs = &run.records;
    let ms: Vec<usize> = recs.iter().map(|r| r.n).collect();
    if ms != [8, 16, 32, 64] {
        return Err(format!("unexpected sizes {ms:?}"));
    }
    for m in &ms {
        let q = separation_radius(&regular_grid(*m, 1).unwrap()).unwrap();
        if q != 1.0 / *m as f64 {
            return Err(format!("m={m}: separation radius {q} != 1/m"));
        }
    }
    let decreasing =
        |f: fn(&ConvergenceRecord) -> f64| recs.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    if !decreasing(|r| r.wce) {
        return Err(format!(
            "wce not decreasing: {:?}",
            recs.iter().map(|r| r.wce).collect::<Vec<_>>()
        ));
    }
    if !decreasing(|r| r.abs_error) {
        return Err(format!(
            "abs_error not decreasing: {:?}",
            recs.iter().map(|r| r.abs_error).collect::<Vec<_>>()
        ));
    }
    Ok(format!(
        "anchor 0.5, wce {:.2e} -> {:.2e}, abs_error {:.2e} -> {:.2e}",
        recs[0].wce, recs[3].wce, recs[0].abs_error, recs[3].abs_error
    ))
}

fn determinism() -> Outcome {
    let csv = || -> Result<Vec<u8>, String> {
        let run = run_convergence(&well_specified_config()).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_table(&run.records, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (csv()?, csv()?);
    if a == b {
        Ok(format!("{} bytes identical", a.len()))
    } else {
        Err("CSV differs between runs".into())
    }
}

fn main() -> ExitCode {
    let criteria: [Check; 12] = [
        ("Mercer series within tail bound", mercer_vs_closed_form),
        ("power identity", power_identity),
        ("wce matches brute force", wce_oracle),
        ("bq optimality", bq_optimality),
        ("random shift unbiased", shift_unbiased),
        ("well-specified lattice rate", lattice_well_specified),
        ("bq-exact misspecification bands", || {
            misspecified_bands(Method::BqExact, 10)
        }),
        ("lattice misspecification bands", || {
            misspecified_bands(Method::LatticeShift, 20)
        }),
        ("Monte Carlo baseline", monte_carlo),
        ("rate arithmetic", rate_arithmetic),
        ("grid-bq Matérn properties", grid_property),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:2} {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
