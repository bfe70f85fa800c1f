use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::{frac, Kernel, KorobovKernel, MaternKernel};
use crate::wce::numeric_kernel_mean_checked;

#[derive(Debug, Clone)]
enum Form {
    KorobovSection(KorobovKernel),
    /// Per-coordinate `1 + Σ_i a_i cos(2π i (x - y))`.
    Cosine(Vec<f64>),
    MaternSection(MaternKernel),
    Constant,
}

/// Test function with a known integral over `[0,1]^d` and a smoothness label.
#[derive(Debug, Clone)]
pub struct Integrand {
    dim: usize,
    smoothness_s: u32,
    anchor: Vec<f64>,
    true_integral: f64,
    form: Form,
}

impl Integrand {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness_s(&self) -> u32 {
        self.smoothness_s
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn true_integral(&self) -> f64 {
        self.true_integral
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.form {
            Form::KorobovSection(k) => k.eval(x, &self.anchor),
            Form::Cosine(coeffs) => x
                .iter()
                .zip(&self.anchor)
                .map(|(&xj, &yj)| cosine_sum(coeffs, frac(xj - yj)))
                .product(),
            Form::MaternSection(k) => k.eval(x, &self.anchor),
            Form::Constant => 1.0,
        }
    }

    /// Norm of a Korobov kernel section in its own space, `sqrt(k_s(y, y))`.
    pub fn section_norm(&self) -> Option<f64> {
        match &self.form {
            Form::KorobovSection(k) => Some(k.diagonal().sqrt()),
            _ => None,
        }
    }
}

// 1 + Σ_{i≥1} a_i cos(2π i t), with e^{2πit} advanced by complex rotation and
// re-seeded from sin/cos every 64 terms.
fn cosine_sum(coeffs: &[f64], t: f64) -> f64 {
    let (s1, c1) = (2.0 * PI * t).sin_cos();
    let mut sum = 0.0;
    let (mut re, mut im) = (c1, s1);
    for (k, a) in coeffs.iter().enumerate() {
        let i = k + 1;
        if i % 64 == 0 {
            let (s, c) = (2.0 * PI * frac(i as f64 * t)).sin_cos();
            re = c;
            im = s;
        }
        sum += a * re;
        let next_re = re * c1 - im * s1;
        im = re * s1 + im * c1;
        re = next_re;
    }
    1.0 + sum
}

fn check_anchor(d: usize, anchor: &[f64]) -> Result<()> {
    if anchor.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: anchor.len(),
        });
    }
    if anchor.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidArgument("anchor must lie in [0,1]^d".into()));
    }
    Ok(())
}

/// Korobov kernel section `x ↦ Π_j k_s(x_j, y_j)`, with integral one.
pub fn make_integrand(s: u32, d: usize, anchor: &[f64]) -> Result<Integrand> {
    check_anchor(d, anchor)?;
    Ok(Integrand {
        dim: d,
        smoothness_s: s,
        anchor: anchor.to_vec(),
        true_integral: 1.0,
        form: Form::KorobovSection(KorobovKernel::new(s, d)?),
    })
}

/// Periodic integrand with Fourier coefficients `i^-(s + 1/2)` per coordinate,
/// truncated after `truncation` frequencies: it lies in every Korobov space
/// of order below `s` and in none of order `s` or above (up to truncation).
/// Integral one.
pub fn make_fourier_integrand(
    s: u32,
    d: usize,
    anchor: &[f64],
    truncation: usize,
) -> Result<Integrand> {
    check_anchor(d, anchor)?;
    if s == 0 || truncation == 0 {
        return Err(Error::InvalidArgument(
            "smoothness and truncation must be positive".into(),
        ));
    }
    let exponent = f64::from(s) + 0.5;
    let coeffs = (1..=truncation)
        .map(|i| 2.0 * (i as f64).powf(-exponent))
        .collect();
    Ok(Integrand {
        dim: d,
        smoothness_s: s,
        anchor: anchor.to_vec(),
        true_integral: 1.0,
        form: Form::Cosine(coeffs),
    })
}

/// Matérn kernel section for the Sobolev order `s` (ν = s − d/2); its integral
/// comes from the reference quadrature at `resolution`.
pub fn make_matern_integrand(
    s: u32,
    d: usize,
    anchor: &[f64],
    resolution: usize,
) -> Result<Integrand> {
    check_anchor(d, anchor)?;
    let kernel = MaternKernel::with_order(s, d)?;
    let true_integral = numeric_kernel_mean_checked(&kernel, anchor, resolution)?;
    Ok(Integrand {
        dim: d,
        smoothness_s: s,
        anchor: anchor.to_vec(),
        true_integral,
        form: Form::MaternSection(kernel),
    })
}

/// `f ≡ 1`; any rule whose weights sum to one integrates it exactly.
pub fn constant_integrand(d: usize) -> Integrand {
    Integrand {
        dim: d,
        smoothness_s: 1,
        anchor: vec![0.0; d],
        true_integral: 1.0,
        form: Form::Constant,
    }
}
