use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Predictor distribution of a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// N(0, Σ) truncated to [−2, 2]^p.
    Normal,
    /// Gaussian copula with exponential(1) marginals truncated at 4, shifted by −2.
    CopulaExponential,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Normal => "normal",
            Case::CopulaExponential => "copula-exponential",
        })
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "normal" => Ok(Case::Normal),
            "2" | "copula-exponential" | "copula" => Ok(Case::CopulaExponential),
            other => Err(Error::InvalidArgument(format!("unknown case `{other}` (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimScenario {
    pub case: Case,
    pub n_total: usize,
    pub p: usize,
    /// Common off-diagonal correlation of the latent normal vector.
    pub rho: f64,
    pub noise_var: f64,
    pub misspecify: bool,
    pub seed: u64,
}

impl SimScenario {
    /// p = 3, ρ = 0.3, noise variance 0.25, no interaction term, seed 0.
    pub fn new(case: Case, n_total: usize) -> Self {
        Self {
            case,
            n_total,
            p: 3,
            rho: 0.3,
            noise_var: 0.25,
            misspecify: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 || self.p == 0 {
            return Err(Error::InvalidArgument("scenario needs N ≥ 1 and p ≥ 1".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("correlation must satisfy |rho| < 1, got {}", self.rho)));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }

    /// Short label such as `case1` or `case2-misspecified`.
    pub fn label(&self) -> String {
        let base = match self.case {
            Case::Normal => "case1",
            Case::CopulaExponential => "case2",
        };
        if self.misspecify {
            format!("{base}-misspecified")
        } else {
            base.to_string()
        }
    }
}

/// Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Quantile of exponential(1) truncated to [0, 4], evaluated at 1 − `upper`.
///
/// −ln(1 − u·(1 − e⁻⁴)) rewritten as −ln(e⁻⁴ + (1 − e⁻⁴)·upper) to keep the
/// upper tail accurate.
fn truncated_exp_quantile(upper: f64) -> f64 {
    let e4 = (-4.0f64).exp();
    (-(e4 + (1.0 - e4) * upper).ln()).clamp(0.0, 4.0)
}

fn cholesky(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
    sigma
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidArgument(format!("correlation {rho} is not positive definite for p={p}")))
}

fn latent(l: &DMatrix<f64>, rng: &mut SeededRng, out: &mut [f64]) {
    let p = out.len();
    let w: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
    for i in 0..p {
        out[i] = (0..=i).map(|k| l[(i, k)] * w[k]).sum();
    }
}

/// Row-major N×p predictors for the scenario's case.
///
/// Normal rows are redrawn whole until every coordinate lies in [−2, 2].
/// Copula rows map each latent coordinate through Φ and the exponential(1)
/// quantile truncated at 4, so every marginal is exactly the truncated law.
pub fn gen_predictors(s: &SimScenario, rng: &mut SeededRng) -> Result<Vec<f64>> {
    s.validate()?;
    let l = cholesky(s.p, s.rho)?;
    let mut out = Vec::with_capacity(s.n_total * s.p);
    let mut z = vec![0.0; s.p];
    while out.len() < s.n_total * s.p {
        latent(&l, rng, &mut z);
        match s.case {
            Case::Normal => {
                if z.iter().all(|v| v.abs() <= 2.0) {
                    out.extend_from_slice(&z);
                }
            }
            Case::CopulaExponential => {
                out.extend(z.iter().map(|&v| truncated_exp_quantile(normal_cdf(-v)) - 2.0));
            }
        }
    }
    Ok(out)
}

/// 1 + 8/(4 + x₁) + exp(3 − x₂²)/4 + 1.5·sin(π·x₃/2), plus 2·ln(4.5 + x₁x₂)
/// when `misspecify`.
pub fn regression_function(x: &[f64], misspecify: bool) -> f64 {
    let base = 1.0 + 8.0 / (4.0 + x[0]) + (3.0 - x[1] * x[1]).exp() / 4.0 + 1.5 * (PI * x[2] / 2.0).sin();
    if misspecify {
        base + 2.0 * (4.5 + x[0] * x[1]).ln()
    } else {
        base
    }
}

/// Responses m(x) + ε with ε ~ N(0, noise_var); three predictors required.
pub fn gen_response(
    x: &[f64],
    p: usize,
    misspecify: bool,
    noise_var: f64,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if p != 3 {
        return Err(Error::InvalidArgument(format!(
            "the simulation response needs exactly 3 predictors, got {p}"
        )));
    }
    let noise = Normal::new(0.0, noise_var.sqrt())
        .map_err(|e| Error::InvalidArgument(format!("noise variance {noise_var}: {e}")))?;
    Ok(x.chunks_exact(3)
        .map(|row| regression_function(row, misspecify) + noise.sample(rng))
        .collect())
}

fn assemble(s: &SimScenario, x: Vec<f64>, rng: &mut SeededRng) -> Result<Dataset> {
    let y = gen_response(&x, s.p, s.misspecify, s.noise_var, rng)?;
    let names = (1..=s.p).map(|j| format!("x{j}")).collect();
    Dataset::new(x, y, names, "y")
}

pub fn gen_case1(s: &SimScenario, rng: &mut SeededRng) -> Result<Dataset> {
    if s.case != Case::Normal {
        return Err(Error::InvalidArgument("gen_case1 needs the normal case".into()));
    }
    let x = gen_predictors(s, rng)?;
    assemble(s, x, rng)
}

pub fn gen_case2(s: &SimScenario, rng: &mut SeededRng) -> Result<Dataset> {
    if s.case != Case::CopulaExponential {
        return Err(Error::InvalidArgument("gen_case2 needs the copula-exponential case".into()));
    }
    let x = gen_predictors(s, rng)?;
    assemble(s, x, rng)
}

/// Dispatches on the scenario's case.
pub fn generate(s: &SimScenario, rng: &mut SeededRng) -> Result<Dataset> {
    match s.case {
        Case::Normal => gen_case1(s, rng),
        Case::CopulaExponential => gen_case2(s, rng),
    }
}
