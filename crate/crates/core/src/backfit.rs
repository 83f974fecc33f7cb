//! Additive-model fitting by backfitting local-linear smoothers.
//!
//! The model is y = μ + Σⱼ mⱼ(xⱼ) + ε with every mⱼ centered over the fitted
//! points. Gauss–Seidel sweeps update one component at a time from the partial
//! residuals of the others. For two predictors the fixed point is also
//! available as the solution of a single linear system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::smooth::{
    center, dot, interpolate, local_weights, locate, smoother_matrix_for, BinnedSmoother, Kernel,
    SmootherMatrix, DEFAULT_BINS,
};

/// Smoother implementation used for each component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Backend {
    Exact,
    Binned { bins: usize },
    /// Exact up to `threshold` points, binned beyond.
    Auto { threshold: usize, bins: usize },
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Auto {
            threshold: 20_000,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Stop when the largest absolute change of any component value is below this.
    pub tol: f64,
    pub kernel: Kernel,
    pub backend: Backend,
    /// Component update order within a sweep; `None` means 0..p.
    pub sweep_order: Option<Vec<usize>>,
    /// Compute ‖Sᵢ*Sⱼ*‖∞ for every pair (dense, exact backend only).
    pub diagnostics: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            kernel: Kernel::Epanechnikov,
            backend: Backend::default(),
            sweep_order: None,
            diagnostics: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max iterations must be at least 1".into()));
        }
        if let Some(order) = &self.sweep_order {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..p).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument(format!(
                    "sweep order {order:?} is not a permutation of 0..{p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairNorm {
    pub a: usize,
    pub b: usize,
    pub norm: f64,
}

/// Evaluates one fitted component anywhere on the real line.
#[derive(Debug, Clone)]
struct ComponentEval {
    /// Fitted points of this column, ascending, with their component values.
    knots: Vec<f64>,
    knot_values: Vec<f64>,
    curve: Curve,
}

#[derive(Debug, Clone)]
enum Curve {
    Local {
        sorted_r: Vec<f64>,
        h: f64,
        kernel: Kernel,
        offset: f64,
    },
    Grid {
        lo: f64,
        step: f64,
        values: Vec<Option<f64>>,
        offset: f64,
    },
}

impl ComponentEval {
    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x < self.knots[0] {
            return self.knot_values[0];
        }
        if x > self.knots[n - 1] {
            return self.knot_values[n - 1];
        }
        let inner = match &self.curve {
            Curve::Local {
                sorted_r,
                h,
                kernel,
                offset,
            } => local_weights(&self.knots, x, *h, *kernel, n)
                .map(|(start, w)| dot(&w, &sorted_r[start..]) - offset),
            Curve::Grid {
                lo,
                step,
                values,
                offset,
            } => {
                let (l, f) = locate(*lo, *step, values.len(), x);
                interpolate(values, l, f).map(|v| v - offset)
            }
        };
        inner.unwrap_or_else(|| self.nearest(x))
    }

    fn nearest(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&v| v < x);
        let pick = if k == 0 {
            0
        } else if k == self.knots.len() || x - self.knots[k - 1] <= self.knots[k] - x {
            k - 1
        } else {
            k
        };
        self.knot_values[pick]
    }
}

/// Fitted additive model.
#[derive(Debug, Clone)]
pub struct AdditiveFit {
    pub mu_hat: f64,
    /// mⱼ at the fitted points, one vector per predictor.
    pub components: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_update: f64,
    pub pair_norms: Option<Vec<PairNorm>>,
    evals: Vec<ComponentEval>,
}

/// Serializable digest of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub n: usize,
    pub p: usize,
    pub mu_hat: f64,
    pub bandwidths: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_update: f64,
    pub pair_norms: Option<Vec<PairNorm>>,
}

impl AdditiveFit {
    pub fn n(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    /// mⱼ(x): local-linear re-smoothing inside the fitted range, value at the
    /// nearest fitted point outside it or where the local design is singular.
    pub fn component_at(&self, j: usize, x: f64) -> f64 {
        self.evals[j].eval(x)
    }

    /// μ̂ + Σⱼ mⱼ(x_new[j]).
    pub fn predict(&self, x_new: &[f64]) -> f64 {
        assert_eq!(x_new.len(), self.p(), "prediction point has wrong dimension");
        self.mu_hat
            + x_new
                .iter()
                .enumerate()
                .map(|(j, &x)| self.component_at(j, x))
                .sum::<f64>()
    }

    /// μ̂ + Σⱼ mⱼ at the fitted points.
    pub fn fitted(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.mu_hat + self.components.iter().map(|m| m[i]).sum::<f64>())
            .collect()
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            n: self.n(),
            p: self.p(),
            mu_hat: self.mu_hat,
            bandwidths: self.bandwidths.clone(),
            iterations: self.iterations,
            converged: self.converged,
            max_update: self.max_update,
            pair_norms: self.pair_norms.clone(),
        }
    }
}

/// Free-function form of [`AdditiveFit::predict`].
pub fn predict(fit: &AdditiveFit, x_new: &[f64]) -> f64 {
    fit.predict(x_new)
}

enum Smoother {
    Exact(SmootherMatrix),
    Binned(BinnedSmoother),
}

impl Smoother {
    fn build(column: usize, x: &[f64], h: f64, cfg: &FitConfig) -> Result<Self> {
        let binned = match cfg.backend {
            Backend::Exact => None,
            Backend::Binned { bins } => Some(bins),
            Backend::Auto { threshold, bins } => (x.len() > threshold).then_some(bins),
        };
        Ok(match binned {
            None => Smoother::Exact(smoother_matrix_for(column, x, h, cfg.kernel)?),
            Some(bins) => Smoother::Binned(BinnedSmoother::new(column, x, h, cfg.kernel, bins)?),
        })
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Smoother::Exact(s) => s.apply(v),
            Smoother::Binned(b) => b.apply(v),
        }
    }

    fn evaluator(&self, x: &[f64], r: &[f64], offset: f64, m: &[f64]) -> ComponentEval {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let knots: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let knot_values: Vec<f64> = order.iter().map(|&i| m[i]).collect();
        let curve = match self {
            Smoother::Exact(s) => Curve::Local {
                sorted_r: s.gather(r),
                h: s.bandwidth(),
                kernel: s.kernel(),
                offset,
            },
            Smoother::Binned(b) => Curve::Grid {
                lo: b.lo(),
                step: b.step(),
                values: b.grid_fit(r),
                offset,
            },
        };
        ComponentEval {
            knots,
            knot_values,
            curve,
        }
    }
}

fn check_inputs(data: &Dataset, h: &[f64], cfg: &FitConfig) -> Result<()> {
    if h.len() != data.n_cols() {
        return Err(Error::LengthMismatch {
            left: h.len(),
            right: data.n_cols(),
        });
    }
    cfg.validate(data.n_cols())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Backfits an additive model with per-predictor bandwidths `h`.
///
/// Non-convergence within `cfg.max_iter` sweeps is reported through
/// `converged = false`, not as an error.
pub fn backfit(data: &Dataset, h: &[f64], cfg: &FitConfig) -> Result<AdditiveFit> {
    check_inputs(data, h, cfg)?;
    let (n, p) = (data.n_rows(), data.n_cols());
    let columns: Vec<Vec<f64>> = (0..p).map(|j| data.column(j)).collect();
    let smoothers = columns
        .iter()
        .enumerate()
        .map(|(j, x)| Smoother::build(j, x, h[j], cfg))
        .collect::<Result<Vec<_>>>()?;
    let y = data.response();
    let mu_hat = mean(y);
    let order: Vec<usize> = cfg.sweep_order.clone().unwrap_or_else(|| (0..p).collect());

    let mut m = vec![vec![0.0; n]; p];
    let mut total = vec![0.0; n];
    let mut residuals = vec![vec![0.0; n]; p];
    let mut offsets = vec![0.0; p];
    let mut iterations = 0;
    let mut converged = false;
    let mut max_update = f64::INFINITY;
    let sweeps = if p == 1 { 1 } else { cfg.max_iter };
    while iterations < sweeps {
        max_update = 0.0f64;
        for &j in &order {
            let r: Vec<f64> = (0..n).map(|i| y[i] - mu_hat - total[i] + m[j][i]).collect();
            let mut new = smoothers[j].apply(&r);
            let c = mean(&new);
            new.iter_mut().for_each(|v| *v -= c);
            for i in 0..n {
                max_update = max_update.max((new[i] - m[j][i]).abs());
                total[i] += new[i] - m[j][i];
            }
            m[j] = new;
            residuals[j] = r;
            offsets[j] = c;
        }
        iterations += 1;
        if p == 1 || max_update < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("backfitting stopped after {iterations} sweeps with max update {max_update:.3e}");
    }
    let evals = (0..p)
        .map(|j| smoothers[j].evaluator(&columns[j], &residuals[j], offsets[j], &m[j]))
        .collect();
    let pair_norms = if cfg.diagnostics {
        pair_norms(&smoothers)
    } else {
        None
    };
    Ok(AdditiveFit {
        mu_hat,
        components: m,
        bandwidths: h.to_vec(),
        iterations,
        converged,
        max_update,
        pair_norms,
        evals,
    })
}

fn pair_norms(smoothers: &[Smoother]) -> Option<Vec<PairNorm>> {
    let dense: Vec<DMatrix<f64>> = smoothers
        .iter()
        .map(|s| match s {
            Smoother::Exact(s) => Some(center(s).to_dense()),
            Smoother::Binned(_) => None,
        })
        .collect::<Option<_>>()?;
    let mut out = Vec::new();
    for a in 0..dense.len() {
        for b in a + 1..dense.len() {
            out.push(PairNorm {
                a,
                b,
                norm: norm_inf_product(&dense[a], &dense[b]),
            });
        }
    }
    Some(out)
}

/// Maximum absolute row sum of A·B.
pub fn norm_inf_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let prod = a * b;
    prod.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Direct two-component solution:
/// (I − S₁*S₂*)·m₁ = S₁*(I − S₂*)·y and symmetrically for m₂.
pub fn solve_p2(data: &Dataset, h: &[f64], cfg: &FitConfig) -> Result<AdditiveFit> {
    check_inputs(data, h, cfg)?;
    if data.n_cols() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the direct solver handles exactly two predictors, got {}",
            data.n_cols()
        )));
    }
    let n = data.n_rows();
    let columns = [data.column(0), data.column(1)];
    let exact_cfg = FitConfig {
        backend: Backend::Exact,
        ..cfg.clone()
    };
    let smoothers = [
        Smoother::build(0, &columns[0], h[0], &exact_cfg)?,
        Smoother::build(1, &columns[1], h[1], &exact_cfg)?,
    ];
    let dense: Vec<DMatrix<f64>> = smoothers
        .iter()
        .map(|s| match s {
            Smoother::Exact(s) => center(s).to_dense(),
            Smoother::Binned(_) => unreachable!("exact backend requested"),
        })
        .collect();
    let y = DVector::from_column_slice(data.response());
    let eye = DMatrix::<f64>::identity(n, n);
    let solve = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> Result<DVector<f64>> {
        let lhs = &eye - a * b;
        let rhs = a * (&y - b * &y);
        let sol = lhs.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        if sol.iter().all(|v| v.is_finite()) {
            Ok(sol)
        } else {
            Err(Error::SingularSystem)
        }
    };
    let m1 = solve(&dense[0], &dense[1])?;
    let m2 = solve(&dense[1], &dense[0])?;
    let mu_hat = mean(data.response());
    let m = [m1.as_slice().to_vec(), m2.as_slice().to_vec()];
    let mut evals = Vec::with_capacity(2);
    for j in 0..2 {
        let other = &m[1 - j];
        let r: Vec<f64> = (0..n).map(|i| y[i] - mu_hat - other[i]).collect();
        let offset = mean(&smoothers[j].apply(&r));
        evals.push(smoothers[j].evaluator(&columns[j], &r, offset, &m[j]));
    }
    let pair_norms = cfg.diagnostics.then(|| {
        vec![PairNorm {
            a: 0,
            b: 1,
            norm: norm_inf_product(&dense[0], &dense[1]),
        }]
    });
    Ok(AdditiveFit {
        mu_hat,
        components: m.to_vec(),
        bandwidths: h.to_vec(),
        iterations: 0,
        converged: true,
        max_update: 0.0,
        pair_norms,
        evals,
    })
}
