use super::kernel::{check_bandwidth, Kernel};
use super::matrix::SINGULARITY_EPS;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 2048;

/// Linearly binned local-linear smoother.
///
/// Data mass is split between the two nearest nodes of an equispaced grid;
/// the local-linear fit is computed at every node by a fixed-kernel
/// convolution and interpolated back to the points. Cost per application is
/// O(n + bins·h/step) instead of O(n·window).
#[derive(Debug, Clone)]
pub struct BinnedSmoother {
    n: usize,
    h: f64,
    column: usize,
    kernel: Kernel,
    lo: f64,
    step: f64,
    node: Vec<usize>,
    frac: Vec<f64>,
    k0: Vec<f64>,
    k1: Vec<f64>,
    s: Vec<[f64; 3]>,
    valid: Vec<bool>,
}

impl BinnedSmoother {
    pub fn new(column: usize, values: &[f64], h: f64, kernel: Kernel, bins: usize) -> Result<Self> {
        check_bandwidth(h)?;
        let n = values.len();
        if n == 0 || bins < 2 {
            return Err(Error::InvalidArgument(
                "binned smoother needs data and at least two bins".into(),
            ));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::SingularSmoother {
                column,
                point: 0,
                x: lo,
                bandwidth: h,
            });
        }
        let step = (hi - lo) / (bins - 1) as f64;
        let (node, frac): (Vec<usize>, Vec<f64>) =
            values.iter().map(|&x| locate(lo, step, bins, x)).unzip();
        let half = (h / step).floor() as usize;
        let (k0, k1): (Vec<f64>, Vec<f64>) = (0..=2 * half)
            .map(|k| {
                let d = (k as f64 - half as f64) * step;
                let w = kernel.eval(d / h);
                (w, w * d)
            })
            .unzip();
        let mut counts = vec![0.0; bins];
        for (&l, &f) in node.iter().zip(&frac) {
            counts[l] += 1.0 - f;
            counts[l + 1] += f;
        }
        let s: Vec<[f64; 3]> = (0..bins)
            .map(|g| {
                let mut m = [0.0; 3];
                for_window(g, half, bins, |k, t| {
                    let d = (k as f64 - half as f64) * step;
                    m[0] += k0[k] * counts[t];
                    m[1] += k1[k] * counts[t];
                    m[2] += k1[k] * d * counts[t];
                });
                m
            })
            .collect();
        let scale = n as f64 * h;
        let valid: Vec<bool> = s
            .iter()
            .map(|m| (m[0] * m[2] - m[1] * m[1]) / (scale * scale) > SINGULARITY_EPS)
            .collect();
        for (point, (&l, &f)) in node.iter().zip(&frac).enumerate() {
            let bad = if !valid[l] && f < 1.0 {
                Some(l)
            } else if !valid[l + 1] && f > 0.0 {
                Some(l + 1)
            } else {
                None
            };
            if let Some(g) = bad {
                return Err(Error::SingularSmoother {
                    column,
                    point,
                    x: lo + g as f64 * step,
                    bandwidth: h,
                });
            }
        }
        Ok(Self {
            n,
            h,
            column,
            kernel,
            lo,
            step,
            node,
            frac,
            k0,
            k1,
            s,
            valid,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn column(&self) -> usize {
        self.column
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bins(&self) -> usize {
        self.s.len()
    }

    pub fn node_x(&self, g: usize) -> f64 {
        self.lo + g as f64 * self.step
    }

    /// Local-linear fit of `v` at every grid node (`None` where singular).
    pub fn grid_fit(&self, v: &[f64]) -> Vec<Option<f64>> {
        assert_eq!(v.len(), self.n, "vector length must match smoother size");
        let bins = self.s.len();
        let half = (self.k0.len() - 1) / 2;
        let mut sums = vec![0.0; bins];
        for ((&l, &f), &y) in self.node.iter().zip(&self.frac).zip(v) {
            sums[l] += (1.0 - f) * y;
            sums[l + 1] += f * y;
        }
        (0..bins)
            .map(|g| {
                if !self.valid[g] {
                    return None;
                }
                let (mut t0, mut t1) = (0.0, 0.0);
                for_window(g, half, bins, |k, t| {
                    t0 += self.k0[k] * sums[t];
                    t1 += self.k1[k] * sums[t];
                });
                let [s0, s1, s2] = self.s[g];
                Some((s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1))
            })
            .collect()
    }

    /// Approximate S·v at the data points.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let grid = self.grid_fit(v);
        self.node
            .iter()
            .zip(&self.frac)
            .map(|(&l, &f)| interpolate(&grid, l, f).unwrap_or(0.0))
            .collect()
    }

    /// Left node and interpolation fraction for `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        locate(self.lo, self.step, self.s.len(), x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

pub(crate) fn locate(lo: f64, step: f64, bins: usize, x: f64) -> (usize, f64) {
    let u = (x - lo) / step;
    let l = (u.floor().max(0.0) as usize).min(bins - 2);
    (l, (u - l as f64).clamp(0.0, 1.0))
}

/// Linear interpolation between nodes l and l+1; `None` if a needed node is missing.
pub(crate) fn interpolate(grid: &[Option<f64>], l: usize, f: f64) -> Option<f64> {
    let a = if f < 1.0 { grid[l]? } else { 0.0 };
    let b = if f > 0.0 { grid[l + 1]? } else { 0.0 };
    Some((1.0 - f) * a + f * b)
}

#[inline]
fn for_window(g: usize, half: usize, bins: usize, mut f: impl FnMut(usize, usize)) {
    let first = g.saturating_sub(half);
    let last = (g + half).min(bins - 1);
    for t in first..=last {
        f(t + half - g, t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::smooth::smoother_matrix;
    use rand::Rng;

    #[test]
    fn reproduces_lines_and_tracks_exact_smoother() {
        let mut rng = SeededRng::new(4, 0);
        let x: Vec<f64> = (0..3000).map(|_| rng.random()).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v).sin()).collect();
        let b = BinnedSmoother::new(0, &x, 0.1, Kernel::Epanechnikov, 1024).unwrap();
        let lin = b.apply(&x);
        let lin_err = lin.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(lin_err < 1e-5, "linear reproduction error {lin_err}");
        let ones = b.apply(&vec![1.0; 3000]);
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let exact = smoother_matrix(&x, 0.1, Kernel::Epanechnikov).unwrap().apply(&y);
        let approx = b.apply(&y);
        let err = exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "binned error {err}");
    }

    #[test]
    fn constant_column_is_singular() {
        assert!(matches!(
            BinnedSmoother::new(1, &[0.5; 10], 0.2, Kernel::Epanechnikov, 64),
            Err(Error::SingularSmoother { column: 1, .. })
        ));
    }
}
