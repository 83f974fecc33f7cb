use serde::Serialize;

use crate::backfit::AdditiveFit;
use crate::data::{Dataset, ScaledView};
use crate::error::{Error, Result};

/// Tensor-product evaluation grid, kept in both scaled and original units.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub scaled: Vec<Vec<f64>>,
    pub original: Vec<Vec<f64>>,
}

/// `k` evenly spaced points from `lo` to `hi` inclusive.
pub fn axis_points(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![(lo + hi) / 2.0],
        _ => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    }
}

impl TensorGrid {
    /// [lo, hi]^p in original units, mapped through the view's scaling.
    /// Fails if any node falls outside the data's range.
    pub fn from_original(view: &ScaledView<'_>, lo: f64, hi: f64, per_axis: usize) -> Result<Self> {
        let grid = Self::from_original_lenient(view, lo, hi, per_axis);
        for (column, axis) in grid.scaled.iter().enumerate() {
            if let Some(&value) = axis.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::GridOutsideDomain { column, value });
            }
        }
        Ok(grid)
    }

    /// As [`TensorGrid::from_original`], keeping nodes beyond the data's range.
    pub fn from_original_lenient(view: &ScaledView<'_>, lo: f64, hi: f64, per_axis: usize) -> Self {
        let axis = axis_points(lo, hi, per_axis);
        let scaled = (0..view.n_cols())
            .map(|j| axis.iter().map(|&v| view.scale(j, v)).collect())
            .collect();
        Self {
            scaled,
            original: vec![axis; view.n_cols()],
        }
    }

    /// Whether every node lies inside the scaled unit cube.
    pub fn inside_unit_cube(&self) -> bool {
        self.scaled.iter().flatten().all(|v| (0.0..=1.0).contains(v))
    }

    /// [0, 1]^p in scaled units, spanning the full data's range.
    pub fn unit(view: &ScaledView<'_>, per_axis: usize) -> Self {
        let axis = axis_points(0.0, 1.0, per_axis);
        let original = (0..view.n_cols())
            .map(|j| axis.iter().map(|&v| view.unscale(j, v)).collect())
            .collect();
        Self {
            scaled: vec![axis; view.n_cols()],
            original,
        }
    }

    pub fn p(&self) -> usize {
        self.scaled.len()
    }

    pub fn len(&self) -> usize {
        self.scaled.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(index tuple)` for every grid node in odometer order.
    fn for_each(&self, mut f: impl FnMut(&[usize])) {
        let p = self.p();
        if self.is_empty() {
            return;
        }
        let mut idx = vec![0usize; p];
        loop {
            f(&idx);
            let mut j = p;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < self.scaled[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

fn component_tables(fit: &AdditiveFit, grid: &TensorGrid) -> Vec<Vec<f64>> {
    grid.scaled
        .iter()
        .enumerate()
        .map(|(j, axis)| axis.iter().map(|&x| fit.component_at(j, x)).collect())
        .collect()
}

/// (MEE, ASE) of `fit` against `truth(original point)` over the grid.
pub fn metric_mee_ase(fit: &AdditiveFit, truth: impl Fn(&[f64]) -> f64, grid: &TensorGrid) -> (f64, f64) {
    let tables = component_tables(fit, grid);
    let mut point = vec![0.0; grid.p()];
    let (mut max, mut sum) = (0.0f64, 0.0);
    grid.for_each(|idx| {
        let mut fitted = fit.mu_hat;
        for (j, &k) in idx.iter().enumerate() {
            fitted += tables[j][k];
            point[j] = grid.original[j][k];
        }
        let e = fitted - truth(&point);
        max = max.max(e.abs());
        sum += e * e;
    });
    (max, sum / grid.len() as f64)
}

/// (MEE, ASE) of one additive fit against another used as the reference.
pub fn metric_mee_ase_fits(fit: &AdditiveFit, reference: &AdditiveFit, grid: &TensorGrid) -> (f64, f64) {
    let a = component_tables(fit, grid);
    let b = component_tables(reference, grid);
    let (mut max, mut sum) = (0.0f64, 0.0);
    grid.for_each(|idx| {
        let mut e = fit.mu_hat - reference.mu_hat;
        for (j, &k) in idx.iter().enumerate() {
            e += a[j][k] - b[j][k];
        }
        max = max.max(e.abs());
        sum += e * e;
    });
    (max, sum / grid.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDeviation {
    pub a: usize,
    pub b: usize,
    pub deviation: f64,
}

/// Smallest i in 0..=g with x ≤ i/g, or g+1 when x > 1.
fn cdf_bin(x: f64, g: usize) -> usize {
    let node = |i: usize| i as f64 / g as f64;
    if x > 1.0 {
        return g + 1;
    }
    let mut i = ((x * g as f64).ceil().max(0.0) as usize).min(g);
    while i > 0 && x <= node(i - 1) {
        i -= 1;
    }
    while i <= g && x > node(i) {
        i += 1;
    }
    i
}

/// For each column pair, sup over the {i/g}² grid of |F_n(u, v) − u·v|.
pub fn metric_cdf_deviation(points: &[f64], p: usize, g: usize) -> Result<Vec<PairDeviation>> {
    if g < 2 {
        return Err(Error::InvalidArgument(format!("cdf grid resolution must be at least 2, got {g}")));
    }
    if p == 0 || points.len() % p != 0 || points.is_empty() {
        return Err(Error::InvalidArgument("cdf deviation needs a non-empty n×p point set".into()));
    }
    let n = points.len() / p;
    let bins: Vec<usize> = points.iter().map(|&x| cdf_bin(x, g)).collect();
    let side = g + 2;
    let mut out = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            let mut cum = vec![0u64; side * side];
            for i in 0..n {
                cum[bins[i * p + a] * side + bins[i * p + b]] += 1;
            }
            for r in 0..side {
                for c in 0..side {
                    let mut v = cum[r * side + c];
                    if r > 0 {
                        v += cum[(r - 1) * side + c];
                    }
                    if c > 0 {
                        v += cum[r * side + c - 1];
                    }
                    if r > 0 && c > 0 {
                        v -= cum[(r - 1) * side + c - 1];
                    }
                    cum[r * side + c] = v;
                }
            }
            let mut dev = 0.0f64;
            for i in 0..=g {
                for j in 0..=g {
                    let f = cum[i * side + j] as f64 / n as f64;
                    let u = (i as f64 / g as f64) * (j as f64 / g as f64);
                    dev = dev.max((f - u).abs());
                }
            }
            out.push(PairDeviation { a, b, deviation: dev });
        }
    }
    Ok(out)
}

/// Largest |Pearson correlation| over column pairs (0 when p < 2 or a column is constant).
pub fn max_abs_correlation(points: &[f64], p: usize) -> f64 {
    if p < 2 || points.len() < 2 * p {
        return 0.0;
    }
    let n = points.len() / p;
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| points[i * p + j]).sum::<f64>() / n as f64)
        .collect();
    let mut best = 0.0f64;
    for a in 0..p {
        for b in a + 1..p {
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let da = points[i * p + a] - means[a];
                let db = points[i * p + b] - means[b];
                sab += da * db;
                saa += da * da;
                sbb += db * db;
            }
            if saa > 0.0 && sbb > 0.0 {
                best = best.max((sab / (saa * sbb).sqrt()).abs());
            }
        }
    }
    best
}

/// (mean squared error, max absolute error) of predictions over scaled rows.
pub fn prediction_errors(fit: &AdditiveFit, scaled: &Dataset) -> (f64, f64) {
    let (mut sum, mut max) = (0.0, 0.0f64);
    for i in 0..scaled.n_rows() {
        let e = scaled.response()[i] - fit.predict(scaled.row(i));
        sum += e * e;
        max = max.max(e.abs());
    }
    (sum / scaled.n_rows() as f64, max)
}
