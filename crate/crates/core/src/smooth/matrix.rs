use nalgebra::DMatrix;
use rayon::prelude::*;

use super::kernel::{check_bandwidth, Kernel};
use crate::error::{Error, Result};

/// Guard on the local design determinant V_0·V_2 − V_1².
pub const SINGULARITY_EPS: f64 = 1e-12;

/// Local-linear weights at `x` over ascending `sorted`, normalised by `n_norm`.
///
/// Returns the first window position and one weight per point in
/// `sorted[start..start + len]`, or `None` when the local design is singular.
pub(crate) fn local_weights(
    sorted: &[f64],
    x: f64,
    h: f64,
    kernel: Kernel,
    n_norm: usize,
) -> Option<(usize, Vec<f64>)> {
    let start = sorted.partition_point(|&v| v < x - h);
    let end = sorted.partition_point(|&v| v <= x + h);
    let window = &sorted[start..end];
    let mut k = Vec::with_capacity(window.len());
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &xj in window {
        let d = xj - x;
        let kj = kernel.eval(d / h);
        s0 += kj;
        s1 += kj * d;
        s2 += kj * d * d;
        k.push(kj);
    }
    let det = s0 * s2 - s1 * s1;
    let scale = n_norm as f64 * h;
    if !(det / (scale * scale) > SINGULARITY_EPS) {
        return None;
    }
    let weights = window
        .iter()
        .zip(k)
        .map(|(&xj, kj)| kj * (s2 - (xj - x) * s1) / det)
        .collect();
    Some((start, weights))
}

#[inline]
pub(crate) fn dot(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Local-linear smoother for one predictor over n points.
///
/// Row i is stored as the contiguous run of points within `h` of xᵢ in
/// ascending-x order; every other entry of the row is exactly zero.
#[derive(Debug, Clone)]
pub struct SmootherMatrix {
    n: usize,
    h: f64,
    column: usize,
    kernel: Kernel,
    centered: bool,
    sorted_x: Vec<f64>,
    order: Vec<usize>,
    starts: Vec<usize>,
    offsets: Vec<usize>,
    weights: Vec<f64>,
}

/// Smoother for column 0.
pub fn smoother_matrix(values: &[f64], h: f64, kernel: Kernel) -> Result<SmootherMatrix> {
    smoother_matrix_for(0, values, h, kernel)
}

/// Smoother for predictor `column`; singularities are reported against it.
pub fn smoother_matrix_for(
    column: usize,
    values: &[f64],
    h: f64,
    kernel: Kernel,
) -> Result<SmootherMatrix> {
    check_bandwidth(h)?;
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidArgument("smoother needs at least one point".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite predictor value at point {i}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_x: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let rows: Vec<Option<(usize, Vec<f64>)>> = values
        .par_iter()
        .map(|&x| local_weights(&sorted_x, x, h, kernel, n))
        .collect();
    let mut starts = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut weights = Vec::new();
    offsets.push(0);
    for (point, row) in rows.into_iter().enumerate() {
        let (start, w) = row.ok_or(Error::SingularSmoother {
            column,
            point,
            x: values[point],
            bandwidth: h,
        })?;
        starts.push(start);
        weights.extend_from_slice(&w);
        offsets.push(weights.len());
    }
    Ok(SmootherMatrix {
        n,
        h,
        column,
        kernel,
        centered: false,
        sorted_x,
        order,
        starts,
        offsets,
        weights,
    })
}

/// (I − 11ᵀ/n)·S.
pub fn center(s: &SmootherMatrix) -> SmootherMatrix {
    let mut c = s.clone();
    c.centered = true;
    c
}

impl SmootherMatrix {
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

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Predictor values in ascending order.
    pub fn sorted_x(&self) -> &[f64] {
        &self.sorted_x
    }

    /// Original index of each sorted position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Reorders `v` into ascending-x order.
    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| v[i]).collect()
    }

    /// S·v, or S*·v when centered.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match smoother size");
        let vs = self.gather(v);
        let mut out: Vec<f64> = (0..self.n)
            .map(|i| {
                let w = &self.weights[self.offsets[i]..self.offsets[i + 1]];
                dot(w, &vs[self.starts[i]..])
            })
            .collect();
        if self.centered {
            let mean = out.iter().sum::<f64>() / self.n as f64;
            out.iter_mut().for_each(|o| *o -= mean);
        }
        out
    }

    /// Nonzero-support entries of row i as (column, weight), before centering.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = &self.weights[self.offsets[i]..self.offsets[i + 1]];
        w.iter()
            .enumerate()
            .map(move |(k, &wk)| (self.order[self.starts[i] + k], wk))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.row_entries(i) {
                m[(i, j)] += w;
            }
        }
        if self.centered {
            let n = self.n as f64;
            for mut col in m.column_iter_mut() {
                let mean: f64 = col.sum() / n;
                col.iter_mut().for_each(|v| *v -= mean);
            }
        }
        m
    }
}
