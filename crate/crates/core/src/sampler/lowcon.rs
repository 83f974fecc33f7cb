use rand::seq::SliceRandom;
use rand::Rng;

use super::{Method, Subsample};
use crate::data::ScaledView;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Random Latin hypercubes drawn per call; the most spread-out one is kept.
pub const LHS_CANDIDATES: usize = 1000;

/// Simplified LowCon: a maximin Latin hypercube of `n` points in [0,1]^p,
/// each mapped to its Euclidean nearest row. Rows may repeat.
pub fn lowcon_select(view: &ScaledView<'_>, n: usize, rng: &mut SeededRng) -> Result<Subsample> {
    let total = view.n_rows();
    if n > total {
        return Err(Error::SubsampleTooLarge {
            n,
            available: total,
        });
    }
    let p = view.n_cols();
    let design = maximin_lhs(n, p, LHS_CANDIDATES, rng);
    let values = view.values();
    let indices = design
        .chunks_exact(p.max(1))
        .map(|target| nearest_row(values, p, target))
        .collect();
    Ok(Subsample {
        indices,
        q_used: None,
        method: Method::Lowcon,
        seed: rng.seed(),
        audit: None,
    })
}

fn nearest_row(values: &[f64], p: usize, target: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, row) in values.chunks_exact(p).enumerate() {
        let mut d = 0.0;
        for (a, b) in row.iter().zip(target) {
            d += (a - b) * (a - b);
            if d >= best.0 {
                break;
            }
        }
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Best of `candidates` random Latin hypercubes under the maximin criterion.
/// Row-major n×p.
pub fn maximin_lhs(n: usize, p: usize, candidates: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut best: Vec<f64> = Vec::new();
    let mut best_sq = f64::NEG_INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..candidates.max(1) {
        let mut pts = vec![0.0; n * p];
        for j in 0..p {
            perm.shuffle(rng);
            for (i, &slot) in perm.iter().enumerate() {
                let u: f64 = rng.random();
                pts[i * p + j] = (slot as f64 + u) / n as f64;
            }
        }
        if let Some(d) = min_sq_distance_above(&pts, p, best_sq) {
            best_sq = d;
            best = pts;
        }
    }
    best
}

/// Smallest pairwise Euclidean distance of a row-major point set.
pub fn min_pairwise_distance(points: &[f64], p: usize) -> f64 {
    min_sq_distance_above(points, p, f64::NEG_INFINITY)
        .unwrap_or(f64::INFINITY)
        .sqrt()
}

/// Minimum squared distance, or `None` as soon as it is known to be ≤ `floor`.
fn min_sq_distance_above(points: &[f64], p: usize, floor: f64) -> Option<f64> {
    let n = if p == 0 { 0 } else { points.len() / p };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a * p].total_cmp(&points[b * p]));
    let mut min = f64::INFINITY;
    for (k, &a) in order.iter().enumerate() {
        let ra = &points[a * p..(a + 1) * p];
        for &b in &order[k + 1..] {
            let rb = &points[b * p..(b + 1) * p];
            let dx = rb[0] - ra[0];
            if dx * dx >= min {
                break;
            }
            let d: f64 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
            if d < min {
                min = d;
                if min <= floor {
                    return None;
                }
            }
        }
    }
    (min > floor).then_some(min)
}
