use rand::Rng;
use serde::Serialize;

use super::gf::GaloisField;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// n×p array of levels in `0..q`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthogonalArray {
    levels: Vec<u32>,
    n_rows: usize,
    n_cols: usize,
    q: u32,
    strength: u32,
}

impl OrthogonalArray {
    /// Wraps an arbitrary level matrix; `strength` is 0 until verified.
    pub fn from_levels(levels: Vec<u32>, n_cols: usize, q: u32) -> Result<Self> {
        if n_cols == 0 || levels.len() % n_cols != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} levels do not fill rows of {n_cols} columns",
                levels.len()
            )));
        }
        if let Some(&bad) = levels.iter().find(|&&v| v >= q) {
            return Err(Error::InvalidArgument(format!(
                "level {bad} outside 0..{q}"
            )));
        }
        Ok(Self {
            n_rows: levels.len() / n_cols,
            levels,
            n_cols,
            q,
            strength: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Strength confirmed by [`verify_strength`] at construction (0 if unverified).
    pub fn strength(&self) -> u32 {
        self.strength
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.levels[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.levels[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.levels.chunks(self.n_cols)
    }

    /// Overwrites one entry; clears the verified strength.
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        assert!(v < self.q, "level {v} outside 0..{}", self.q);
        self.levels[i * self.n_cols + j] = v;
        self.strength = 0;
    }
}

/// Builds OA(λq², p, q, 2) from GF(q).
///
/// Rows run over (a, b) ∈ GF(q)² in lexicographic integer order. Column 0 is
/// `a`, then one column `a·c + b` per multiplier c = 0, 1, …, q−1. The first
/// `p` columns are kept and the block is stacked `lambda` times.
pub fn construct_oa(q: u32, p: usize, lambda: usize) -> Result<OrthogonalArray> {
    let max = q as usize + 1;
    if p > max {
        return Err(Error::TooManyColumns { p, q, max });
    }
    if p == 0 || lambda == 0 {
        return Err(Error::InvalidArgument(
            "need at least one column and one copy".into(),
        ));
    }
    let field = GaloisField::new(q)?;
    let mut block = Vec::with_capacity((q * q) as usize * p);
    for a in 0..q {
        for b in 0..q {
            block.push(a);
            for c in 0..(p as u32).saturating_sub(1) {
                block.push(field.add(field.mul(a, c), b));
            }
        }
    }
    let levels = block.repeat(lambda);
    let mut oa = OrthogonalArray::from_levels(levels, p, q)?;
    let report = verify_strength(&oa);
    if let Some(v) = report.violation {
        return Err(Error::InvalidArgument(format!(
            "constructed array failed strength audit at columns {:?}",
            v.columns
        )));
    }
    oa.strength = 2;
    Ok(oa)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrengthViolation {
    pub columns: (usize, usize),
    pub levels: (u32, u32),
    pub count: usize,
    pub expected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrengthReport {
    /// Occurrences of each ordered level pair when the array passes.
    pub count_per_pair: Option<usize>,
    pub violation: Option<StrengthViolation>,
}

impl StrengthReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Exact strength-2 audit: every ordered level pair in every column pair occurs n/q² times.
pub fn verify_strength(a: &OrthogonalArray) -> StrengthReport {
    let q = a.q as usize;
    let n = a.n_rows;
    let expected = n / (q * q);
    let divisible = n % (q * q) == 0;
    let mut counts = vec![0usize; q * q];
    for j in 0..a.n_cols {
        for k in j + 1..a.n_cols {
            counts.iter_mut().for_each(|c| *c = 0);
            for row in a.rows() {
                counts[row[j] as usize * q + row[k] as usize] += 1;
            }
            for (cell, &count) in counts.iter().enumerate() {
                if !divisible || count != expected {
                    return StrengthReport {
                        count_per_pair: None,
                        violation: Some(StrengthViolation {
                            columns: (j, k),
                            levels: ((cell / q) as u32, (cell % q) as u32),
                            count,
                            expected,
                        }),
                    };
                }
            }
        }
    }
    if a.n_cols < 2 {
        // a single column: strength 2 is vacuous, still require n divisible by q²
        if !divisible {
            return StrengthReport {
                count_per_pair: None,
                violation: Some(StrengthViolation {
                    columns: (0, 0),
                    levels: (0, 0),
                    count: n,
                    expected: 0,
                }),
            };
        }
    }
    StrengthReport {
        count_per_pair: Some(expected),
        violation: None,
    }
}

/// Weak strength t⁻ (t = 1 or 2): level-combination counts within every
/// t-column projection differ by at most one, counting absent combinations as 0.
pub fn verify_weak_strength(levels: &[u32], n_cols: usize, q: u32, t: usize) -> Result<bool> {
    if n_cols == 0 || levels.len() % n_cols != 0 {
        return Err(Error::InvalidArgument("ragged level matrix".into()));
    }
    if levels.iter().any(|&v| v >= q) {
        return Err(Error::InvalidArgument(format!("level outside 0..{q}")));
    }
    let q = q as usize;
    let spread_ok = |counts: &[usize]| {
        let max = counts.iter().max().copied().unwrap_or(0);
        let min = counts.iter().min().copied().unwrap_or(0);
        max - min <= 1
    };
    match t {
        1 => {
            for j in 0..n_cols {
                let mut counts = vec![0usize; q];
                for row in levels.chunks(n_cols) {
                    counts[row[j] as usize] += 1;
                }
                if !spread_ok(&counts) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        2 => {
            for j in 0..n_cols {
                for k in j + 1..n_cols {
                    let mut counts = vec![0usize; q * q];
                    for row in levels.chunks(n_cols) {
                        counts[row[j] as usize * q + row[k] as usize] += 1;
                    }
                    if !spread_ok(&counts) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        _ => Err(Error::InvalidArgument(format!(
            "weak strength is checked for t = 1 or 2, got {t}"
        ))),
    }
}

/// Points jittered uniformly inside the OA cells: x = (a + U)/q.
#[derive(Debug, Clone)]
pub struct RandomOaSample {
    pub points: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub q: u32,
    pub seed: u64,
}

impl RandomOaSample {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

pub fn random_oa(a: &OrthogonalArray, rng: &mut SeededRng) -> RandomOaSample {
    let q = a.q as f64;
    let points = a
        .levels
        .iter()
        .map(|&level| {
            let u: f64 = rng.random();
            jitter_in_cell(level, u, q)
        })
        .collect();
    RandomOaSample {
        points,
        n_rows: a.n_rows,
        n_cols: a.n_cols,
        q: a.q,
        seed: rng.seed(),
    }
}

/// (level + u)/q nudged so that floor(x·q) recovers `level` exactly.
fn jitter_in_cell(level: u32, u: f64, q: f64) -> f64 {
    let level_f = level as f64;
    let mut x = (level_f + u) / q;
    while (x * q).floor() > level_f {
        x = x.next_down();
    }
    while (x * q).floor() < level_f {
        x = x.next_up();
    }
    x
}
